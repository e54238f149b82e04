#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xtrace/eval.hpp"
#include "xtrace/format.hpp"
#include "xtrace/group_trace.hpp"
#include "xtrace/orchestrator.hpp"
#include "xtrace/single_trace.hpp"

namespace xtrace {

using ordered_json = nlohmann::ordered_json;

// Scores are rendered with six fixed decimals everywhere so that reports are
// byte-stable across runs.
inline constexpr int kScoreDigits = 6;

// ---------------------------------------------------------------------------
// Trace configuration

inline ordered_json config_to_json(const TraceConfig& cfg) {
    ordered_json j;
    j["backwardWindow"] = cfg.backward_window;
    j["settlementDelay"] = cfg.settlement_delay;
    j["timestampSkew"] = cfg.timestamp_skew;
    j["priceBuffer"] = cfg.price_buffer;
    j["timeDecay"] = cfg.time_decay;
    j["weightTime"] = cfg.weight_time;
    j["weightAmount"] = cfg.weight_amount;
    j["feeRangeNorm"] = cfg.fee_range_norm;
    j["feeMax"] = cfg.fee_max;
    j["tightHalfWindow"] = cfg.tight_half_window;
    ordered_json pairs = ordered_json::array();
    for (const SourcePair& p : cfg.source_pairs) {
        pairs.push_back({{"chain", p.chain.id}, {"asset", p.asset.id}});
    }
    j["sourcePairs"] = std::move(pairs);
    return j;
}

// Applies the fields present in j on top of base; unknown keys are rejected.
inline TraceConfig config_from_json(const ordered_json& j, TraceConfig base = {}) {
    for (const auto& [key, value] : j.items()) {
        if (key == "backwardWindow") base.backward_window = value.get<Timestamp>();
        else if (key == "settlementDelay") base.settlement_delay = value.get<Timestamp>();
        else if (key == "timestampSkew") base.timestamp_skew = value.get<Timestamp>();
        else if (key == "priceBuffer") base.price_buffer = value.get<double>();
        else if (key == "timeDecay") base.time_decay = value.get<double>();
        else if (key == "weightTime") base.weight_time = value.get<double>();
        else if (key == "weightAmount") base.weight_amount = value.get<double>();
        else if (key == "feeRangeNorm") base.fee_range_norm = value.get<double>();
        else if (key == "feeMax") base.fee_max = value.get<double>();
        else if (key == "tightHalfWindow") base.tight_half_window = value.get<Timestamp>();
        else if (key == "sourcePairs") {
            base.source_pairs.clear();
            for (const auto& p : value) {
                base.source_pairs.push_back(SourcePair{ChainId{p.at("chain").get<std::string>()},
                                                       AssetId{p.at("asset").get<std::string>()}});
            }
        } else {
            throw ConfigError("unknown trace config key: " + key);
        }
    }
    return base;
}

inline std::string config_digest(const TraceConfig& cfg) {
    return hex64(fnv1a(config_fingerprint(cfg)));
}

// ---------------------------------------------------------------------------
// Single-trace reports

inline ordered_json trace_result_to_json(const TraceResult& result) {
    ordered_json j;
    j["target"] = {{"chain", result.target.chain.id}, {"txId", result.target.tx_id}};
    j["config"] = config_to_json(result.config);
    j["configDigest"] = config_digest(result.config);
    ordered_json warnings = ordered_json::array();
    for (const PairNote& w : result.warnings) {
        warnings.push_back(
            {{"chain", w.chain.id}, {"asset", w.asset.id}, {"message", w.message}});
    }
    j["warnings"] = std::move(warnings);
    ordered_json candidates = ordered_json::array();
    int rank = 1;
    for (const ScoredCandidate& c : result.candidates) {
        ordered_json e;
        e["rank"] = rank++;
        e["srcTxId"] = c.link.src.tx_id;
        e["srcChain"] = c.link.src.chain.id;
        e["bridge"] = c.link.bridge.id;
        e["sTime"] = format_fixed(c.s_time, kScoreDigits);
        e["sAmt"] = format_fixed(c.s_amt, kScoreDigits);
        e["sFinal"] = format_fixed(c.s_final, kScoreDigits);
        e["impliedFeeRate"] = format_fixed(c.implied_fee_rate, kScoreDigits);
        e["gap"] = c.gap;
        candidates.push_back(std::move(e));
    }
    j["candidates"] = std::move(candidates);
    return j;
}

inline TraceResult trace_result_from_json(const ordered_json& j) {
    TraceResult result;
    result.target = TransferRef{ChainId{j.at("target").at("chain").get<std::string>()},
                                j.at("target").at("txId").get<std::string>()};
    result.config = config_from_json(j.at("config"));
    for (const auto& w : j.at("warnings")) {
        result.warnings.push_back(PairNote{ChainId{w.at("chain").get<std::string>()},
                                           AssetId{w.at("asset").get<std::string>()},
                                           w.at("message").get<std::string>()});
    }
    for (const auto& e : j.at("candidates")) {
        ScoredCandidate c;
        c.link.src = TransferRef{ChainId{e.at("srcChain").get<std::string>()},
                                 e.at("srcTxId").get<std::string>()};
        c.link.dst = result.target;
        c.link.bridge = BridgeId{e.at("bridge").get<std::string>()};
        c.s_time = parse_double(e.at("sTime").get<std::string>());
        c.s_amt = parse_double(e.at("sAmt").get<std::string>());
        c.s_final = parse_double(e.at("sFinal").get<std::string>());
        c.implied_fee_rate = parse_double(e.at("impliedFeeRate").get<std::string>());
        c.gap = e.at("gap").get<Timestamp>();
        result.candidates.push_back(std::move(c));
    }
    return result;
}

inline std::string trace_result_to_text(const TraceResult& result) {
    std::ostringstream out;
    out << "trace report for " << result.target.str() << "\n";
    out << "config digest " << config_digest(result.config) << "  ("
        << config_fingerprint(result.config) << ")\n";
    for (const PairNote& w : result.warnings) {
        out << "warning [" << w.chain.id << "/" << w.asset.id << "] " << w.message << "\n";
    }
    out << "rank  source                     sTime     sAmt      sFinal    fee       gap\n";
    int rank = 1;
    for (const ScoredCandidate& c : result.candidates) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-5d %-26s %-9s %-9s %-9s %-9s %lld\n", rank++,
                      c.link.src.str().c_str(), format_fixed(c.s_time, kScoreDigits).c_str(),
                      format_fixed(c.s_amt, kScoreDigits).c_str(),
                      format_fixed(c.s_final, kScoreDigits).c_str(),
                      format_fixed(c.implied_fee_rate, kScoreDigits).c_str(),
                      static_cast<long long>(c.gap));
        out << line;
    }
    if (result.candidates.empty()) out << "(no accepted candidates)\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Group-trace reports

inline ordered_json group_result_to_json(const GroupResult& result) {
    ordered_json j;
    ordered_json ancestors = ordered_json::array();
    for (const auto& [address, count] : result.common_ancestors) {
        const VoteEntry& entry = result.votes.entries.at(address);
        ordered_json a;
        a["address"] = address;
        a["hitCount"] = count;
        a["supportingTargets"] = entry.supporting_targets;
        ordered_json witnesses = ordered_json::array();
        for (const auto& [target_tx, path] : entry.witness_by_target) {
            witnesses.push_back({{"target", target_tx},
                                 {"candidate", path.candidate.str()},
                                 {"ancestor", path.ancestor.str()}});
        }
        a["witnesses"] = std::move(witnesses);
        ancestors.push_back(std::move(a));
    }
    j["commonAncestors"] = std::move(ancestors);

    ordered_json degenerated = ordered_json::array();
    for (const TransferRef& t : result.degenerated_targets) degenerated.push_back(t.str());
    j["degeneratedTargets"] = std::move(degenerated);

    ordered_json votes = ordered_json::array();
    for (const auto& [address, entry] : result.votes.entries) {
        votes.push_back({{"address", address}, {"hit", entry.hit_count}});
    }
    j["votes"] = std::move(votes);

    ordered_json per_target = ordered_json::array();
    for (const auto& [target, trace] : result.per_target) {
        per_target.push_back({{"target", target.str()}, {"result", trace_result_to_json(trace)}});
    }
    for (const auto& [target, error] : result.per_target_errors) {
        per_target.push_back({{"target", target.str()}, {"error", error}});
    }
    j["perTarget"] = std::move(per_target);
    return j;
}

inline std::string group_result_to_text(const GroupResult& result) {
    std::ostringstream out;
    std::size_t targets = result.per_target.size() + result.per_target_errors.size();
    out << "group trace over " << targets << " targets\n";
    out << "common ancestors:\n";
    if (result.common_ancestors.empty()) out << "  (none reached the vote threshold)\n";
    for (const auto& [address, count] : result.common_ancestors) {
        out << "  " << address << "  hit " << count << "/" << targets << "\n";
        const VoteEntry& entry = result.votes.entries.at(address);
        for (const auto& [target_tx, path] : entry.witness_by_target) {
            out << "    target " << target_tx << ": candidate " << path.candidate.str()
                << " <- ancestor " << path.ancestor.str() << "\n";
        }
    }
    out << "degenerated targets:";
    if (result.degenerated_targets.empty()) out << " (none)";
    out << "\n";
    for (const TransferRef& t : result.degenerated_targets) out << "  " << t.str() << "\n";
    for (const auto& [target, error] : result.per_target_errors) {
        out << "error for " << target.str() << ": " << error << "\n";
    }
    for (const auto& [target, trace] : result.per_target) {
        out << "\n" << trace_result_to_text(trace);
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Orchestrator transcripts

inline ordered_json transcript_to_json(const std::vector<TranscriptEntry>& transcript) {
    ordered_json arr = ordered_json::array();
    for (const TranscriptEntry& e : transcript) {
        ordered_json j;
        j["step"] = e.step;
        j["belief"] = e.belief_bits;
        j["action"] = action_kind_name(e.action);
        j["brief"] = e.brief_digest;
        j["status"] = finding_status_name(e.status);
        j["note"] = e.note;
        arr.push_back(std::move(j));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Evaluation reports

inline ordered_json eval_report_to_json(const EvalReport& report) {
    ordered_json j;
    j["configDigest"] = report.config_digest;
    auto metrics_json = [](const PairMetrics& m) {
        ordered_json e;
        e["n"] = m.n;
        e["recall"] = format_fixed(m.recall, 1);
        ordered_json hits;
        for (std::size_t i = 0; i < kHitLevels.size(); ++i) {
            hits["hit@" + std::to_string(kHitLevels[i])] = format_fixed(m.hit_at[i], 1);
        }
        e["hitAtK"] = std::move(hits);
        return e;
    };
    ordered_json pairs;
    for (const auto& [key, metrics] : report.per_pair) pairs[key] = metrics_json(metrics);
    j["perPair"] = std::move(pairs);
    j["overall"] = metrics_json(report.overall);
    j["multiTruthTargets"] = report.multi_truth_targets;
    ordered_json cases = ordered_json::array();
    for (const CaseOutcome& c : report.cases) {
        ordered_json e;
        e["target"] = c.target.str();
        e["pair"] = c.pair_key;
        e["truthFound"] = c.truth_found;
        if (c.truth_rank) e["truthRank"] = *c.truth_rank;
        if (c.multi_truth) e["multiTruth"] = true;
        cases.push_back(std::move(e));
    }
    j["cases"] = std::move(cases);
    return j;
}

// Plain-text table with one row per pair: Recall, Hit@1..Hit@50.
inline std::string eval_report_to_text(const EvalReport& report) {
    std::ostringstream out;
    out << "evaluation report (config " << report.config_digest << ")\n";
    char header[160];
    std::snprintf(header, sizeof(header), "%-14s %6s %8s %8s %8s %8s %8s %8s %8s\n", "Pair", "N",
                  "Recall", "Hit@1", "Hit@3", "Hit@5", "Hit@10", "Hit@20", "Hit@50");
    out << header;
    auto row = [&](const std::string& name, const PairMetrics& m) {
        char line[200];
        std::snprintf(line, sizeof(line), "%-14s %6d %8s %8s %8s %8s %8s %8s %8s\n", name.c_str(),
                      m.n, format_fixed(m.recall, 1).c_str(), format_fixed(m.hit_at[0], 1).c_str(),
                      format_fixed(m.hit_at[1], 1).c_str(), format_fixed(m.hit_at[2], 1).c_str(),
                      format_fixed(m.hit_at[3], 1).c_str(), format_fixed(m.hit_at[4], 1).c_str(),
                      format_fixed(m.hit_at[5], 1).c_str());
        out << line;
    };
    for (const auto& [key, metrics] : report.per_pair) row(key, metrics);
    row("overall", report.overall);
    if (report.multi_truth_targets > 0) {
        out << "note: " << report.multi_truth_targets
            << " targets had multiple truth links (any-hit semantics)\n";
    }
    return out.str();
}

}  // namespace xtrace
