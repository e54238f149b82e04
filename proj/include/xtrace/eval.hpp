#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xtrace/format.hpp"
#include "xtrace/simgen.hpp"
#include "xtrace/single_trace.hpp"

namespace xtrace {

inline constexpr std::array<int, 6> kHitLevels{1, 3, 5, 10, 20, 50};

struct CaseOutcome {
    TransferRef target;
    bool truth_found = false;             // true source anywhere in the candidates
    std::optional<int> truth_rank;        // 1-based rank when found
    std::string pair_key;                 // "srcChain->dstChain"
    bool multi_truth = false;             // evaluated with any-hit semantics
};

struct PairMetrics {
    double recall = 0.0;                  // percent
    std::array<double, kHitLevels.size()> hit_at{};
    int n = 0;
};

struct EvalReport {
    std::map<std::string, PairMetrics> per_pair;
    PairMetrics overall;
    std::string config_digest;
    std::vector<CaseOutcome> cases;  // target order
    int multi_truth_targets = 0;
};

namespace detail {

struct PairTally {
    int n = 0;
    int found = 0;
    std::array<int, kHitLevels.size()> hits{};
};

inline PairMetrics tally_to_metrics(const PairTally& tally) {
    PairMetrics m;
    m.n = tally.n;
    if (tally.n == 0) return m;
    m.recall = 100.0 * tally.found / tally.n;
    for (std::size_t i = 0; i < kHitLevels.size(); ++i) {
        m.hit_at[i] = 100.0 * tally.hits[i] / tally.n;
    }
    return m;
}

}  // namespace detail

// Canonical one-line fingerprint of a trace configuration.
inline std::string config_fingerprint(const TraceConfig& cfg) {
    std::string s;
    s += "window=" + std::to_string(cfg.backward_window);
    s += ";delay=" + std::to_string(cfg.settlement_delay);
    s += ";skew=" + std::to_string(cfg.timestamp_skew);
    s += ";buffer=" + format_shortest(cfg.price_buffer);
    s += ";decay=" + format_shortest(cfg.time_decay);
    s += ";wt=" + format_shortest(cfg.weight_time);
    s += ";wa=" + format_shortest(cfg.weight_amount);
    s += ";norm=" + format_shortest(cfg.fee_range_norm);
    s += ";feemax=" + format_shortest(cfg.fee_max);
    s += ";tight=" + std::to_string(cfg.tight_half_window);
    for (const SourcePair& p : cfg.source_pairs) {
        s += ";src=" + p.chain.id + "/" + p.asset.id;
    }
    return s;
}

/**
 * Recall and Hit@k over per-target trace results against ground truth,
 * grouped by (source chain -> destination chain). Recall counts the true
 * source anywhere in the accepted candidate list; targets with several truth
 * links are scored with any-hit semantics and flagged.
 */
inline EvalReport evaluate(const std::map<TransferRef, TraceResult>& results,
                           const GroundTruth& truth) {
    EvalReport report;
    detail::PairTally overall;
    std::map<std::string, detail::PairTally> per_pair;
    bool have_config = false;

    for (const auto& [target, result] : results) {
        std::vector<const GroundTruthLink*> links = truth.links_for(target);
        if (links.empty()) {
            throw ConfigError("target without a ground-truth link: " + target.str());
        }
        if (!have_config) {
            report.config_digest = hex64(fnv1a(config_fingerprint(result.config)));
            have_config = true;
        }

        CaseOutcome outcome;
        outcome.target = target;
        outcome.multi_truth = links.size() > 1;
        if (outcome.multi_truth) ++report.multi_truth_targets;

        const GroundTruthLink* matched = nullptr;
        for (std::size_t i = 0; i < result.candidates.size(); ++i) {
            const TransferRef& src = result.candidates[i].link.src;
            for (const GroundTruthLink* l : links) {
                if (l->link.src == src) {
                    outcome.truth_found = true;
                    outcome.truth_rank = static_cast<int>(i) + 1;
                    matched = l;
                    break;
                }
            }
            if (outcome.truth_found) break;
        }
        const GroundTruthLink* pair_link = matched ? matched : links.front();
        outcome.pair_key = pair_link->link.src.chain.id + "->" + pair_link->link.dst.chain.id;

        detail::PairTally& tally = per_pair[outcome.pair_key];
        for (detail::PairTally* t : {&tally, &overall}) {
            t->n += 1;
            if (outcome.truth_found) t->found += 1;
            for (std::size_t k = 0; k < kHitLevels.size(); ++k) {
                if (outcome.truth_rank && *outcome.truth_rank <= kHitLevels[k]) t->hits[k] += 1;
            }
        }
        report.cases.push_back(std::move(outcome));
    }

    for (const auto& [key, tally] : per_pair) {
        report.per_pair.emplace(key, detail::tally_to_metrics(tally));
    }
    report.overall = detail::tally_to_metrics(overall);
    return report;
}

}  // namespace xtrace
