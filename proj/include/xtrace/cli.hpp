#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xtrace/dataset_io.hpp"
#include "xtrace/eval.hpp"
#include "xtrace/group_trace.hpp"
#include "xtrace/report.hpp"
#include "xtrace/simgen.hpp"

namespace xtrace::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// World spec file (JSON)

inline WorldSpec world_spec_from_json(const ordered_json& j) {
    WorldSpec spec = default_world_spec();
    if (j.contains("chains")) {
        spec.chains.clear();
        for (const auto& c : j.at("chains")) {
            spec.chains.push_back({ChainId{c.at("id").get<std::string>()},
                                   parse_chain_model(c.at("model").get<std::string>()),
                                   AssetId{c.at("asset").get<std::string>()}});
        }
        spec.pairs.clear();
    }
    if (j.contains("pairs")) {
        spec.pairs.clear();
        for (const auto& p : j.at("pairs")) spec.pairs.push_back(pair_from_json(p));
    }
    if (spec.pairs.empty()) {
        for (const ChainSpec& src : spec.chains) {
            for (const ChainSpec& dst : spec.chains) {
                if (src.id == dst.id) continue;
                spec.pairs.push_back({src.id, src.native_asset, dst.id, dst.native_asset});
            }
        }
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("duration")) spec.duration = j.at("duration").get<Timestamp>();
    if (j.contains("backgroundPerMin")) spec.background_per_min = j.at("backgroundPerMin").get<double>();
    if (j.contains("swapsPerPair")) spec.swaps_per_pair = j.at("swapsPerPair").get<int>();
    if (j.contains("feeLo")) spec.fee_lo = j.at("feeLo").get<double>();
    if (j.contains("feeHi")) spec.fee_hi = j.at("feeHi").get<double>();
    if (j.contains("delayLo")) spec.delay_lo = j.at("delayLo").get<Timestamp>();
    if (j.contains("delayHi")) spec.delay_hi = j.at("delayHi").get<Timestamp>();
    if (j.contains("priceVolatility")) spec.price_volatility = j.at("priceVolatility").get<double>();
    if (j.contains("priceStep")) spec.price_step = j.at("priceStep").get<Timestamp>();
    if (j.contains("dustRate")) spec.dust_rate = j.at("dustRate").get<double>();
    if (j.contains("allowDecoys")) spec.allow_decoys = j.at("allowDecoys").get<bool>();
    if (j.contains("decoysPerSwap")) spec.decoys_per_swap = j.at("decoysPerSwap").get<int>();
    if (j.contains("bridge")) spec.bridge = BridgeId{j.at("bridge").get<std::string>()};
    if (j.contains("sybil")) {
        for (const auto& s : j.at("sybil")) {
            SybilSpec sy;
            if (s.contains("id")) sy.scenario_id = s.at("id").get<std::string>();
            if (s.contains("leafCount")) sy.leaf_count = s.at("leafCount").get<int>();
            if (s.contains("depth")) sy.depth = s.at("depth").get<int>();
            if (s.contains("queryDepth")) sy.query_depth = s.at("queryDepth").get<int>();
            if (s.contains("pairIndex")) sy.pair_index = s.at("pairIndex").get<int>();
            spec.sybil_scenarios.push_back(std::move(sy));
        }
    }
    return spec;
}

inline WorldSpec load_world_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open world spec " + path.string());
    ordered_json j = ordered_json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError(1, "world spec is not valid JSON");
    return world_spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Shared helpers

inline TraceConfig load_trace_config(const std::string& path, TraceConfig base) {
    if (path.empty()) return base;
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open config " + path);
    ordered_json j = ordered_json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError(1, "config is not valid JSON");
    return config_from_json(j, std::move(base));
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty() || out_path == "-") {
        out << text;
    } else {
        std::ofstream file = detail::open_out(out_path);
        file << text;
    }
}

inline TransferRef resolve_target(const Dataset& dataset, const std::string& tx_id,
                                  const std::string& chain) {
    if (!chain.empty()) {
        dataset.store.get(ChainId{chain}, tx_id);
        return TransferRef{ChainId{chain}, tx_id};
    }
    std::vector<ChainId> chains = dataset.store.chains_with_tx(tx_id);
    if (chains.empty()) throw NotFoundError("no transfer " + tx_id + " on any chain");
    if (chains.size() > 1) {
        throw ConfigError("tx id " + tx_id + " exists on several chains; pass --chain");
    }
    return TransferRef{chains.front(), tx_id};
}

// Default config for a dataset target: source pairs are the manifest pairs
// whose destination side matches the target.
inline TraceConfig default_config_for(const Dataset& dataset, const TransferRef& target) {
    const Transfer& t = dataset.store.resolve(target);
    TraceConfig cfg;
    cfg.source_pairs = dataset.source_pairs_for(t.chain, t.asset);
    return cfg;
}

inline std::vector<TransferRef> read_targets_file(const fs::path& path) {
    std::ifstream in = detail::open_in(path);
    std::vector<TransferRef> targets;
    detail::each_data_line(in, [&](std::size_t line, const std::string& text) {
        std::size_t comma = text.find(',');
        if (comma == std::string::npos) {
            throw ParseError(line, "expected 'chain,txId'");
        }
        targets.push_back(TransferRef{ChainId{text.substr(0, comma)}, text.substr(comma + 1)});
    });
    return targets;
}

// ---------------------------------------------------------------------------
// Entry point

/**
 * Subcommands: simulate, trace-single, trace-group, evaluate, ingest. On any
 * library error the process prints one machine-parsable JSON error record to
 * the error stream and exits non-zero.
 */
inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"cross-chain transfer tracing toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string format = "text";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool strict = true;
    app.add_option("--config", config_path, "trace config overrides (JSON)");
    app.add_option("--out", out_path, "output path (default: stdout or subcommand default)");
    app.add_option("--format", format, "report format")
        ->check(CLI::IsMember({"text", "structured"}));
    app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_flag("--strict,!--lenient", strict, "abort on malformed records (default strict)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset directory");
    std::string spec_path;
    simulate->add_option("--spec", spec_path, "world spec (JSON); defaults to the demo world");

    // trace-single
    auto* single = app.add_subcommand("trace-single", "backward-trace one destination transfer");
    std::string dataset_dir, target_tx, target_chain;
    single->add_option("--dataset", dataset_dir, "dataset directory")->required();
    single->add_option("--target", target_tx, "destination tx id")->required();
    single->add_option("--chain", target_chain, "destination chain (when the tx id is ambiguous)");

    // trace-group
    auto* group = app.add_subcommand("trace-group", "joint trace over a target set");
    std::string group_dataset, targets_path, scenario_id;
    int depth = 3;
    int threshold = 2;
    bool top_only = false;
    group->add_option("--dataset", group_dataset, "dataset directory")->required();
    group->add_option("--targets", targets_path, "targets file with 'chain,txId' lines");
    group->add_option("--scenario", scenario_id, "take targets from this sybil scenario");
    group->add_option("--depth", depth, "ancestry depth");
    group->add_option("--threshold", threshold, "common-ancestor vote threshold");
    group->add_flag("--top-only", top_only, "expand ancestry of the top candidate only");

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score trace reports against ground truth");
    std::string results_dir, truth_path;
    evaluate_cmd->add_option("--results", results_dir, "directory of structured trace reports")
        ->required();
    evaluate_cmd->add_option("--truth", truth_path, "ground-truth link file (CSV)")->required();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "convert an external swap file into a dataset");
    std::string input_path, thresholds_path;
    ingest->add_option("--input", input_path, "swap records (JSON lines)")->required();
    ingest->add_option("--thresholds", thresholds_path,
                       "per-asset inbound minimums (JSON), enables hf/mini tiers");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (simulate->parsed()) {
            WorldSpec spec = spec_path.empty() ? default_world_spec() : load_world_spec(spec_path);
            if (seed_set) spec.seed = seed;
            if (out_path.empty()) throw ConfigError("simulate needs --out <dataset dir>");
            World world = generate_world(spec);
            write_dataset(world, out_path);
            out << "dataset written to " << out_path << " (" << world.store.size()
                << " transfers, " << world.truth.links.size() << " links)\n";
        } else if (single->parsed()) {
            Dataset dataset = load_dataset(dataset_dir);
            TransferRef target = resolve_target(dataset, target_tx, target_chain);
            TraceConfig cfg = load_trace_config(config_path, default_config_for(dataset, target));
            TraceResult result =
                trace_single(dataset.store, dataset.prices, dataset.store.resolve(target), cfg);
            emit(format == "structured" ? trace_result_to_json(result).dump(2) + "\n"
                                        : trace_result_to_text(result),
                 out_path, out);
        } else if (group->parsed()) {
            Dataset dataset = load_dataset(group_dataset);
            GroupQuery query;
            if (!targets_path.empty()) {
                query.targets = read_targets_file(targets_path);
            } else if (!scenario_id.empty()) {
                auto it = dataset.truth.sybil.find(scenario_id);
                if (it == dataset.truth.sybil.end()) {
                    throw NotFoundError("no sybil scenario " + scenario_id + " in dataset");
                }
                query.targets = it->second.leaves;
            } else {
                throw ConfigError("trace-group needs --targets or --scenario");
            }
            query.ancestry_depth = depth;
            query.vote_threshold = threshold;
            query.top_candidate_only = top_only;
            std::set<SourcePair> pairs;
            for (const TransferRef& t : query.targets) {
                const Transfer& transfer = dataset.store.resolve(t);
                for (const SourcePair& p :
                     dataset.source_pairs_for(transfer.chain, transfer.asset)) {
                    pairs.insert(p);
                }
            }
            query.trace.source_pairs.assign(pairs.begin(), pairs.end());
            query.trace = load_trace_config(config_path, std::move(query.trace));
            GroupResult result = trace_group(dataset.store, dataset.prices, query);
            emit(format == "structured" ? group_result_to_json(result).dump(2) + "\n"
                                        : group_result_to_text(result),
                 out_path, out);
        } else if (evaluate_cmd->parsed()) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(results_dir)) {
                if (entry.is_regular_file() && entry.path().extension() == ".json") {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            std::map<TransferRef, TraceResult> results;
            for (const fs::path& file : files) {
                std::ifstream in = detail::open_in(file);
                ordered_json j = ordered_json::parse(in, nullptr, false);
                if (j.is_discarded()) throw ParseError(1, "invalid report " + file.string());
                TraceResult r = trace_result_from_json(j);
                results.emplace(r.target, std::move(r));
            }
            GroundTruth truth;
            truth.links = read_links(truth_path);
            EvalReport report = evaluate(results, truth);
            emit(format == "structured" ? eval_report_to_json(report).dump(2) + "\n"
                                        : eval_report_to_text(report),
                 out_path, out);
        } else if (ingest->parsed()) {
            if (out_path.empty()) throw ConfigError("ingest needs --out <dataset dir>");
            std::optional<TierPolicy> policy;
            if (!thresholds_path.empty()) {
                std::ifstream in = detail::open_in(thresholds_path);
                ordered_json j = ordered_json::parse(in, nullptr, false);
                if (j.is_discarded()) throw ParseError(1, "thresholds file is not valid JSON");
                TierPolicy p;
                for (const auto& [asset, value] : j.items()) {
                    p.min_inbound[AssetId{asset}] = Amount::parse(value.get<std::string>());
                }
                policy = std::move(p);
            }
            LoadedSwaps loaded = ingest_swaps(input_path, out_path, strict, policy, seed);
            out << "ingested " << loaded.records.size() << " swap records into " << out_path
                << "\n";
            for (const ParseIssue& issue : loaded.issues) {
                err << "warning: line " << issue.line << ": " << issue.message << "\n";
            }
        }
    } catch (const Error& e) {
        ordered_json record;
        record["error"] = errc_name(e.code());
        record["message"] = e.what();
        err << record.dump() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace xtrace::cli
