#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xtrace/single_trace.hpp"
#include "xtrace/transfer_store.hpp"

namespace xtrace {

/// Joint trace over a suspected Sybil cluster of destination transfers.
struct GroupQuery {
    std::vector<TransferRef> targets;
    int ancestry_depth = 3;  // upstream hops explored per source candidate
    AncestryOptions ancestry;
    TraceConfig trace;
    int vote_threshold = 2;  // minimum destination transfers sharing an ancestor
    // Restrict ancestry to the best-ranked candidate per target instead of
    // the full accepted set.
    bool top_candidate_only = false;
    bool parallel = true;

    void validate() const {
        if (targets.empty()) throw ConfigError("group query needs at least one target");
        std::set<TransferRef> uniq(targets.begin(), targets.end());
        if (uniq.size() != targets.size()) {
            throw ConfigError("group query targets must be pairwise distinct");
        }
        if (ancestry_depth < 1) throw RangeError("ancestry depth must be >= 1");
        if (vote_threshold < 2) throw ConfigError("vote threshold must be >= 2");
        trace.validate();
    }
};

// Evidence trail for one (address, target) vote.
struct WitnessPath {
    TransferRef candidate;  // source-side candidate whose ancestry contains the address
    TransferRef ancestor;   // upstream transfer spent by the address
};

struct VoteEntry {
    int hit_count = 0;
    std::vector<TxId> supporting_targets;          // sorted target tx ids
    std::map<TxId, WitnessPath> witness_by_target; // one deterministic path per vote
};

struct VoteTable {
    std::map<Address, VoteEntry> entries;

    int hit(const Address& address) const {
        auto it = entries.find(address);
        return it == entries.end() ? 0 : it->second.hit_count;
    }
};

struct GroupResult {
    std::map<TransferRef, TraceResult> per_target;
    std::map<TransferRef, std::string> per_target_errors;  // isolated failures
    VoteTable votes;
    // (address, hit count) with count >= threshold, by (count desc, address asc).
    std::vector<std::pair<Address, int>> common_ancestors;
    std::vector<TransferRef> degenerated_targets;  // no common-ancestor support
};

// Spender-side addresses of every transfer within max_hops upstream of t.
inline std::vector<Address> ancestor_spenders(const TransferStore& store, const Transfer& t,
                                              int max_hops, const AncestryOptions& opts = {}) {
    std::set<Address> uniq;
    for (const Transfer* pred : store.predecessors_within(t, max_hops, opts)) {
        uniq.insert(pred->spenders.begin(), pred->spenders.end());
    }
    return std::vector<Address>(uniq.begin(), uniq.end());
}

/**
 * Address-level co-occurrence voting. Each destination transfer casts at
 * most one vote for an address: the address gains +1 from a target when it
 * appears in the ancestry of any of that target's source candidates,
 * regardless of how many candidates contain it. The retained witness per
 * vote is the ancestor with the smallest (ord, tx id), ties resolved by
 * candidate tx id.
 */
inline VoteTable vote_common_ancestors(
    const std::map<TransferRef, std::vector<const Transfer*>>& candidates_per_target,
    const TransferStore& store, int max_hops, const AncestryOptions& opts = {}) {
    VoteTable table;
    for (const auto& [target, candidates] : candidates_per_target) {
        std::map<Address, WitnessPath> best;  // address -> minimal witness for this target
        for (const Transfer* candidate : candidates) {
            for (const Transfer* ancestor : store.predecessors_within(*candidate, max_hops, opts)) {
                for (const Address& address : ancestor->spenders) {
                    WitnessPath path{ref_of(*candidate), ref_of(*ancestor)};
                    auto [it, inserted] = best.emplace(address, path);
                    if (!inserted) {
                        const WitnessPath& cur = it->second;
                        auto key = [&store](const WitnessPath& w) {
                            const Transfer& a = store.resolve(w.ancestor);
                            return std::make_tuple(a.ord, w.ancestor.tx_id, w.candidate.tx_id);
                        };
                        if (key(path) < key(cur)) it->second = path;
                    }
                }
            }
        }
        for (auto& [address, path] : best) {
            VoteEntry& entry = table.entries[address];
            entry.hit_count += 1;
            entry.supporting_targets.push_back(target.tx_id);
            entry.witness_by_target.emplace(target.tx_id, path);
        }
    }
    for (auto& [address, entry] : table.entries) {
        std::sort(entry.supporting_targets.begin(), entry.supporting_targets.end());
    }
    return table;
}

/**
 * Group-transfer trace: fan out single traces per target, expand same-chain
 * ancestry over every accepted source candidate, vote, and report the
 * addresses reaching the threshold. Per-target failures are isolated and do
 * not abort the group.
 */
inline GroupResult trace_group(const TransferStore& store, const PriceBook& prices,
                               const GroupQuery& query) {
    query.validate();
    GroupResult result;

    std::vector<TraceResult> traced(query.targets.size());
    std::vector<std::string> errors(query.targets.size());
    std::vector<char> ok(query.targets.size(), 0);
    auto run_one = [&](std::size_t i) {
        try {
            const Transfer& t = store.resolve(query.targets[i]);
            traced[i] = trace_single(store, prices, t, query.trace);
            ok[i] = 1;
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    };
    if (query.parallel && query.targets.size() > 1) {
        std::vector<std::future<void>> futures;
        futures.reserve(query.targets.size());
        for (std::size_t i = 0; i < query.targets.size(); ++i) {
            futures.push_back(std::async(std::launch::async, run_one, i));
        }
        for (auto& f : futures) f.get();
    } else {
        for (std::size_t i = 0; i < query.targets.size(); ++i) run_one(i);
    }

    std::map<TransferRef, std::vector<const Transfer*>> candidates_per_target;
    for (std::size_t i = 0; i < query.targets.size(); ++i) {
        const TransferRef& target = query.targets[i];
        if (!ok[i]) {
            result.per_target_errors.emplace(target, errors[i]);
            candidates_per_target.emplace(target, std::vector<const Transfer*>{});
            continue;
        }
        std::vector<const Transfer*> sources;
        for (const ScoredCandidate& sc : traced[i].candidates) {
            sources.push_back(&store.resolve(sc.link.src));
            if (query.top_candidate_only) break;
        }
        candidates_per_target.emplace(target, std::move(sources));
        result.per_target.emplace(target, std::move(traced[i]));
    }

    result.votes = vote_common_ancestors(candidates_per_target, store, query.ancestry_depth,
                                         query.ancestry);

    for (const auto& [address, entry] : result.votes.entries) {
        if (entry.hit_count >= query.vote_threshold) {
            result.common_ancestors.emplace_back(address, entry.hit_count);
        }
    }
    std::sort(result.common_ancestors.begin(), result.common_ancestors.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });

    std::set<TxId> supported;
    for (const auto& [address, count] : result.common_ancestors) {
        const VoteEntry& entry = result.votes.entries.at(address);
        supported.insert(entry.supporting_targets.begin(), entry.supporting_targets.end());
    }
    for (const TransferRef& target : query.targets) {
        if (!supported.count(target.tx_id)) result.degenerated_targets.push_back(target);
    }
    std::sort(result.degenerated_targets.begin(), result.degenerated_targets.end());
    return result;
}

}  // namespace xtrace
