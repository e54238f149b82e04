#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xtrace/types.hpp"

namespace xtrace {

/// Pruning knobs for predecessor expansion.
struct AncestryOptions {
    // Per-node fanout kept when expanding predecessors; largest amounts win,
    // ties broken by smaller ord then tx id.
    int branching_cap = 64;
    // K latest incoming transfers considered per spender on account chains.
    int account_fanin_limit = 16;
    // Absolute per-asset minimum; transfers strictly below it are excluded
    // from ancestry expansion. Empty map means no dust filtering.
    std::map<AssetId, Amount> dust_min;

    Amount dust_floor(const AssetId& asset) const {
        auto it = dust_min.find(asset);
        return it == dust_min.end() ? Amount{} : it->second;
    }
};

class TransferStore;

/// Single-threaded accumulation phase; the built store is immutable.
class TransferStoreBuilder {
public:
    TransferStoreBuilder& add_chain(const ChainId& chain, ChainModel model) {
        registry_.add(chain, model);
        return *this;
    }

    TransferStoreBuilder& add(Transfer t);

    TransferStore build();

private:
    ChainRegistry registry_;
    std::vector<Transfer> transfers_;
    std::set<std::pair<ChainId, TxId>> seen_;
};

/**
 * Immutable collection of transfers with per-(chain, asset) time and amount
 * indexes, a by-id map and a recipient index for account-model predecessor
 * lookups. Safe for concurrent reads.
 */
class TransferStore {
public:
    using Index = std::uint32_t;

    const ChainRegistry& chains() const { return registry_; }
    std::size_t size() const { return transfers_.size(); }
    const std::vector<Transfer>& transfers() const { return transfers_; }

    const Transfer* find(const ChainId& chain, const TxId& tx_id) const {
        auto it = by_id_.find(std::make_pair(chain, tx_id));
        return it == by_id_.end() ? nullptr : &transfers_[it->second];
    }

    const Transfer& get(const ChainId& chain, const TxId& tx_id) const {
        if (!registry_.contains(chain)) {
            throw InvalidChainError("chain not registered: " + chain.id);
        }
        const Transfer* t = find(chain, tx_id);
        if (!t) throw NotFoundError("no transfer " + tx_id + " on chain " + chain.id);
        return *t;
    }

    const Transfer& resolve(const TransferRef& ref) const { return get(ref.chain, ref.tx_id); }

    // Chains on which an asset has been observed.
    std::vector<ChainId> asset_chains(const AssetId& asset) const {
        std::vector<ChainId> out;
        for (const auto& [key, idx] : buckets_) {
            if (key.second == asset) out.push_back(key.first);
        }
        return out;
    }

    // Chains holding a transfer with this id (normally at most one).
    std::vector<ChainId> chains_with_tx(const TxId& tx_id) const {
        std::vector<ChainId> out;
        for (const auto& [chain, model] : registry_.all()) {
            if (find(chain, tx_id)) out.push_back(chain);
        }
        return out;
    }

    /**
     * Exactly the transfers on (chain, asset) with ts in [time_lo, time_hi]
     * and amount in [amt_lo, amt_hi], ordered by (ts asc, tx id asc). Uses
     * whichever index spans fewer entries, then filters with the other
     * predicate; the result matches a full scan.
     */
    std::vector<const Transfer*> search(const ChainId& chain, const AssetId& asset,
                                        Timestamp time_lo, Timestamp time_hi, double amt_lo,
                                        double amt_hi) const {
        if (time_lo > time_hi || amt_lo > amt_hi) {
            throw RangeError("searchTransfers: empty range bounds");
        }
        if (!registry_.contains(chain)) {
            throw InvalidChainError("chain not registered: " + chain.id);
        }
        auto bucket = buckets_.find(std::make_pair(chain, asset));
        if (bucket == buckets_.end()) return {};
        const PairIndex& idx = bucket->second;

        auto time_begin = std::partition_point(
            idx.by_time.begin(), idx.by_time.end(),
            [&](Index i) { return transfers_[i].ts < time_lo; });
        auto time_end = std::partition_point(
            time_begin, idx.by_time.end(), [&](Index i) { return transfers_[i].ts <= time_hi; });

        auto amt_begin = std::partition_point(
            idx.by_amount.begin(), idx.by_amount.end(),
            [&](Index i) { return transfers_[i].amt.to_double() < amt_lo; });
        auto amt_end = std::partition_point(
            amt_begin, idx.by_amount.end(),
            [&](Index i) { return transfers_[i].amt.to_double() <= amt_hi; });

        std::vector<const Transfer*> out;
        if (time_end - time_begin <= amt_end - amt_begin) {
            for (auto it = time_begin; it != time_end; ++it) {
                const Transfer& t = transfers_[*it];
                double a = t.amt.to_double();
                if (a >= amt_lo && a <= amt_hi) out.push_back(&t);
            }
        } else {
            for (auto it = amt_begin; it != amt_end; ++it) {
                const Transfer& t = transfers_[*it];
                if (t.ts >= time_lo && t.ts <= time_hi) out.push_back(&t);
            }
            std::sort(out.begin(), out.end(), [](const Transfer* a, const Transfer* b) {
                return std::tie(a->ts, a->tx_id) < std::tie(b->ts, b->tx_id);
            });
        }
        return out;
    }

    /**
     * Direct value-flow predecessors of t. Utxo chains follow spent-output
     * references; account chains take, per spender, the K latest transfers
     * paying that spender with ord(t') <= ord(t). Every result respects the
     * canonical chain order.
     */
    std::vector<const Transfer*> predecessors(const Transfer& t,
                                              const AncestryOptions& opts = {}) const {
        const Transfer& stored = get(t.chain, t.tx_id);
        ChainModel model = registry_.model(stored.chain);
        std::set<const Transfer*> uniq;
        if (model == ChainModel::utxo) {
            for (const OutPoint& in : stored.inputs) {
                const Transfer* prev = find(stored.chain, in.tx_id);
                if (prev && prev != &stored && prev->ord <= stored.ord) uniq.insert(prev);
            }
        } else {
            for (const Address& spender : stored.spenders) {
                auto it = recipient_index_.find(std::make_pair(stored.chain, spender));
                if (it == recipient_index_.end()) continue;
                const std::vector<Index>& incoming = it->second;  // (ord, tx id) ascending
                auto end = std::partition_point(incoming.begin(), incoming.end(), [&](Index i) {
                    return transfers_[i].ord <= stored.ord;
                });
                int taken = 0;
                for (auto rit = std::make_reverse_iterator(end);
                     rit != incoming.rend() && taken < opts.account_fanin_limit; ++rit) {
                    const Transfer* prev = &transfers_[*rit];
                    if (prev == &stored) continue;
                    uniq.insert(prev);
                    ++taken;
                }
            }
        }
        std::vector<const Transfer*> out(uniq.begin(), uniq.end());
        sort_by_ord(out);
        return out;
    }

    /**
     * Predecessor closure up to max_hops, pruned per node by the branching
     * cap (largest amounts kept, ties by smaller ord then tx id) and by the
     * dust floor. Excludes t itself; result ordered by (ord, tx id).
     */
    std::vector<const Transfer*> predecessors_within(const Transfer& t, int max_hops,
                                                     const AncestryOptions& opts = {}) const {
        if (max_hops < 1) throw RangeError("predecessorsWithinH: H must be >= 1");
        const Transfer& stored = get(t.chain, t.tx_id);

        std::set<const Transfer*> visited{&stored};
        std::vector<const Transfer*> frontier{&stored};
        std::vector<const Transfer*> result;
        for (int hop = 0; hop < max_hops && !frontier.empty(); ++hop) {
            std::vector<const Transfer*> next;
            for (const Transfer* node : frontier) {
                std::vector<const Transfer*> preds = predecessors(*node, opts);
                preds.erase(std::remove_if(preds.begin(), preds.end(),
                                           [&](const Transfer* p) {
                                               return p->amt < opts.dust_floor(p->asset);
                                           }),
                            preds.end());
                std::sort(preds.begin(), preds.end(), [](const Transfer* a, const Transfer* b) {
                    if (a->amt != b->amt) return a->amt > b->amt;
                    return std::tie(a->ord, a->tx_id) < std::tie(b->ord, b->tx_id);
                });
                if (opts.branching_cap >= 0 &&
                    preds.size() > static_cast<std::size_t>(opts.branching_cap)) {
                    preds.resize(static_cast<std::size_t>(opts.branching_cap));
                }
                for (const Transfer* p : preds) {
                    if (visited.insert(p).second) {
                        result.push_back(p);
                        next.push_back(p);
                    }
                }
            }
            sort_by_ord(next);
            frontier = std::move(next);
        }
        sort_by_ord(result);
        return result;
    }

private:
    friend class TransferStoreBuilder;

    struct PairIndex {
        std::vector<Index> by_time;    // (ts, tx id) ascending
        std::vector<Index> by_amount;  // (amt, ts, tx id) ascending
    };

    static void sort_by_ord(std::vector<const Transfer*>& v) {
        std::sort(v.begin(), v.end(), [](const Transfer* a, const Transfer* b) {
            return std::tie(a->ord, a->tx_id) < std::tie(b->ord, b->tx_id);
        });
    }

    ChainRegistry registry_;
    std::vector<Transfer> transfers_;
    std::map<std::pair<ChainId, TxId>, Index> by_id_;
    std::map<std::pair<ChainId, AssetId>, PairIndex> buckets_;
    std::map<std::pair<ChainId, Address>, std::vector<Index>> recipient_index_;
};

inline TransferStoreBuilder& TransferStoreBuilder::add(Transfer t) {
    if (!registry_.contains(t.chain)) {
        throw InvalidChainError("transfer " + t.tx_id + " references unregistered chain " +
                                t.chain.id);
    }
    if (t.tx_id.empty()) throw ConfigError("transfer with empty tx id");
    if (t.ts < 0) throw ConfigError("transfer " + t.tx_id + " has negative timestamp");
    if (t.amt.negative()) throw ConfigError("transfer " + t.tx_id + " has negative amount");
    if (t.spenders.empty() || t.recipients.empty()) {
        throw ConfigError("transfer " + t.tx_id + " needs non-empty spender and recipient sets");
    }
    if (registry_.model(t.chain) == ChainModel::utxo && t.outputs.empty()) {
        throw ConfigError("utxo transfer " + t.tx_id + " needs a non-empty output list");
    }
    if (!seen_.insert(std::make_pair(t.chain, t.tx_id)).second) {
        throw ConfigError("duplicate tx id on chain " + t.chain.id + ": " + t.tx_id);
    }
    auto dedup = [](std::vector<Address>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedup(t.spenders);
    dedup(t.recipients);
    transfers_.push_back(std::move(t));
    return *this;
}

inline TransferStore TransferStoreBuilder::build() {
    TransferStore store;
    store.registry_ = registry_;
    store.transfers_ = std::move(transfers_);
    transfers_.clear();
    seen_.clear();

    const auto& all = store.transfers_;
    for (TransferStore::Index i = 0; i < all.size(); ++i) {
        const Transfer& t = all[i];
        store.by_id_.emplace(std::make_pair(t.chain, t.tx_id), i);
        auto& bucket = store.buckets_[std::make_pair(t.chain, t.asset)];
        bucket.by_time.push_back(i);
        bucket.by_amount.push_back(i);
        for (const Address& r : t.recipients) {
            store.recipient_index_[std::make_pair(t.chain, r)].push_back(i);
        }
    }
    for (auto& [key, bucket] : store.buckets_) {
        std::sort(bucket.by_time.begin(), bucket.by_time.end(),
                  [&](TransferStore::Index a, TransferStore::Index b) {
                      return std::tie(all[a].ts, all[a].tx_id) < std::tie(all[b].ts, all[b].tx_id);
                  });
        std::sort(bucket.by_amount.begin(), bucket.by_amount.end(),
                  [&](TransferStore::Index a, TransferStore::Index b) {
                      return std::tie(all[a].amt, all[a].ts, all[a].tx_id) <
                             std::tie(all[b].amt, all[b].ts, all[b].tx_id);
                  });
    }
    for (auto& [key, v] : store.recipient_index_) {
        std::sort(v.begin(), v.end(), [&](TransferStore::Index a, TransferStore::Index b) {
            return std::tie(all[a].ord, all[a].tx_id) < std::tie(all[b].ord, all[b].tx_id);
        });
    }
    return store;
}

}  // namespace xtrace
