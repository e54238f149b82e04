#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xtrace/price_oracle.hpp"
#include "xtrace/single_trace.hpp"
#include "xtrace/transfer_store.hpp"

namespace xtrace {

/// Deterministic random source. Distribution helpers are hand-rolled on top
/// of the raw mt19937_64 stream so generated worlds do not depend on the
/// standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t u64() { return gen_(); }

    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }  // [0, 1)

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive bounds
        if (lo >= hi) return lo;
        return lo + static_cast<std::int64_t>(u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
    }

    double exponential(double rate) {
        double u = uniform();
        while (u >= 1.0) u = uniform();
        return -std::log(1.0 - u) / rate;
    }

private:
    std::mt19937_64 gen_;
};

struct ChainSpec {
    ChainId id;
    ChainModel model = ChainModel::utxo;
    AssetId native_asset;
};

struct PairSpec {
    ChainId src_chain;
    AssetId src_asset;
    ChainId dst_chain;
    AssetId dst_asset;
    auto operator<=>(const PairSpec&) const = default;

    std::string name() const { return src_chain.id + "->" + dst_chain.id; }
};

// Per-asset generation parameters and tier thresholds.
struct AssetTraits {
    double usd_anchor = 1.0;     // sets initial cross rates
    double swap_lo = 1.0;        // planted swap amount range
    double swap_hi = 1000.0;
    Amount hf_threshold;         // minimum inbound amount for the hf tier
    double dust_ceiling = 0.01;  // dust-traffic amounts fall below this
    double background_lo = 0.1;  // background amount range
    double background_hi = 5000.0;
};

inline std::map<AssetId, AssetTraits> default_asset_traits() {
    std::map<AssetId, AssetTraits> traits;
    traits[AssetId{"BTC"}] = {60000.0, 0.09, 4.0, Amount::parse("0.09"), 0.0001, 0.001, 10.0};
    traits[AssetId{"ETH"}] = {2500.0, 1.9, 90.0, Amount::parse("1.9"), 0.002, 0.01, 200.0};
    // DOGE and LTC thresholds are round numbers chosen for the synthetic
    // corpus; only the BTC and ETH thresholds are externally specified.
    traits[AssetId{"DOGE"}] = {0.20, 5000.0, 200000.0, Amount::parse("5000"), 10.0, 50.0, 500000.0};
    traits[AssetId{"LTC"}] = {80.0, 10.0, 400.0, Amount::parse("10"), 0.02, 0.1, 1000.0};
    return traits;
}

/// Fan-out laundering scenario: one root address funds several leaf
/// intermediaries through a funding chain of the given depth; each leaf then
/// bridges to a distinct destination address.
struct SybilSpec {
    std::string scenario_id = "sybil-0";
    int leaf_count = 5;
    int depth = 3;        // hops from the leaf's source transfer back to the root
    int query_depth = 3;  // ancestry depth the group query is expected to use
    int pair_index = 0;
    std::vector<Amount> leaf_amounts;  // optional; derived from traits when empty

    void validate(std::size_t pair_count) const {
        if (leaf_count < 1) throw ConfigError(scenario_id + ": leaf count must be >= 1");
        if (depth < 1) throw ConfigError(scenario_id + ": depth must be >= 1");
        if (depth > query_depth) {
            throw ConfigError(scenario_id + ": depth exceeds the supported query depth");
        }
        if (pair_index < 0 || static_cast<std::size_t>(pair_index) >= pair_count) {
            throw ConfigError(scenario_id + ": pair index out of range");
        }
        if (!leaf_amounts.empty() && leaf_amounts.size() != static_cast<std::size_t>(leaf_count)) {
            throw ConfigError(scenario_id + ": amount profile size must match leaf count");
        }
    }
};

struct WorldSpec {
    std::uint64_t seed = 1;
    std::vector<ChainSpec> chains;
    std::vector<PairSpec> pairs;
    Timestamp duration = 14 * 86400;
    double background_per_min = 0.5;  // mean background transfers per minute per chain
    int swaps_per_pair = 100;
    double fee_lo = 0.002;
    double fee_hi = 0.04;
    Timestamp delay_lo = 60;
    Timestamp delay_hi = 1500;
    double price_volatility = 0.002;  // per-step fractional sigma
    Timestamp price_step = 60;
    double dust_rate = 0.0;  // fraction of background transfers below the dust ceiling
    bool allow_decoys = false;
    int decoys_per_swap = 3;
    BridgeId bridge{"sim-bridge"};
    std::map<AssetId, AssetTraits> asset_traits = default_asset_traits();
    std::vector<SybilSpec> sybil_scenarios;

    const AssetTraits& traits(const AssetId& asset) const {
        static const AssetTraits fallback{};
        auto it = asset_traits.find(asset);
        return it == asset_traits.end() ? fallback : it->second;
    }

    const ChainSpec& chain_spec(const ChainId& chain) const {
        for (const ChainSpec& c : chains) {
            if (c.id == chain) return c;
        }
        throw ConfigError("world spec does not declare chain " + chain.id);
    }

    void validate() const {
        if (chains.empty()) throw ConfigError("world spec needs at least one chain");
        if (pairs.empty()) throw ConfigError("world spec needs at least one pair");
        if (!(fee_lo >= 0.0 && fee_lo <= fee_hi && fee_hi < 1.0)) {
            throw ConfigError("fee range must satisfy 0 <= lo <= hi < 1");
        }
        if (delay_lo < 0 || delay_lo > delay_hi) throw ConfigError("bad delay range");
        if (duration <= delay_hi) throw ConfigError("duration must exceed the max delay");
        if (swaps_per_pair < 0) throw ConfigError("negative swap count");
        if (price_volatility < 0.0) throw ConfigError("negative price volatility");
        if (price_step <= 0) throw ConfigError("price step must be positive");
        if (background_per_min < 0.0) throw ConfigError("negative background rate");
        if (dust_rate < 0.0 || dust_rate > 1.0) throw ConfigError("dust rate must be in [0, 1]");
        if (decoys_per_swap < 0) throw ConfigError("negative decoy count");
        for (const PairSpec& p : pairs) {
            chain_spec(p.src_chain);
            chain_spec(p.dst_chain);
        }
        for (const SybilSpec& s : sybil_scenarios) s.validate(pairs.size());
    }
};

struct GroundTruthLink {
    CrossChainLink link;
    double fee = 0.0;
    Timestamp delay = 0;
};

struct SybilScenario {
    std::string id;
    Address root;
    int depth = 0;
    std::vector<TransferRef> leaves;  // destination-side transfers
};

struct GroundTruth {
    std::vector<GroundTruthLink> links;
    std::map<std::string, SybilScenario> sybil;

    std::vector<const GroundTruthLink*> links_for(const TransferRef& dst) const {
        std::vector<const GroundTruthLink*> out;
        for (const GroundTruthLink& l : links) {
            if (l.link.dst == dst) out.push_back(&l);
        }
        return out;
    }
};

struct World {
    WorldSpec spec;
    TransferStore store;
    PriceBook prices;
    GroundTruth truth;
};

/**
 * Seeded synthetic multi-chain world generator. Prices are per-asset-pair
 * geometric random walks; planted swaps satisfy the forward-validation
 * economics by construction (destination amount = source amount converted at
 * the swap-time rate, minus the drawn fee); background traffic is kept away
 * from the amount bands of planted swaps unless decoys are requested.
 */
class WorldBuilder {
public:
    explicit WorldBuilder(WorldSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        generate_prices();
        plant_swaps();
    }

    // Plants one fan-out scenario and returns the ground truth it added.
    GroundTruth plant_sybil(const SybilSpec& scenario) {
        scenario.validate(spec_.pairs.size());
        if (truth_.sybil.count(scenario.scenario_id)) {
            throw ConfigError("duplicate sybil scenario id: " + scenario.scenario_id);
        }
        GroundTruth delta = plant_sybil_impl(scenario);
        truth_.links.insert(truth_.links.end(), delta.links.begin(), delta.links.end());
        for (const auto& [id, s] : delta.sybil) truth_.sybil.emplace(id, s);
        return delta;
    }

    World build() {
        generate_background();
        assign_ords();
        TransferStoreBuilder builder;
        for (const ChainSpec& c : spec_.chains) builder.add_chain(c.id, c.model);
        for (Transfer& t : transfers_) builder.add(std::move(t));
        transfers_.clear();
        World world;
        world.spec = spec_;
        world.store = builder.build();
        world.prices = std::move(book_);
        world.truth = std::move(truth_);
        return world;
    }

private:
    struct ProtectedAmount {
        ChainId chain;
        AssetId asset;
        Timestamp ts;
        double amount;
    };

    Rng phase_rng(std::uint64_t phase, std::uint64_t index) const {
        return Rng(spec_.seed * 0x9E3779B97F4A7C15ULL + phase * 0x100000001B3ULL + index);
    }

    std::string next_tx_id() {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "t%08u", tx_counter_++);
        return buf;
    }

    void generate_prices() {
        std::map<std::pair<AssetId, AssetId>, bool> wanted;
        for (const PairSpec& p : spec_.pairs) {
            AssetId a = p.src_asset, b = p.dst_asset;
            if (a == b) continue;  // same-asset pairs trade at par; no series needed
            if (b < a) std::swap(a, b);
            wanted[{a, b}] = true;
        }
        std::uint64_t index = 0;
        for (const auto& [pair, unused] : wanted) {
            Rng rng = phase_rng(1, index++);
            const auto& [base, quote] = pair;
            double rate = spec_.traits(quote).usd_anchor / spec_.traits(base).usd_anchor;
            std::vector<PriceSample> samples;
            for (Timestamp ts = 0; ts <= spec_.duration; ts += spec_.price_step) {
                samples.push_back({ts, rate});
                rate *= std::exp(spec_.price_volatility * rng.normal());
            }
            book_.add(PriceSeries(base, quote, std::move(samples)));
        }
        // Same-asset pairs (cross-chain moves of one asset) use a flat series.
        for (const PairSpec& p : spec_.pairs) {
            if (p.src_asset != p.dst_asset) continue;
            if (book_.find(p.src_asset, p.dst_asset)) continue;
            book_.add(PriceSeries(p.src_asset, p.dst_asset,
                                  {{0, 1.0}, {spec_.duration, 1.0}}));
        }
        book_.finalize();
    }

    bool collides(const ChainId& chain, const AssetId& asset, Timestamp ts, double amount) const {
        for (const ProtectedAmount& p : protected_) {
            if (p.chain != chain || p.asset != asset) continue;
            if (std::llabs(p.ts - ts) > 10800) continue;
            double ratio = amount / p.amount;
            if (ratio >= 0.80 && ratio <= 1.25) return true;
        }
        return false;
    }

    // One cross-chain swap: inbound transfer on the source chain, outbound on
    // the destination chain, and the ground-truth link between them.
    GroundTruthLink plant_one_swap(const PairSpec& pair, Timestamp src_ts, Amount a_src,
                                   double fee, Timestamp delay, const Address& src_user,
                                   const Address& dst_user) {
        const PriceSeries& src_per_dst = book_.get(pair.src_asset, pair.dst_asset);
        double rate = src_per_dst.rate_at(src_ts);  // source units per destination unit
        Amount a_dst = Amount::from_double(a_src.to_double() * (1.0 - fee) / rate);

        Address src_vault = "vault-" + spec_.bridge.id + "-" + pair.src_chain.id;
        Address dst_vault = "vault-" + spec_.bridge.id + "-" + pair.dst_chain.id;
        bool src_utxo = spec_.chain_spec(pair.src_chain).model == ChainModel::utxo;
        bool dst_utxo = spec_.chain_spec(pair.dst_chain).model == ChainModel::utxo;

        Transfer inbound;
        inbound.tx_id = next_tx_id();
        inbound.chain = pair.src_chain;
        inbound.ts = src_ts;
        inbound.asset = pair.src_asset;
        inbound.amt = a_src;
        inbound.spenders = {src_user};
        inbound.recipients = {src_vault};
        if (src_utxo) inbound.outputs = {{src_vault, a_src}};
        transfers_.push_back(inbound);

        Transfer outbound;
        outbound.tx_id = next_tx_id();
        outbound.chain = pair.dst_chain;
        outbound.ts = src_ts + delay;
        outbound.asset = pair.dst_asset;
        outbound.amt = a_dst;
        outbound.spenders = {dst_vault};
        outbound.recipients = {dst_user};
        if (dst_utxo) outbound.outputs = {{dst_user, a_dst}};
        transfers_.push_back(outbound);

        protected_.push_back({pair.src_chain, pair.src_asset, src_ts, a_src.to_double()});
        return GroundTruthLink{
            CrossChainLink{ref_of(inbound), ref_of(outbound), spec_.bridge}, fee, delay};
    }

    void plant_swaps() {
        for (std::size_t pi = 0; pi < spec_.pairs.size(); ++pi) {
            const PairSpec& pair = spec_.pairs[pi];
            Rng rng = phase_rng(2, pi);
            const AssetTraits& traits = spec_.traits(pair.src_asset);
            for (int k = 0; k < spec_.swaps_per_pair; ++k) {
                Timestamp src_ts = 0;
                double amount = 0.0;
                for (int attempt = 0;; ++attempt) {
                    src_ts = rng.uniform_int(4000, spec_.duration - spec_.delay_hi - 1);
                    amount = rng.log_uniform(traits.swap_lo, traits.swap_hi);
                    if (!collides(pair.src_chain, pair.src_asset, src_ts, amount)) break;
                    if (attempt > 200) {
                        throw ConfigError("could not place swap " + std::to_string(k) +
                                          " for pair " + pair.name() +
                                          "; widen the amount range or shorten the schedule");
                    }
                }
                double fee = rng.uniform(spec_.fee_lo, spec_.fee_hi);
                Timestamp delay = rng.uniform_int(spec_.delay_lo, spec_.delay_hi);
                Address src_user = "u-" + pair.src_chain.id + "-" + std::to_string(user_counter_++);
                Address dst_user = "u-" + pair.dst_chain.id + "-" + std::to_string(user_counter_++);
                GroundTruthLink link = plant_one_swap(pair, src_ts, Amount::from_double(amount),
                                                      fee, delay, src_user, dst_user);
                truth_.links.push_back(link);
                if (spec_.allow_decoys) {
                    plant_decoys(pair, src_ts, Amount::from_double(amount), delay, rng);
                }
            }
        }
    }

    // Amount-colliding transfers at strictly larger time gaps than the true
    // source, inside the default backward search window.
    void plant_decoys(const PairSpec& pair, Timestamp src_ts, Amount a_src, Timestamp delay,
                      Rng& rng) {
        Timestamp window = TraceConfig{}.backward_window;
        Timestamp room = window - 300 - delay;  // margin inside the default window
        Timestamp spacing =
            std::max<Timestamp>(60, std::min<Timestamp>(450, room / (spec_.decoys_per_swap + 1)));
        bool utxo = spec_.chain_spec(pair.src_chain).model == ChainModel::utxo;
        for (int d = 0; d < spec_.decoys_per_swap; ++d) {
            Timestamp ts = src_ts - spacing * (d + 1) - rng.uniform_int(0, 30);
            if (ts < 0) break;
            Transfer t;
            t.tx_id = next_tx_id();
            t.chain = pair.src_chain;
            t.ts = ts;
            t.asset = pair.src_asset;
            t.amt = a_src;
            Address from = "decoy-" + std::to_string(user_counter_++);
            Address to = "decoy-" + std::to_string(user_counter_++);
            t.spenders = {from};
            t.recipients = {to};
            if (utxo) t.outputs = {{to, t.amt}};
            transfers_.push_back(t);
        }
    }

    GroundTruth plant_sybil_impl(const SybilSpec& scenario) {
        GroundTruth delta;
        Rng rng = phase_rng(3, sybil_counter_++);
        const PairSpec& pair = spec_.pairs[scenario.pair_index];
        const AssetTraits& traits = spec_.traits(pair.src_asset);
        bool src_utxo = spec_.chain_spec(pair.src_chain).model == ChainModel::utxo;
        const Timestamp hop_gap = 600;
        const std::string& sid = scenario.scenario_id;
        Address root = sid + "-root";

        SybilScenario record;
        record.id = sid;
        record.root = root;
        record.depth = scenario.depth;

        for (int leaf = 0; leaf < scenario.leaf_count; ++leaf) {
            Amount a_src;
            if (!scenario.leaf_amounts.empty()) {
                a_src = scenario.leaf_amounts[leaf];
            } else {
                // Spaced profile: leaves stay outside each other's candidate
                // amount bands so traces do not cross-match.
                a_src = Amount::from_double(traits.swap_lo * 1.6 * std::pow(1.35, leaf));
            }
            Timestamp src_ts = 0;
            for (int attempt = 0;; ++attempt) {
                Timestamp earliest = 4000 + hop_gap * (scenario.depth + 1);
                src_ts = rng.uniform_int(earliest, spec_.duration - spec_.delay_hi - 1);
                if (!collides(pair.src_chain, pair.src_asset, src_ts, a_src.to_double())) break;
                if (attempt > 200) {
                    throw ConfigError(sid + ": could not schedule leaf " + std::to_string(leaf));
                }
            }

            // Funding chain root -> ... -> leaf holder, one hop per 600 s.
            Address holder = root;
            std::string prev_tx;
            for (int hop = 1; hop <= scenario.depth; ++hop) {
                Address next_holder = (hop == scenario.depth)
                                          ? sid + "-leaf" + std::to_string(leaf)
                                          : sid + "-l" + std::to_string(leaf) + "-h" +
                                                std::to_string(hop);
                double factor = std::pow(1.35, scenario.depth - hop + 1);
                Amount amount = Amount::from_double(a_src.to_double() * factor);
                Transfer t;
                t.tx_id = next_tx_id();
                t.chain = pair.src_chain;
                t.ts = src_ts - hop_gap * (scenario.depth - hop + 1);
                t.asset = pair.src_asset;
                t.amt = amount;
                t.spenders = {holder};
                t.recipients = {next_holder};
                if (src_utxo) {
                    if (!prev_tx.empty()) t.inputs = {{prev_tx, 0}};
                    t.outputs = {{next_holder, amount}};
                }
                transfers_.push_back(t);
                prev_tx = t.tx_id;
                holder = next_holder;
            }

            double fee = rng.uniform(spec_.fee_lo, spec_.fee_hi);
            Timestamp delay = rng.uniform_int(spec_.delay_lo, spec_.delay_hi);
            Address dst_user = sid + "-dst" + std::to_string(leaf);
            GroundTruthLink link =
                plant_one_swap(pair, src_ts, a_src, fee, delay, holder, dst_user);
            if (src_utxo) {
                // The inbound swap transfer spends the last funding output.
                Transfer& inbound = transfers_[transfers_.size() - 2];
                inbound.inputs = {{prev_tx, 0}};
            }
            delta.links.push_back(link);
            record.leaves.push_back(link.link.dst);
        }
        delta.sybil.emplace(sid, record);
        return delta;
    }

    void generate_background() {
        if (spec_.background_per_min <= 0.0) return;
        double rate_per_s = spec_.background_per_min / 60.0;
        for (std::size_t ci = 0; ci < spec_.chains.size(); ++ci) {
            const ChainSpec& chain = spec_.chains[ci];
            const AssetTraits& traits = spec_.traits(chain.native_asset);
            Rng rng = phase_rng(4, ci);
            std::vector<Address> pool;
            for (int i = 0; i < 64; ++i) {
                pool.push_back("bg-" + chain.id.id + "-" + std::to_string(i));
            }
            struct Unspent {
                TxId tx_id;
                Address owner;
            };
            std::vector<Unspent> unspent;
            double t = 0.0;
            for (;;) {
                t += rng.exponential(rate_per_s);
                if (t > static_cast<double>(spec_.duration)) break;
                Timestamp ts = static_cast<Timestamp>(t);
                double amount = 0.0;
                bool dust = rng.uniform() < spec_.dust_rate;
                for (int attempt = 0; attempt < 64; ++attempt) {
                    amount = dust ? rng.uniform(traits.dust_ceiling * 0.01, traits.dust_ceiling)
                                  : rng.log_uniform(traits.background_lo, traits.background_hi);
                    if (!collides(chain.id, chain.native_asset, ts, amount)) break;
                }
                if (collides(chain.id, chain.native_asset, ts, amount)) continue;

                Transfer tr;
                tr.tx_id = next_tx_id();
                tr.chain = chain.id;
                tr.ts = ts;
                tr.asset = chain.native_asset;
                tr.amt = Amount::from_double(amount);
                Address to = pool[rng.u64() % pool.size()];
                if (chain.model == ChainModel::utxo) {
                    if (!unspent.empty() && rng.uniform() < 0.8) {
                        std::size_t pick = rng.u64() % unspent.size();
                        tr.inputs = {{unspent[pick].tx_id, 0}};
                        tr.spenders = {unspent[pick].owner};
                        unspent.erase(unspent.begin() + static_cast<std::ptrdiff_t>(pick));
                    } else {
                        tr.spenders = {pool[rng.u64() % pool.size()]};
                    }
                    tr.outputs = {{to, tr.amt}};
                    if (unspent.size() < 256) unspent.push_back({tr.tx_id, to});
                } else {
                    Address from = pool[rng.u64() % pool.size()];
                    if (from == to) to = pool[(rng.u64() + 1) % pool.size()];
                    tr.spenders = {from};
                }
                tr.recipients = {to};
                transfers_.push_back(tr);
            }
        }
    }

    // Pseudo-height equals the timestamp; the intra-block index ranks
    // same-second transfers by tx id.
    void assign_ords() {
        std::map<ChainId, std::vector<Transfer*>> per_chain;
        for (Transfer& t : transfers_) per_chain[t.chain].push_back(&t);
        for (auto& [chain, list] : per_chain) {
            std::sort(list.begin(), list.end(), [](const Transfer* a, const Transfer* b) {
                return std::tie(a->ts, a->tx_id) < std::tie(b->ts, b->tx_id);
            });
            Timestamp prev_ts = -1;
            std::int32_t intra = 0;
            for (Transfer* t : list) {
                intra = (t->ts == prev_ts) ? intra + 1 : 0;
                prev_ts = t->ts;
                t->ord = Ord{t->ts, intra};
            }
        }
    }

    WorldSpec spec_;
    PriceBook book_;
    GroundTruth truth_;
    std::vector<Transfer> transfers_;
    std::vector<ProtectedAmount> protected_;
    std::uint32_t tx_counter_ = 0;
    std::uint32_t user_counter_ = 0;
    std::uint64_t sybil_counter_ = 0;
};

inline World generate_world(const WorldSpec& spec) {
    WorldBuilder builder(spec);
    for (const SybilSpec& scenario : spec.sybil_scenarios) builder.plant_sybil(scenario);
    return builder.build();
}

// Four-chain demo topology with every ordered pair, mirroring the shape of a
// twelve-direction benchmark.
inline WorldSpec default_world_spec() {
    WorldSpec spec;
    spec.chains = {
        {ChainId{"btc"}, ChainModel::utxo, AssetId{"BTC"}},
        {ChainId{"eth"}, ChainModel::account, AssetId{"ETH"}},
        {ChainId{"doge"}, ChainModel::utxo, AssetId{"DOGE"}},
        {ChainId{"ltc"}, ChainModel::utxo, AssetId{"LTC"}},
    };
    for (const ChainSpec& src : spec.chains) {
        for (const ChainSpec& dst : spec.chains) {
            if (src.id == dst.id) continue;
            spec.pairs.push_back({src.id, src.native_asset, dst.id, dst.native_asset});
        }
    }
    return spec;
}

}  // namespace xtrace
