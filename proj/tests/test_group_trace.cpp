#include <algorithm>
#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "xtrace/group_trace.hpp"
#include "xtrace/report.hpp"

using namespace xtrace;
using fixtures::kBtc;
using fixtures::kBTC;
using fixtures::kEth;
using fixtures::kETH;
using fixtures::make_transfer;

namespace {

// Linear funding chain a -> b -> t on the account chain: the transfer "t"
// received from b, b received from a.
TransferStore linear_ancestry_store() {
    auto builder = fixtures::two_chain_builder();
    builder.add(make_transfer({.tx_id = "f1", .ts = 10, .spenders = {"a"}, .recipients = {"b"}}));
    builder.add(make_transfer({.tx_id = "f2", .ts = 20, .spenders = {"b"}, .recipients = {"c"}}));
    builder.add(make_transfer({.tx_id = "t", .ts = 30, .spenders = {"c"}}));
    return builder.build();
}

// Fan-out world: one ETH root funds `leaves` intermediate holders through
// `depth` hops; each holder swaps to a distinct BTC destination. Amounts are
// spaced so traces cannot cross-match.
struct FanOut {
    TransferStore store;
    PriceBook book;
    GroupQuery query;
};

FanOut fan_out_world(int leaves, int depth, int query_depth = 3) {
    auto builder = fixtures::two_chain_builder();
    PriceBook book = fixtures::constant_book(kETH, kBTC, 20.0);
    GroupQuery query;
    query.ancestry_depth = query_depth;
    query.trace.source_pairs = {{kEth, kETH}};

    int tx = 0;
    auto id = [&tx]() { return "g" + std::to_string(tx++); };
    for (int leaf = 0; leaf < leaves; ++leaf) {
        Timestamp swap_ts = 50'000 + leaf * 9'000;
        double a_src = 20.0 * std::pow(1.5, leaf);
        std::string holder = "root";
        for (int hop = 1; hop <= depth; ++hop) {
            std::string next = (hop == depth) ? "leaf" + std::to_string(leaf)
                                              : "m" + std::to_string(leaf) + "-" +
                                                    std::to_string(hop);
            builder.add(make_transfer(
                {.tx_id = id(),
                 .ts = swap_ts - 600 * (depth - hop + 1),
                 .amt = Amount::from_double(a_src * std::pow(1.4, depth - hop + 1)).str(),
                 .spenders = {holder},
                 .recipients = {next}}));
            holder = next;
        }
        std::string src_tx = id();
        builder.add(make_transfer({.tx_id = src_tx,
                                   .ts = swap_ts,
                                   .amt = Amount::from_double(a_src).str(),
                                   .spenders = {holder},
                                   .recipients = {"vault-eth"}}));
        std::string dst_tx = "dst" + std::to_string(leaf);
        builder.add(make_transfer({.tx_id = dst_tx,
                                   .chain = kBtc,
                                   .ts = swap_ts + 400,
                                   .asset = kBTC,
                                   .amt = Amount::from_double(a_src * 0.99 / 20.0).str(),
                                   .spenders = {"vault-btc"},
                                   .recipients = {"out" + std::to_string(leaf)}}));
        query.targets.push_back(TransferRef{kBtc, dst_tx});
    }
    return FanOut{builder.build(), std::move(book), std::move(query)};
}

}  // namespace

TEST_CASE("ancestor spenders collect upstream addresses") {
    TransferStore store = linear_ancestry_store();
    const Transfer& t = store.get(kEth, "t");

    SECTION("no predecessors yields the empty set") {
        const Transfer& f1 = store.get(kEth, "f1");
        CHECK(ancestor_spenders(store, f1, 2).empty());
    }
    SECTION("depth two reaches both funding hops") {
        CHECK(ancestor_spenders(store, t, 2) == std::vector<Address>{"a", "b"});
    }
    SECTION("depth one sees only the direct funder") {
        CHECK(ancestor_spenders(store, t, 1) == std::vector<Address>{"b"});
    }
}

TEST_CASE("a destination casts at most one vote per address") {
    auto builder = fixtures::two_chain_builder();
    // Two candidates, both funded by "a".
    builder.add(make_transfer({.tx_id = "f1", .ts = 10, .spenders = {"a"}, .recipients = {"c1"}}));
    builder.add(make_transfer({.tx_id = "f2", .ts = 11, .spenders = {"a"}, .recipients = {"c2"}}));
    builder.add(make_transfer({.tx_id = "c1", .ts = 20, .spenders = {"c1"}}));
    builder.add(make_transfer({.tx_id = "c2", .ts = 21, .spenders = {"c2"}}));
    TransferStore store = builder.build();

    std::map<TransferRef, std::vector<const Transfer*>> candidates;
    candidates[TransferRef{kBtc, "target"}] = {&store.get(kEth, "c1"), &store.get(kEth, "c2")};
    VoteTable table = vote_common_ancestors(candidates, store, 2);
    CHECK(table.hit("a") == 1);  // not 2, despite two candidate paths
    CHECK(table.entries.at("a").supporting_targets == std::vector<TxId>{"target"});
}

TEST_CASE("five converging targets give the shared funder five hits") {
    auto builder = fixtures::two_chain_builder();
    std::map<TransferRef, std::vector<const Transfer*>> candidates;
    for (int i = 0; i < 5; ++i) {
        std::string holder = "h" + std::to_string(i);
        builder.add(make_transfer({.tx_id = "f" + std::to_string(i),
                                   .ts = 10 + i,
                                   .spenders = {"shared"},
                                   .recipients = {holder}}));
        builder.add(make_transfer(
            {.tx_id = "c" + std::to_string(i), .ts = 100 + i, .spenders = {holder}}));
    }
    TransferStore store = builder.build();
    for (int i = 0; i < 5; ++i) {
        candidates[TransferRef{kBtc, "t" + std::to_string(i)}] = {
            &store.get(kEth, "c" + std::to_string(i))};
    }
    VoteTable table = vote_common_ancestors(candidates, store, 1);
    CHECK(table.hit("shared") == 5);
}

TEST_CASE("vote table equals a brute-force recomputation on random topologies") {
    for (std::uint64_t seed = 900; seed < 905; ++seed) {
        TransferStore store = fixtures::random_store(seed, 600);
        Rng rng(seed + 1);
        std::map<TransferRef, std::vector<const Transfer*>> candidates;
        int targets = static_cast<int>(rng.uniform_int(2, 6));
        for (int i = 0; i < targets; ++i) {
            std::vector<const Transfer*> sources;
            int count = static_cast<int>(rng.uniform_int(0, 5));
            for (int k = 0; k < count; ++k) {
                sources.push_back(
                    &store.transfers()[rng.u64() % store.transfers().size()]);
            }
            candidates[TransferRef{kBtc, "q" + std::to_string(i)}] = sources;
        }
        AncestryOptions opts;
        VoteTable table = vote_common_ancestors(candidates, store, 3, opts);
        auto want = oracle::brute_hits(candidates, store, 3, opts);
        std::map<std::string, int> got;
        for (const auto& [address, entry] : table.entries) {
            got[address] = entry.hit_count;
            CHECK(entry.hit_count == static_cast<int>(entry.supporting_targets.size()));
            CHECK(entry.hit_count <= targets);
        }
        CHECK(got == want);
    }
}

TEST_CASE("group trace reports the planted root across all leaves") {
    FanOut world = fan_out_world(5, 3);
    GroupResult result = trace_group(world.store, world.book, world.query);

    REQUIRE_FALSE(result.common_ancestors.empty());
    CHECK(result.common_ancestors.front().first == "root");
    CHECK(result.common_ancestors.front().second == 5);
    CHECK(result.degenerated_targets.empty());
    CHECK(result.per_target_errors.empty());

    // Witness paths name a real candidate and ancestor per target.
    const VoteEntry& entry = result.votes.entries.at("root");
    CHECK(entry.witness_by_target.size() == 5);
    for (const auto& [target_tx, path] : entry.witness_by_target) {
        const Transfer& ancestor = world.store.resolve(path.ancestor);
        CHECK(std::find(ancestor.spenders.begin(), ancestor.spenders.end(), "root") !=
              ancestor.spenders.end());
    }
}

TEST_CASE("unrelated targets degenerate to the single-transfer setting") {
    auto builder = fixtures::two_chain_builder();
    PriceBook book = fixtures::constant_book(kETH, kBTC, 20.0);
    for (int i = 0; i < 2; ++i) {
        std::string src = "s" + std::to_string(i);
        builder.add(make_transfer({.tx_id = "fund" + std::to_string(i),
                                   .ts = 1'000 + i,
                                   .amt = Amount::from_double(40.0 * (i + 1) * 1.5).str(),
                                   .spenders = {"origin" + std::to_string(i)},
                                   .recipients = {src}}));
        builder.add(make_transfer({.tx_id = src,
                                   .ts = 5'000 + 9'000 * i,
                                   .amt = Amount::from_double(30.0 * (i + 1)).str(),
                                   .spenders = {src}, .recipients = {"vault"}}));
        builder.add(make_transfer({.tx_id = "d" + std::to_string(i),
                                   .chain = kBtc,
                                   .ts = 5'300 + 9'000 * i,
                                   .asset = kBTC,
                                   .amt = Amount::from_double(30.0 * (i + 1) * 0.99 / 20.0).str(),
                                   .spenders = {"vault-btc"},
                                   .recipients = {"o" + std::to_string(i)}}));
    }
    TransferStore store = builder.build();
    GroupQuery query;
    query.targets = {TransferRef{kBtc, "d0"}, TransferRef{kBtc, "d1"}};
    query.trace.source_pairs = {{kEth, kETH}};
    GroupResult result = trace_group(store, book, query);
    CHECK(result.common_ancestors.empty());
    CHECK(result.degenerated_targets.size() == 2);
}

TEST_CASE("a cluster plus an outlier reports the root and degenerates the outlier") {
    FanOut world = fan_out_world(5, 2);
    // Outlier swap with disjoint ancestry.
    auto builder = fixtures::two_chain_builder();
    for (const Transfer& t : world.store.transfers()) {
        Transfer copy = t;
        builder.add(std::move(copy));
    }
    builder.add(make_transfer({.tx_id = "ofund", .ts = 90'000,
                               .amt = "500.00000000",
                               .spenders = {"elsewhere"}, .recipients = {"osrc"}}));
    builder.add(make_transfer({.tx_id = "osrc", .ts = 95'000, .amt = "400.00000000",
                               .spenders = {"osrc"}, .recipients = {"vault-eth"}}));
    builder.add(make_transfer({.tx_id = "odst", .chain = kBtc, .ts = 95'400, .asset = kBTC,
                               .amt = Amount::from_double(400.0 * 0.99 / 20.0).str(),
                               .spenders = {"vault-btc"}, .recipients = {"oout"}}));
    TransferStore store = builder.build();

    GroupQuery query = world.query;
    query.targets.push_back(TransferRef{kBtc, "odst"});
    GroupResult result = trace_group(store, world.book, query);
    REQUIRE_FALSE(result.common_ancestors.empty());
    CHECK(result.common_ancestors.front().first == "root");
    CHECK(result.common_ancestors.front().second == 5);
    REQUIRE(result.degenerated_targets.size() == 1);
    CHECK(result.degenerated_targets.front().tx_id == "odst");
}

TEST_CASE("vote threshold boundary") {
    FanOut two = fan_out_world(2, 1);
    GroupResult result = trace_group(two.store, two.book, two.query);
    REQUIRE_FALSE(result.common_ancestors.empty());
    CHECK(result.common_ancestors.front().first == "root");
    CHECK(result.common_ancestors.front().second == 2);  // exactly the threshold

    GroupQuery strict = two.query;
    strict.vote_threshold = 3;
    GroupResult none = trace_group(two.store, two.book, strict);
    CHECK(none.common_ancestors.empty());
    CHECK(none.degenerated_targets.size() == 2);
}

TEST_CASE("hit counts never decrease with depth") {
    FanOut world = fan_out_world(4, 3);
    std::map<TransferRef, std::vector<const Transfer*>> candidates;
    for (const TransferRef& target : world.query.targets) {
        TraceResult r = trace_single(world.store, world.book, world.store.resolve(target),
                                     world.query.trace);
        std::vector<const Transfer*> sources;
        for (const ScoredCandidate& c : r.candidates) {
            sources.push_back(&world.store.resolve(c.link.src));
        }
        candidates[target] = sources;
    }
    for (int depth = 1; depth < 5; ++depth) {
        VoteTable shallow = vote_common_ancestors(candidates, world.store, depth);
        VoteTable deep = vote_common_ancestors(candidates, world.store, depth + 1);
        for (const auto& [address, entry] : shallow.entries) {
            CHECK(deep.hit(address) >= entry.hit_count);
        }
    }
}

TEST_CASE("per-target failures are isolated") {
    FanOut world = fan_out_world(3, 2);
    GroupQuery query = world.query;
    query.targets.push_back(TransferRef{kBtc, "missing-tx"});
    GroupResult result = trace_group(world.store, world.book, query);
    CHECK(result.per_target.size() == 3);
    REQUIRE(result.per_target_errors.size() == 1);
    CHECK(result.per_target_errors.begin()->first.tx_id == "missing-tx");
    CHECK(result.common_ancestors.front().first == "root");
    // The failed target supports nothing, so it degenerates.
    bool degenerated = false;
    for (const TransferRef& t : result.degenerated_targets) {
        if (t.tx_id == "missing-tx") degenerated = true;
    }
    CHECK(degenerated);
}

TEST_CASE("target order does not change the outcome") {
    FanOut world = fan_out_world(5, 3);
    GroupQuery shuffled = world.query;
    std::reverse(shuffled.targets.begin(), shuffled.targets.end());
    GroupResult a = trace_group(world.store, world.book, world.query);
    GroupResult b = trace_group(world.store, world.book, shuffled);
    CHECK(group_result_to_json(a).dump() == group_result_to_json(b).dump());

    GroupQuery serial = world.query;
    serial.parallel = false;
    GroupResult c = trace_group(world.store, world.book, serial);
    CHECK(group_result_to_json(a).dump() == group_result_to_json(c).dump());
}

TEST_CASE("group query validation") {
    GroupQuery query;
    CHECK_THROWS_AS(query.validate(), ConfigError);  // no targets
    query.targets = {TransferRef{kBtc, "x"}, TransferRef{kBtc, "x"}};
    CHECK_THROWS_AS(query.validate(), ConfigError);  // duplicates
    query.targets = {TransferRef{kBtc, "x"}};
    query.vote_threshold = 1;
    CHECK_THROWS_AS(query.validate(), ConfigError);  // threshold below 2
    query.vote_threshold = 2;
    query.ancestry_depth = 0;
    CHECK_THROWS_AS(query.validate(), RangeError);
}
