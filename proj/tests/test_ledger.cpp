#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "xtrace/transfer_store.hpp"

using namespace xtrace;
using fixtures::kBtc;
using fixtures::kBTC;
using fixtures::kEth;
using fixtures::kETH;
using fixtures::make_transfer;
using fixtures::two_chain_builder;

namespace {

std::vector<std::string> ids(const std::vector<const Transfer*>& transfers) {
    std::vector<std::string> out;
    for (const Transfer* t : transfers) out.push_back(t->tx_id);
    return out;
}

}  // namespace

TEST_CASE("utxo predecessors follow spent outputs") {
    auto b = two_chain_builder();
    b.add(make_transfer({.tx_id = "p", .chain = kBtc, .ts = 10, .asset = kBTC}));
    b.add(make_transfer({.tx_id = "t",
                         .chain = kBtc,
                         .ts = 20,
                         .asset = kBTC,
                         .inputs = {{"p", 0}}}));
    TransferStore store = b.build();
    CHECK(ids(store.predecessors(store.get(kBtc, "t"))) == std::vector<std::string>{"p"});
    CHECK(store.predecessors(store.get(kBtc, "p")).empty());
}

TEST_CASE("account transfer with unpaid spender has no predecessors") {
    auto b = two_chain_builder();
    b.add(make_transfer({.tx_id = "t", .ts = 50, .spenders = {"a"}}));
    TransferStore store = b.build();
    CHECK(store.predecessors(store.get(kEth, "t")).empty());
}

TEST_CASE("account predecessors keep the K latest incoming transfers") {
    auto b = two_chain_builder();
    for (int i = 0; i < 20; ++i) {
        b.add(make_transfer({.tx_id = "in" + std::to_string(i),
                             .ts = 100 + i,
                             .spenders = {"funder" + std::to_string(i)},
                             .recipients = {"a"}}));
    }
    b.add(make_transfer({.tx_id = "t", .ts = 500, .spenders = {"a"}}));
    TransferStore store = b.build();
    const Transfer& t = store.get(kEth, "t");

    // Expected set frozen from the brute-force scan: sort by ord, keep the
    // 16-transfer suffix.
    auto expected = oracle::brute_predecessors(store.transfers(), t, ChainModel::account, 16);
    REQUIRE(expected.size() == 16);
    CHECK(expected.front()->tx_id == "in4");

    auto got = store.predecessors(t);
    CHECK(ids(got) == ids(expected));

    AncestryOptions wide;
    wide.account_fanin_limit = 32;
    CHECK(store.predecessors(t, wide).size() == 20);
}

TEST_CASE("predecessors_within walks a linear chain to depth H") {
    auto b = two_chain_builder();
    b.add(make_transfer({.tx_id = "t1", .ts = 10, .spenders = {"x1"}, .recipients = {"x2"}}));
    b.add(make_transfer({.tx_id = "t2", .ts = 20, .spenders = {"x2"}, .recipients = {"x3"}}));
    b.add(make_transfer({.tx_id = "t3", .ts = 30, .spenders = {"x3"}, .recipients = {"x4"}}));
    TransferStore store = b.build();
    const Transfer& t3 = store.get(kEth, "t3");
    CHECK(ids(store.predecessors_within(t3, 2)) == std::vector<std::string>{"t1", "t2"});
    CHECK(ids(store.predecessors_within(t3, 1)) == std::vector<std::string>{"t2"});
    CHECK(ids(store.predecessors_within(t3, 5)) == std::vector<std::string>{"t1", "t2"});
    CHECK_THROWS_AS(store.predecessors_within(t3, 0), RangeError);
}

TEST_CASE("branching cap keeps the largest-amount predecessors") {
    auto b = two_chain_builder();
    std::vector<std::string> top64;  // brute-force: amounts 100..199, keep largest 64
    for (int i = 0; i < 100; ++i) {
        b.add(make_transfer({.tx_id = "f" + std::to_string(i),
                             .ts = 100 + i,
                             .amt = Amount::from_double(100.0 + i).str(),
                             .spenders = {"w" + std::to_string(i)},
                             .recipients = {"hub"}}));
    }
    b.add(make_transfer({.tx_id = "t", .ts = 400, .spenders = {"hub"}}));
    TransferStore store = b.build();
    const Transfer& t = store.get(kEth, "t");

    AncestryOptions opts;
    opts.account_fanin_limit = 200;  // do not clip at the fan-in stage
    opts.branching_cap = 64;
    auto got = store.predecessors_within(t, 1, opts);
    REQUIRE(got.size() == 64);
    // Amounts 136..199 survive; f36 is the smallest kept.
    for (const Transfer* p : got) CHECK(p->amt >= Amount::from_double(136.0));
}

TEST_CASE("dust threshold excludes low-value ancestry") {
    auto b = two_chain_builder();
    b.add(make_transfer({.tx_id = "dusty", .ts = 5, .amt = "0.00000500",
                         .spenders = {"d"}, .recipients = {"a"}}));
    b.add(make_transfer({.tx_id = "big", .ts = 6, .amt = "5.00000000",
                         .spenders = {"b"}, .recipients = {"a"}}));
    b.add(make_transfer({.tx_id = "t", .ts = 10, .spenders = {"a"}}));
    TransferStore store = b.build();
    AncestryOptions opts;
    opts.dust_min[kETH] = Amount::parse("0.001");
    CHECK(ids(store.predecessors_within(store.get(kEth, "t"), 1, opts)) ==
          std::vector<std::string>{"big"});
}

TEST_CASE("search matches the brute-force filter on random instances") {
    for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
        TransferStore store = fixtures::random_store(seed, 10'000);
        Rng rng(seed * 99 + 1);
        for (int q = 0; q < 25; ++q) {
            Timestamp lo = rng.uniform_int(0, 200'000);
            Timestamp hi = lo + rng.uniform_int(0, 50'000);
            double alo = rng.uniform(0.0, 300.0);
            double ahi = alo + rng.uniform(0.0, 300.0);
            const ChainId& chain = q % 2 == 0 ? kBtc : kEth;
            const AssetId& asset = q % 2 == 0 ? kBTC : kETH;
            auto got = store.search(chain, asset, lo, hi, alo, ahi);
            auto want = oracle::brute_search(store.transfers(), chain, asset, lo, hi, alo, ahi);
            REQUIRE(got.size() == want.size());
            CHECK(got == want);
        }
    }
}

TEST_CASE("search validates ranges and chains") {
    TransferStore store = two_chain_builder().build();
    CHECK_THROWS_AS(store.search(kBtc, kBTC, 10, 5, 0, 1), RangeError);
    CHECK_THROWS_AS(store.search(kBtc, kBTC, 0, 5, 2, 1), RangeError);
    CHECK_THROWS_AS(store.search(ChainId{"nope"}, kBTC, 0, 5, 0, 1), InvalidChainError);
    CHECK(store.search(kBtc, kBTC, 0, 100, 0, 100).empty());
}

TEST_CASE("get round-trips and misses raise not-found") {
    auto b = two_chain_builder();
    b.add(make_transfer({.tx_id = "ab12", .chain = kBtc, .ts = 7, .asset = kBTC}));
    b.add(make_transfer({.tx_id = "ab12", .chain = kEth, .ts = 9}));
    TransferStore store = b.build();
    CHECK(store.get(kBtc, "ab12").ts == 7);
    CHECK(store.get(kEth, "ab12").ts == 9);  // same id on two chains stays distinct
    CHECK_THROWS_AS(store.get(kBtc, "missing"), NotFoundError);
    CHECK_THROWS_AS(store.get(ChainId{"nope"}, "ab12"), InvalidChainError);
}

TEST_CASE("builder rejects duplicate ids and malformed transfers") {
    auto b = two_chain_builder();
    b.add(make_transfer({.tx_id = "x", .ts = 1}));
    CHECK_THROWS_AS(b.add(make_transfer({.tx_id = "x", .ts = 2})), ConfigError);
    CHECK_THROWS_AS(b.add(make_transfer({.tx_id = "y", .chain = ChainId{"nope"}})),
                    InvalidChainError);
    CHECK_THROWS_AS(b.add(make_transfer({.tx_id = "z", .ts = 3, .spenders = {}})), ConfigError);
    Transfer no_outputs = make_transfer({.tx_id = "w", .chain = kBtc, .ts = 4, .asset = kBTC});
    no_outputs.outputs.clear();
    CHECK_THROWS_AS(b.add(no_outputs), ConfigError);
}

TEST_CASE("order soundness and depth monotonicity on random stores") {
    for (std::uint64_t seed : {21u, 22u}) {
        TransferStore store = fixtures::random_store(seed, 800);
        for (const Transfer& t : store.transfers()) {
            auto direct = store.predecessors(t);
            for (const Transfer* p : direct) CHECK(p->ord <= t.ord);

            auto shallow = store.predecessors_within(t, 1);
            auto deep = store.predecessors_within(t, 3);
            std::set<const Transfer*> deep_set(deep.begin(), deep.end());
            for (const Transfer* p : shallow) CHECK(deep_set.count(p) == 1);
        }
    }
}

TEST_CASE("predecessor queries are deterministic across repeats") {
    TransferStore store = fixtures::random_store(31, 2000);
    const Transfer& t = store.transfers().front();
    auto a = store.predecessors_within(t, 3);
    auto b = store.predecessors_within(t, 3);
    CHECK(a == b);
    auto s1 = store.search(kEth, kETH, 0, 100'000, 0.0, 100.0);
    auto s2 = store.search(kEth, kETH, 0, 100'000, 0.0, 100.0);
    CHECK(s1 == s2);
}
