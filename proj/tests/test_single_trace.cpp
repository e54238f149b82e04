#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "xtrace/report.hpp"
#include "xtrace/single_trace.hpp"

using namespace xtrace;
using fixtures::kBtc;
using fixtures::kBTC;
using fixtures::kEth;
using fixtures::kETH;
using fixtures::make_transfer;

namespace {

TraceConfig eth_to_btc_config() {
    TraceConfig cfg;
    cfg.source_pairs = {{kEth, kETH}};
    return cfg;
}

// Store with one BTC destination and an ETH source planted at the given gap
// and fee, under a constant ETH-per-BTC rate of 20.
struct SwapFixture {
    TransferStore store;
    PriceBook book;
    TraceConfig cfg;
    TransferRef target;
};

SwapFixture planted_swap(double fee = 0.02, Timestamp gap = 300) {
    auto b = fixtures::two_chain_builder();
    b.add(make_transfer({.tx_id = "dst", .chain = kBtc, .ts = 10'000, .asset = kBTC}));
    double a_src = 1.0 * 20.0 / (1.0 - fee);
    b.add(make_transfer({.tx_id = "src",
                         .chain = kEth,
                         .ts = 10'000 - gap,
                         .asset = kETH,
                         .amt = Amount::from_double(a_src).str()}));
    SwapFixture f{b.build(), fixtures::constant_book(kETH, kBTC, 20.0), eth_to_btc_config(),
                  TransferRef{kBtc, "dst"}};
    return f;
}

}  // namespace

TEST_CASE("temporal window arithmetic") {
    TraceConfig cfg;
    cfg.backward_window = 3600;
    cfg.settlement_delay = 0;
    cfg.timestamp_skew = 0;
    Transfer t = make_transfer({.tx_id = "x", .ts = 10'000});
    TemporalWindow w = temporal_window(t, cfg);
    CHECK(w.lo == 6400);
    CHECK(w.hi == 10'000);

    cfg.backward_window = 0;
    w = temporal_window(t, cfg);
    CHECK(w.lo == 10'000);
    CHECK(w.hi == 10'000);

    cfg.backward_window = 3600;
    cfg.settlement_delay = 60;
    cfg.timestamp_skew = 90;
    w = temporal_window(t, cfg);
    CHECK(w.lo == 6250);
    CHECK(w.hi == 10'030);

    t.ts = 100;  // clamped at zero
    w = temporal_window(t, cfg);
    CHECK(w.lo == 0);
    CHECK(w.hi == 130);
}

TEST_CASE("candidate generation keeps in-window in-band transfers") {
    SwapFixture f = planted_swap();
    const Transfer& target = f.store.resolve(f.target);

    SECTION("planted source is generated") {
        auto candidates = generate_candidates(f.store, f.book, target, f.cfg);
        REQUIRE(candidates.size() == 1);
        CHECK(candidates.front()->tx_id == "src");
    }

    SECTION("amount decoy far outside the value interval is excluded") {
        auto b = fixtures::two_chain_builder();
        b.add(make_transfer({.tx_id = "dst", .chain = kBtc, .ts = 10'000, .asset = kBTC}));
        b.add(make_transfer({.tx_id = "src", .chain = kEth, .ts = 9'700, .asset = kETH,
                             .amt = Amount::from_double(20.0 / 0.98).str()}));
        // 2x the upper bound of V_s = [19, 21]
        b.add(make_transfer({.tx_id = "decoy", .chain = kEth, .ts = 9'600, .asset = kETH,
                             .amt = "42.00000000"}));
        TransferStore store = b.build();
        auto candidates = generate_candidates(store, f.book, store.get(kBtc, "dst"), f.cfg);
        REQUIRE(candidates.size() == 1);
        CHECK(candidates.front()->tx_id == "src");
    }

    SECTION("empty window yields no candidates") {
        auto b = fixtures::two_chain_builder();
        b.add(make_transfer({.tx_id = "dst", .chain = kBtc, .ts = 10'000, .asset = kBTC}));
        TransferStore store = b.build();
        CHECK(generate_candidates(store, f.book, store.get(kBtc, "dst"), f.cfg).empty());
    }

    SECTION("missing price series is a warning, not an error") {
        PriceBook empty;
        empty.finalize();
        std::vector<PairNote> warnings;
        auto candidates = generate_candidates(f.store, empty, target, f.cfg, &warnings);
        CHECK(candidates.empty());
        REQUIRE(warnings.size() == 1);
        CHECK(warnings.front().chain == kEth);
    }
}

TEST_CASE("forward validation follows the fee sign and cap") {
    const AssetId kDST{"DST"}, kSRC{"SRC"};
    PriceBook book;
    book.add(fixtures::constant_series(kDST, kSRC, 15.0));
    book.finalize();
    TraceConfig cfg;

    Transfer candidate = make_transfer({.tx_id = "c", .ts = 9'000, .asset = kSRC});
    Transfer target = make_transfer({.tx_id = "t", .ts = 9'100, .asset = kDST, .amt = "15"});

    SECTION("zero fee boundary accepts") {
        ValidationDecision d = validate_forward(candidate, target, book, cfg);
        CHECK(d.accepted);
        CHECK(d.implied_fee_rate == 0.0);
        CHECK(d.implied_dst_value == Catch::Approx(15.0));
    }

    SECTION("negative implied fee rejects") {
        target.amt = Amount::parse("15.5");
        ValidationDecision d = validate_forward(candidate, target, book, cfg);
        CHECK_FALSE(d.accepted);
        CHECK(d.reason == RejectReason::negative_fee);
    }

    SECTION("moderate fee accepts with the computed rate") {
        target.amt = Amount::parse("14");
        ValidationDecision d = validate_forward(candidate, target, book, cfg);
        CHECK(d.accepted);
        CHECK(d.implied_fee_rate == Catch::Approx((15.0 - 14.0) / 15.0).epsilon(1e-9));
    }

    SECTION("fee above the cap rejects") {
        target.amt = Amount::parse("13");
        ValidationDecision d = validate_forward(candidate, target, book, cfg);
        CHECK_FALSE(d.accepted);
        CHECK(d.reason == RejectReason::excessive_fee);
    }

    SECTION("later-than-target candidates violate causality") {
        candidate.ts = 9'200;
        ValidationDecision d = validate_forward(candidate, target, book, cfg);
        CHECK_FALSE(d.accepted);
        CHECK(d.reason == RejectReason::causality_violation);
    }

    SECTION("missing or uncovered prices reject with a coverage gap") {
        PriceBook empty;
        empty.finalize();
        ValidationDecision d = validate_forward(candidate, target, empty, cfg);
        CHECK_FALSE(d.accepted);
        CHECK(d.reason == RejectReason::price_coverage_gap);

        PriceBook late;
        late.add(PriceSeries(kDST, kSRC, {{50'000, 15.0}}));
        late.finalize();
        d = validate_forward(candidate, target, late, cfg);
        CHECK_FALSE(d.accepted);
        CHECK(d.reason == RejectReason::price_coverage_gap);
    }
}

TEST_CASE("time score") {
    CHECK(score_time(0.0, 300.0) == 1.0);
    CHECK(score_time(300.0, 300.0) == Catch::Approx(0.367879441).epsilon(1e-6));
    CHECK(score_time(900.0, 300.0) == Catch::Approx(0.049787068).epsilon(1e-6));
    CHECK_THROWS_AS(score_time(-1.0, 300.0), RangeError);

    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
        double a = rng.uniform(0.0, 10'000.0);
        double b = a + rng.uniform(1e-6, 5'000.0);
        CHECK(score_time(b, 300.0) < score_time(a, 300.0));
    }
}

TEST_CASE("amount score") {
    CHECK(score_amount(0.03, 0.03, 0.05) == 0.0);
    CHECK(score_amount(0.0, 0.05, 0.05) == 1.0);
    CHECK(score_amount(0.01, 0.02, 0.05) == Catch::Approx(0.2).epsilon(1e-12));
    CHECK(score_amount(0.0, 0.5, 0.05) == 1.0);  // clamped
    CHECK_THROWS_AS(score_amount(0.02, 0.01, 0.05), InternalError);
    CHECK_THROWS_AS(score_amount(0.0, 0.1, 0.0), ConfigError);
}

TEST_CASE("feasible fee range is non-empty for validated candidates") {
    Rng rng(23);
    const AssetId kDST{"DST"}, kSRC{"SRC"};
    TraceConfig cfg;
    for (int i = 0; i < 300; ++i) {
        double rate = rng.uniform(0.5, 50.0);
        PriceBook book;
        book.add(fixtures::constant_series(kDST, kSRC, rate));
        book.finalize();
        Transfer candidate =
            make_transfer({.tx_id = "c", .ts = 9'000, .asset = kSRC,
                           .amt = Amount::from_double(rng.uniform(0.5, 100.0)).str()});
        double fee = rng.uniform(0.0, cfg.fee_max);
        Transfer target = make_transfer(
            {.tx_id = "t", .ts = 9'300, .asset = kDST,
             .amt = Amount::from_double(candidate.amt.to_double() * rate * (1.0 - fee)).str()});
        ValidationDecision d = validate_forward(candidate, target, book, cfg);
        if (!d.accepted) continue;  // rounding can nudge the fee past the cap
        FeeRateRange r = feasible_fee_range(candidate, target, book, cfg);
        CHECK(r.r_min <= r.r_max);
        CHECK(r.r_min >= 0.0);
        CHECK(r.r_max <= cfg.fee_max);
    }
}

TEST_CASE("trace_single ranks the true source first") {
    SECTION("single planted swap in a clean world") {
        SwapFixture f = planted_swap();
        TraceResult result = trace_single(f.store, f.book, f.store.resolve(f.target), f.cfg);
        REQUIRE(result.candidates.size() == 1);
        CHECK(result.candidates.front().link.src.tx_id == "src");
        CHECK(result.candidates.front().gap == 300);
        CHECK(result.candidates.front().link.bridge.id == "unknown");
    }

    SECTION("equal-amount decoys at larger gaps rank below the true source") {
        auto b = fixtures::two_chain_builder();
        b.add(make_transfer({.tx_id = "dst", .chain = kBtc, .ts = 10'000, .asset = kBTC}));
        std::string amt = Amount::from_double(20.0 / 0.98).str();
        b.add(make_transfer(
            {.tx_id = "src", .chain = kEth, .ts = 9'700, .asset = kETH, .amt = amt}));
        b.add(make_transfer(
            {.tx_id = "decoy1", .chain = kEth, .ts = 9'200, .asset = kETH, .amt = amt}));
        b.add(make_transfer(
            {.tx_id = "decoy2", .chain = kEth, .ts = 8'600, .asset = kETH, .amt = amt}));
        TransferStore store = b.build();
        PriceBook book = fixtures::constant_book(kETH, kBTC, 20.0);
        TraceResult result =
            trace_single(store, book, store.get(kBtc, "dst"), eth_to_btc_config());
        REQUIRE(result.candidates.size() == 3);
        CHECK(result.candidates[0].link.src.tx_id == "src");
        CHECK(result.candidates[1].link.src.tx_id == "decoy1");
        CHECK(result.candidates[2].link.src.tx_id == "decoy2");
        CHECK(result.candidates[0].s_time > result.candidates[1].s_time);
    }

    SECTION("target with nothing in window yields an empty result") {
        auto b = fixtures::two_chain_builder();
        b.add(make_transfer({.tx_id = "dst", .chain = kBtc, .ts = 10'000, .asset = kBTC}));
        TransferStore store = b.build();
        PriceBook book = fixtures::constant_book(kETH, kBTC, 20.0);
        TraceResult result =
            trace_single(store, book, store.get(kBtc, "dst"), eth_to_btc_config());
        CHECK(result.candidates.empty());
    }
}

TEST_CASE("scored candidates satisfy the aggregation identity") {
    SwapFixture f = planted_swap(0.03, 450);
    TraceResult result = trace_single(f.store, f.book, f.store.resolve(f.target), f.cfg);
    REQUIRE_FALSE(result.candidates.empty());
    for (const ScoredCandidate& c : result.candidates) {
        double expect = (f.cfg.weight_time * c.s_time + f.cfg.weight_amount * c.s_amt) /
                        (f.cfg.weight_time + f.cfg.weight_amount);
        CHECK(std::abs(c.s_final - expect) < 1e-12);
        CHECK(c.implied_fee_rate >= 0.0);
        CHECK(c.implied_fee_rate <= f.cfg.fee_max);
        CHECK(c.s_time > 0.0);
        CHECK(c.s_time <= 1.0);
        CHECK(c.s_amt >= 0.0);
        CHECK(c.s_amt <= 1.0);
    }
}

TEST_CASE("accepted set equals the brute-force predicate scan") {
    for (std::uint64_t seed : {41u, 42u, 43u}) {
        Rng rng(seed);
        auto b = fixtures::two_chain_builder();
        // Random ETH noise plus BTC targets.
        std::vector<std::string> targets;
        for (int i = 0; i < 3000; ++i) {
            b.add(make_transfer({.tx_id = "e" + std::to_string(i),
                                 .chain = kEth,
                                 .ts = rng.uniform_int(0, 100'000),
                                 .asset = kETH,
                                 .amt = Amount::from_double(rng.log_uniform(0.5, 400.0)).str()}));
        }
        for (int i = 0; i < 15; ++i) {
            std::string tx = "b" + std::to_string(i);
            b.add(make_transfer({.tx_id = tx,
                                 .chain = kBtc,
                                 .ts = rng.uniform_int(5'000, 100'000),
                                 .asset = kBTC,
                                 .amt = Amount::from_double(rng.log_uniform(0.2, 10.0)).str()}));
            targets.push_back(tx);
        }
        TransferStore store = b.build();

        std::vector<PriceSample> samples;
        double rate = 20.0;
        for (Timestamp ts = 0; ts <= 100'000; ts += 60) {
            samples.push_back({ts, rate});
            rate *= std::exp(0.002 * rng.normal());
        }
        PriceBook book;
        book.add(PriceSeries(kETH, kBTC, samples));
        book.finalize();
        oracle::RawPrices raw(book);

        TraceConfig cfg = eth_to_btc_config();
        for (const std::string& tx : targets) {
            const Transfer& target = store.get(kBtc, tx);
            TraceResult result = trace_single(store, book, target, cfg);
            CHECK(oracle::result_refs(result) ==
                  oracle::brute_accepted_candidates(store.transfers(), raw, target, cfg));
        }
    }
}

TEST_CASE("ranking is a strict total order and rescaling weights preserves it") {
    Rng rng(59);
    for (int round = 0; round < 100; ++round) {
        std::vector<ScoredCandidate> set;
        int n = static_cast<int>(rng.uniform_int(2, 12));
        for (int i = 0; i < n; ++i) {
            ScoredCandidate c;
            c.link.src = TransferRef{kEth, "c" + std::to_string(i)};
            c.s_time = rng.uniform(0.0, 1.0);
            c.s_amt = rng.uniform(0.0, 1.0);
            c.gap = rng.uniform_int(0, 4000);
            set.push_back(c);
        }
        double wt = 0.7, wa = 0.3;
        double scale = rng.uniform(0.05, 20.0);
        auto finalize = [&](std::vector<ScoredCandidate> v, double t, double a) {
            for (ScoredCandidate& c : v) c.s_final = (t * c.s_time + a * c.s_amt) / (t + a);
            detail::rank_candidates(v);
            return v;
        };
        auto base = finalize(set, wt, wa);
        auto scaled = finalize(set, wt * scale, wa * scale);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(base[i].link.src.tx_id == scaled[i].link.src.tx_id);
        }
        // Strict order: no adjacent pair compares equal on all three keys.
        for (std::size_t i = 0; i + 1 < base.size(); ++i) {
            bool distinct = base[i].s_final != base[i + 1].s_final ||
                            base[i].gap != base[i + 1].gap ||
                            base[i].link.src.tx_id != base[i + 1].link.src.tx_id;
            CHECK(distinct);
        }
    }
}

TEST_CASE("identical inputs produce bit-identical serialized results") {
    SwapFixture f = planted_swap(0.025, 500);
    TraceResult a = trace_single(f.store, f.book, f.store.resolve(f.target), f.cfg);
    TraceResult b = trace_single(f.store, f.book, f.store.resolve(f.target), f.cfg);
    CHECK(trace_result_to_json(a).dump() == trace_result_to_json(b).dump());
    CHECK(trace_result_to_text(a) == trace_result_to_text(b));
}

TEST_CASE("config validation enforces the weight mandate") {
    TraceConfig cfg;
    cfg.weight_time = 0.3;
    cfg.weight_amount = 0.7;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TraceConfig{};
    cfg.price_buffer = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TraceConfig{};
    cfg.fee_range_norm = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(TraceConfig{}.validate());
}
