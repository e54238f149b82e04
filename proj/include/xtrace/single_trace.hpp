#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "xtrace/price_oracle.hpp"
#include "xtrace/transfer_store.hpp"
#include "xtrace/types.hpp"

namespace xtrace {

struct SourcePair {
    ChainId chain;
    AssetId asset;
    auto operator<=>(const SourcePair&) const = default;
};

/**
 * Tuning knobs for backward single-transfer tracing. Timing carries more
 * weight than amount fit: temporal violations are stronger falsehood signals
 * than amount mismatches, which market noise can produce.
 */
struct TraceConfig {
    Timestamp backward_window = 3600;   // how far back candidates are searched
    Timestamp settlement_delay = 0;     // bridge settlement lead time
    Timestamp timestamp_skew = 90;      // symmetric relaxation for block-time imprecision
    double price_buffer = 0.05;         // fractional buffer on the feasible price range
    double time_decay = 300.0;          // seconds; typical bridge processing window
    double weight_time = 0.7;
    double weight_amount = 0.3;
    double fee_range_norm = 0.05;       // normalizer for the feasible fee-rate width
    double fee_max = 0.10;              // maximum plausible implied fee rate
    Timestamp tight_half_window = 300;  // half-width of the validation price window
    std::vector<SourcePair> source_pairs;

    void validate() const {
        if (!(weight_time > weight_amount)) {
            throw ConfigError("time weight must exceed amount weight");
        }
        if (weight_time <= 0.0 || weight_amount <= 0.0) {
            throw ConfigError("score weights must be positive");
        }
        if (backward_window < 0 || settlement_delay < 0 || timestamp_skew < 0 ||
            tight_half_window < 0) {
            throw ConfigError("window parameters must be non-negative");
        }
        if (price_buffer < 0.0 || price_buffer >= 1.0) {
            throw ConfigError("price buffer must lie in [0, 1)");
        }
        if (fee_range_norm <= 0.0) throw ConfigError("fee range normalizer must be positive");
        if (fee_max <= 0.0 || fee_max >= 1.0) throw ConfigError("fee cap must lie in (0, 1)");
        if (time_decay <= 0.0) throw ConfigError("time decay must be positive");
    }
};

struct TemporalWindow {
    Timestamp lo = 0;
    Timestamp hi = 0;
};

// Backward search window for a destination transfer, clamped at zero:
// [t_d - window - delay - skew, t_d - delay + skew].
inline TemporalWindow temporal_window(const Transfer& target, const TraceConfig& cfg) {
    Timestamp lo = target.ts - cfg.backward_window - cfg.settlement_delay - cfg.timestamp_skew;
    Timestamp hi = target.ts - cfg.settlement_delay + cfg.timestamp_skew;
    lo = std::max<Timestamp>(lo, 0);
    hi = std::max<Timestamp>(hi, 0);
    return TemporalWindow{lo, std::max(lo, hi)};
}

enum class RejectReason {
    none,
    causality_violation,  // candidate timestamp after the destination
    negative_fee,         // implied destination value below the observed one
    excessive_fee,        // implied fee rate above the configured cap
    price_coverage_gap,   // no usable rate around the candidate time
};

inline const char* reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::none: return "none";
        case RejectReason::causality_violation: return "causality_violation";
        case RejectReason::negative_fee: return "negative_fee";
        case RejectReason::excessive_fee: return "excessive_fee";
        case RejectReason::price_coverage_gap: return "price_coverage_gap";
    }
    return "unknown";
}

struct ValidationDecision {
    bool accepted = false;
    RejectReason reason = RejectReason::none;
    double implied_fee_rate = 0.0;
    double implied_dst_value = 0.0;
};

struct ScoredCandidate {
    CrossChainLink link;
    double s_time = 0.0;
    double s_amt = 0.0;
    double s_final = 0.0;
    double implied_fee_rate = 0.0;
    Timestamp gap = 0;  // ts(target) - ts(source)
};

struct PairNote {
    ChainId chain;
    AssetId asset;
    std::string message;
};

struct TraceResult {
    TransferRef target;
    std::vector<ScoredCandidate> candidates;  // ranked
    TraceConfig config;
    std::vector<PairNote> warnings;
};

/**
 * Value-bounded backward search: for every configured source pair, convert
 * the destination amount through the feasible price range over the temporal
 * window and keep the transfers whose amount falls inside the buffered
 * source-value interval. Pairs without price coverage are skipped and noted.
 */
inline std::vector<const Transfer*> generate_candidates(const TransferStore& store,
                                                        const PriceBook& prices,
                                                        const Transfer& target,
                                                        const TraceConfig& cfg,
                                                        std::vector<PairNote>* warnings = nullptr) {
    const Transfer& dst = store.get(target.chain, target.tx_id);
    TemporalWindow window = temporal_window(dst, cfg);
    std::vector<const Transfer*> out;
    std::set<const Transfer*> seen;
    auto warn = [&](const SourcePair& pair, std::string message) {
        if (warnings) warnings->push_back(PairNote{pair.chain, pair.asset, std::move(message)});
    };
    for (const SourcePair& pair : cfg.source_pairs) {
        const PriceSeries* series = prices.find(pair.asset, dst.asset);
        if (!series) {
            warn(pair, "no price series for " + pair.asset.id + "/" + dst.asset.id + "; skipped");
            continue;
        }
        PriceRange range;
        try {
            range = series->range_over(window.lo, window.hi);
        } catch (const PriceOutOfRangeError& e) {
            warn(pair, std::string("price coverage gap: ") + e.what());
            continue;
        }
        ValueInterval values = source_value_interval(range, dst.amt, cfg.price_buffer);
        for (const Transfer* t :
             store.search(pair.chain, pair.asset, window.lo, window.hi, values.lo, values.hi)) {
            if (t == &dst) continue;  // a transfer cannot source itself
            if (seen.insert(t).second) out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end(), [](const Transfer* a, const Transfer* b) {
        return std::tie(a->chain, a->ts, a->tx_id) < std::tie(b->chain, b->ts, b->tx_id);
    });
    return out;
}

/**
 * Forward value-consistency check: the candidate amount converted at the
 * most favorable rate near its own timestamp must cover the destination
 * amount (non-negative effective fee), and the implied fee must stay
 * plausible. Uses the raw tight-window maximum, unbuffered.
 */
inline ValidationDecision validate_forward(const Transfer& candidate, const Transfer& target,
                                           const PriceBook& prices, const TraceConfig& cfg) {
    if (candidate.ts > target.ts) {
        return {false, RejectReason::causality_violation, 0.0, 0.0};
    }
    const PriceSeries* series = prices.find(target.asset, candidate.asset);
    if (!series) return {false, RejectReason::price_coverage_gap, 0.0, 0.0};
    double rate_max = 0.0;
    try {
        rate_max = series->tight_max_around(candidate.ts, cfg.tight_half_window);
    } catch (const PriceOutOfRangeError&) {
        return {false, RejectReason::price_coverage_gap, 0.0, 0.0};
    }
    double implied_dst = candidate.amt.to_double() * rate_max;
    double a_dst = target.amt.to_double();
    if (implied_dst < a_dst) {
        return {false, RejectReason::negative_fee, 0.0, implied_dst};
    }
    double fee_rate = implied_dst > 0.0 ? (implied_dst - a_dst) / implied_dst : 0.0;
    if (fee_rate > cfg.fee_max) {
        return {false, RejectReason::excessive_fee, fee_rate, implied_dst};
    }
    return {true, RejectReason::none, fee_rate, implied_dst};
}

// Exponential time-proximity score; gap 0 scores 1.
inline double score_time(double gap_seconds, double decay) {
    if (gap_seconds < 0.0) throw RangeError("scoreTime: gap must be non-negative");
    if (decay <= 0.0) throw ConfigError("scoreTime: decay must be positive");
    return std::exp(-gap_seconds / decay);
}

// Width of the feasible fee-rate range, normalized and clamped to [0, 1]. A
// wide range means the fit is robust to rate uncertainty; a narrow one hints
// at a coincidental numeric match.
inline double score_amount(double r_min, double r_max, double r_norm) {
    if (r_norm <= 0.0) throw ConfigError("scoreAmount: normalizer must be positive");
    if (r_min > r_max) throw InternalError("scoreAmount: empty feasible fee range");
    return std::clamp((r_max - r_min) / r_norm, 0.0, 1.0);
}

struct FeeRateRange {
    double r_min = 0.0;
    double r_max = 0.0;
};

/**
 * Feasible implied-fee interval for a validated candidate, derived from the
 * buffered tight-window extremes of the destination-per-source rate and
 * intersected with [0, fee_max]. Non-empty for any candidate that passed
 * forward validation.
 */
inline FeeRateRange feasible_fee_range(const Transfer& candidate, const Transfer& target,
                                       const PriceBook& prices, const TraceConfig& cfg) {
    const PriceSeries& series = prices.get(target.asset, candidate.asset);
    PriceRange tight = series.range_over(candidate.ts - cfg.tight_half_window,
                                         candidate.ts + cfg.tight_half_window);
    double a_src = candidate.amt.to_double();
    double a_dst = target.amt.to_double();
    if (a_src <= 0.0) throw InternalError("feasible_fee_range: non-positive source amount");
    double r_lo = 1.0 - a_dst / (a_src * tight.p_min * (1.0 - cfg.price_buffer));
    double r_hi = 1.0 - a_dst / (a_src * tight.p_max * (1.0 + cfg.price_buffer));
    FeeRateRange out{std::max(0.0, r_lo), std::min(cfg.fee_max, r_hi)};
    if (out.r_min > out.r_max) {
        throw InternalError("feasible fee range is empty for a validated candidate");
    }
    return out;
}

namespace detail {

inline ScoredCandidate score_candidate(const Transfer& candidate, const Transfer& target,
                                       const PriceBook& prices, const TraceConfig& cfg,
                                       double implied_fee_rate) {
    Timestamp gap = target.ts - candidate.ts;
    FeeRateRange fees = feasible_fee_range(candidate, target, prices, cfg);
    ScoredCandidate sc;
    sc.link = CrossChainLink{ref_of(candidate), ref_of(target), BridgeId{"unknown"}};
    sc.gap = gap;
    sc.s_time = score_time(static_cast<double>(gap), cfg.time_decay);
    sc.s_amt = score_amount(fees.r_min, fees.r_max, cfg.fee_range_norm);
    sc.s_final = (cfg.weight_time * sc.s_time + cfg.weight_amount * sc.s_amt) /
                 (cfg.weight_time + cfg.weight_amount);
    sc.implied_fee_rate = implied_fee_rate;
    return sc;
}

inline void rank_candidates(std::vector<ScoredCandidate>& scored) {
    std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.s_final != b.s_final) return a.s_final > b.s_final;
        if (a.gap != b.gap) return a.gap < b.gap;
        return a.link.src.tx_id < b.link.src.tx_id;
    });
}

// Validation, scoring and ranking over an already-generated candidate list;
// shared by trace_single and the investigation loop so both produce
// identical results from identical inputs.
inline TraceResult score_and_rank(const std::vector<const Transfer*>& candidates,
                                  const Transfer& target, const PriceBook& prices,
                                  const TraceConfig& cfg, std::vector<PairNote> warnings) {
    TraceResult result;
    result.target = ref_of(target);
    result.config = cfg;
    result.warnings = std::move(warnings);
    for (const Transfer* c : candidates) {
        ValidationDecision decision = validate_forward(*c, target, prices, cfg);
        if (!decision.accepted) continue;
        result.candidates.push_back(
            score_candidate(*c, target, prices, cfg, decision.implied_fee_rate));
    }
    rank_candidates(result.candidates);
    return result;
}

}  // namespace detail

/**
 * Backward single-transfer trace: candidate generation, forward validation,
 * scoring and deterministic ranking by (final score desc, gap asc, tx id
 * asc). An empty candidate list is a valid result.
 */
inline TraceResult trace_single(const TransferStore& store, const PriceBook& prices,
                                const Transfer& target, const TraceConfig& cfg) {
    cfg.validate();
    const Transfer& dst = store.get(target.chain, target.tx_id);
    std::vector<PairNote> warnings;
    std::vector<const Transfer*> candidates =
        generate_candidates(store, prices, dst, cfg, &warnings);
    return detail::score_and_rank(candidates, dst, prices, cfg, std::move(warnings));
}

}  // namespace xtrace
