#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xtrace/amount.hpp"
#include "xtrace/types.hpp"

namespace xtrace {

struct PriceSample {
    Timestamp ts = 0;
    double rate = 0.0;
    auto operator<=>(const PriceSample&) const = default;
};

struct PriceRange {
    double p_min = 0.0;
    double p_max = 0.0;
    Timestamp window_lo = 0;
    Timestamp window_hi = 0;
};

// Source-value interval in source-asset units.
struct ValueInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double value) const { return value >= lo && value <= hi; }
};

/**
 * Historical exchange-rate series with step-function semantics: the rate in
 * effect at time t is the latest sample with sample.ts <= t. Rates are units
 * of base per unit of quote, so rate * quote-amount = base-amount.
 */
class PriceSeries {
public:
    PriceSeries(AssetId base, AssetId quote, std::vector<PriceSample> samples,
                bool inverted_from_reverse = false)
        : base_(std::move(base)),
          quote_(std::move(quote)),
          samples_(std::move(samples)),
          inverted_(inverted_from_reverse) {
        if (samples_.empty()) throw ConfigError(pair_name() + ": empty price series");
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            if (samples_[i].rate <= 0.0) {
                throw ConfigError(pair_name() + ": non-positive rate at index " +
                                  std::to_string(i));
            }
            if (i > 0 && samples_[i].ts <= samples_[i - 1].ts) {
                throw ConfigError(pair_name() + ": timestamps must be strictly increasing");
            }
        }
    }

    const AssetId& base() const { return base_; }
    const AssetId& quote() const { return quote_; }
    const std::vector<PriceSample>& samples() const { return samples_; }
    bool inverted_from_reverse() const { return inverted_; }
    std::string pair_name() const { return base_.id + "/" + quote_.id; }

    // Rate of the latest sample at or before t.
    double rate_at(Timestamp t) const {
        if (t < samples_.front().ts) {
            throw PriceOutOfRangeError(pair_name() + ": no rate at t=" + std::to_string(t));
        }
        auto it = std::partition_point(samples_.begin(), samples_.end(),
                                       [&](const PriceSample& s) { return s.ts <= t; });
        return std::prev(it)->rate;
    }

    /**
     * Min/max over the samples inside [lo, hi] plus the step value in effect
     * at lo, so the rate active when the window opens is always counted.
     */
    PriceRange range_over(Timestamp lo, Timestamp hi) const {
        if (lo > hi) throw RangeError(pair_name() + ": rangeOver with lo > hi");
        bool have = false;
        double mn = 0.0, mx = 0.0;
        auto fold = [&](double r) {
            if (!have) {
                mn = mx = r;
                have = true;
            } else {
                mn = std::min(mn, r);
                mx = std::max(mx, r);
            }
        };
        if (lo >= samples_.front().ts) fold(rate_at(lo));
        auto it = std::partition_point(samples_.begin(), samples_.end(),
                                       [&](const PriceSample& s) { return s.ts < lo; });
        for (; it != samples_.end() && it->ts <= hi; ++it) fold(it->rate);
        if (!have) {
            throw PriceOutOfRangeError(pair_name() + ": no coverage in [" + std::to_string(lo) +
                                       ", " + std::to_string(hi) + "]");
        }
        return PriceRange{mn, mx, lo, hi};
    }

    // Max rate over [center - half_window, center + half_window].
    double tight_max_around(Timestamp center, Timestamp half_window) const {
        if (half_window < 0) throw RangeError(pair_name() + ": negative half window");
        return range_over(center - half_window, center + half_window).p_max;
    }

    double tight_min_around(Timestamp center, Timestamp half_window) const {
        if (half_window < 0) throw RangeError(pair_name() + ": negative half window");
        return range_over(center - half_window, center + half_window).p_min;
    }

    // Reverse-direction series (rate -> 1/rate); exact under step semantics.
    PriceSeries inverted() const {
        std::vector<PriceSample> inv;
        inv.reserve(samples_.size());
        for (const PriceSample& s : samples_) inv.push_back({s.ts, 1.0 / s.rate});
        return PriceSeries(quote_, base_, std::move(inv), true);
    }

private:
    AssetId base_;
    AssetId quote_;
    std::vector<PriceSample> samples_;
    bool inverted_;
};

inline ValueInterval source_value_interval(const PriceRange& range, Amount a_dst, double eps_p) {
    if (eps_p < 0.0 || eps_p >= 1.0) {
        throw ConfigError("price buffer must lie in [0, 1), got " + std::to_string(eps_p));
    }
    if (a_dst.negative()) throw RangeError("destination amount must be non-negative");
    double a = a_dst.to_double();
    return ValueInterval{a * range.p_min * (1.0 - eps_p), a * range.p_max * (1.0 + eps_p)};
}

/**
 * Set of price series keyed by (base, quote). A missing direction is served
 * by inverting the stored reverse pair; inverted series are materialized at
 * finalize() so the book is immutable afterwards.
 */
class PriceBook {
public:
    void add(PriceSeries series) {
        auto key = std::make_pair(series.base(), series.quote());
        if (series_.count(key)) {
            throw ConfigError("duplicate price series for " + series.pair_name());
        }
        series_.emplace(std::move(key), std::move(series));
        finalized_ = false;
    }

    // Materialize missing reverse directions; idempotent.
    void finalize() {
        std::vector<PriceSeries> derived;
        for (const auto& [key, series] : series_) {
            if (!series_.count(std::make_pair(key.second, key.first))) {
                derived.push_back(series.inverted());
            }
        }
        for (PriceSeries& s : derived) {
            auto key = std::make_pair(s.base(), s.quote());
            series_.emplace(std::move(key), std::move(s));
        }
        finalized_ = true;
    }

    bool finalized() const { return finalized_; }
    std::size_t size() const { return series_.size(); }

    const PriceSeries* find(const AssetId& base, const AssetId& quote) const {
        auto it = series_.find(std::make_pair(base, quote));
        return it == series_.end() ? nullptr : &it->second;
    }

    const PriceSeries& get(const AssetId& base, const AssetId& quote) const {
        const PriceSeries* s = find(base, quote);
        if (!s) throw NotFoundError("no price series for " + base.id + "/" + quote.id);
        return *s;
    }

    // Directly loaded (non-derived) series, in key order.
    std::vector<const PriceSeries*> primary_series() const {
        std::vector<const PriceSeries*> out;
        for (const auto& [key, s] : series_) {
            if (!s.inverted_from_reverse()) out.push_back(&s);
        }
        return out;
    }

private:
    std::map<std::pair<AssetId, AssetId>, PriceSeries> series_;
    bool finalized_ = false;
};

}  // namespace xtrace
