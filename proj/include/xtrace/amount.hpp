#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "xtrace/errors.hpp"

namespace xtrace {

/**
 * Fixed-point asset amount with 8 decimal places.
 *
 * Amounts are stored as integer multiples of 1e-8 so that parsing and
 * serialization round-trip exactly; the canonical text form always carries
 * eight fractional digits ("1.50000000").
 */
class Amount {
public:
    static constexpr std::int64_t kScale = 100'000'000;
    static constexpr int kFractionDigits = 8;

    constexpr Amount() = default;

    static constexpr Amount from_units(std::int64_t units) {
        Amount a;
        a.units_ = units;
        return a;
    }

    static Amount from_double(double value) {
        double scaled = value * static_cast<double>(kScale);
        if (!std::isfinite(scaled) || scaled > 9.2e18 || scaled < -9.2e18) {
            throw RangeError("amount out of representable range");
        }
        return from_units(std::llround(scaled));
    }

    // Strict decimal parser: optional sign, digits, optional fraction of at
    // most eight digits. Anything else is a parse error (line 0 = unknown).
    static Amount parse(std::string_view text) {
        if (text.empty()) throw ParseError(0, "empty amount");
        std::size_t pos = 0;
        bool negative = false;
        if (text[pos] == '-' || text[pos] == '+') {
            negative = text[pos] == '-';
            ++pos;
        }
        std::int64_t whole = 0;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            whole = whole * 10 + (text[pos] - '0');
            ++pos;
            ++digits;
            if (digits > 11) throw ParseError(0, "amount too large: " + std::string(text));
        }
        if (digits == 0) throw ParseError(0, "malformed amount: " + std::string(text));
        std::int64_t frac = 0;
        int frac_digits = 0;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
                if (frac_digits == kFractionDigits) {
                    throw ParseError(0, "more than 8 fractional digits: " + std::string(text));
                }
                frac = frac * 10 + (text[pos] - '0');
                ++frac_digits;
                ++pos;
            }
            if (frac_digits == 0) throw ParseError(0, "malformed amount: " + std::string(text));
        }
        if (pos != text.size()) throw ParseError(0, "malformed amount: " + std::string(text));
        for (int i = frac_digits; i < kFractionDigits; ++i) frac *= 10;
        std::int64_t units = whole * kScale + frac;
        return from_units(negative ? -units : units);
    }

    constexpr std::int64_t units() const { return units_; }

    double to_double() const { return static_cast<double>(units_) / static_cast<double>(kScale); }

    bool negative() const { return units_ < 0; }

    std::string str() const {
        std::int64_t u = units_;
        bool neg = u < 0;
        if (neg) u = -u;
        std::int64_t whole = u / kScale;
        std::int64_t frac = u % kScale;
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%s%lld.%08lld", neg ? "-" : "",
                      static_cast<long long>(whole), static_cast<long long>(frac));
        return buf;
    }

    auto operator<=>(const Amount&) const = default;

    Amount operator+(Amount other) const { return from_units(units_ + other.units_); }
    Amount operator-(Amount other) const { return from_units(units_ - other.units_); }

private:
    std::int64_t units_ = 0;
};

}  // namespace xtrace
