#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "xtrace/errors.hpp"

namespace xtrace {

// Fixed-precision decimal rendering, used wherever byte-stable report output
// is required.
inline std::string format_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

// Shortest representation that parses back to the same double.
inline std::string format_shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw InternalError("double formatting failed");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view text, std::size_t line = 0) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(line, "malformed number: " + std::string(text));
    }
    return value;
}

inline std::int64_t parse_int(std::string_view text, std::size_t line = 0) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(line, "malformed integer: " + std::string(text));
    }
    return value;
}

// FNV-1a over a string; used for config digests in reports.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace xtrace
