#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xtrace {

enum class Errc {
    not_found,
    invalid_chain,
    invalid_range,
    price_out_of_range,
    config,
    parse,
    protocol_violation,
    internal,
};

inline const char* errc_name(Errc code) {
    switch (code) {
        case Errc::not_found: return "not_found";
        case Errc::invalid_chain: return "invalid_chain";
        case Errc::invalid_range: return "invalid_range";
        case Errc::price_out_of_range: return "price_out_of_range";
        case Errc::config: return "config";
        case Errc::parse: return "parse";
        case Errc::protocol_violation: return "protocol_violation";
        case Errc::internal: return "internal";
    }
    return "unknown";
}

/// Base for every error raised by the library; carries a stable code so the
/// CLI can emit machine-parsable error records.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

struct NotFoundError : Error {
    explicit NotFoundError(const std::string& message) : Error(Errc::not_found, message) {}
};

struct InvalidChainError : Error {
    explicit InvalidChainError(const std::string& message) : Error(Errc::invalid_chain, message) {}
};

struct RangeError : Error {
    explicit RangeError(const std::string& message) : Error(Errc::invalid_range, message) {}
};

// A time point outside the coverage of a price series.
struct PriceOutOfRangeError : Error {
    explicit PriceOutOfRangeError(const std::string& message)
        : Error(Errc::price_out_of_range, message) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& message) : Error(Errc::config, message) {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(Errc::parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct ProtocolViolationError : Error {
    explicit ProtocolViolationError(const std::string& message)
        : Error(Errc::protocol_violation, message) {}
};

struct InternalError : Error {
    explicit InternalError(const std::string& message) : Error(Errc::internal, message) {}
};

}  // namespace xtrace
