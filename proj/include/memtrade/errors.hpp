#pragma once

#include <stdexcept>
#include <string>

namespace memtrade {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input could not be read at all (bad CSV row, bad JSON line, bad date string).
class ParseError : public Error {
public:
    using Error::Error;
};

// Input was readable but violates a domain invariant (OHLC ordering, closed enums,
// duplicate ids).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bad configuration: inverted date ranges, unknown config keys, missing files.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A lookup by key (date, memory id) found nothing.
class LookupError : public Error {
public:
    using Error::Error;
};

// Not enough history for a windowed computation.
class WindowError : public Error {
public:
    using Error::Error;
};

// A "now" earlier than an event timestamp, or similar time-ordering violation.
class TemporalError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

// Model output that cannot be turned into a structured decision.
class FormatError : public Error {
public:
    using Error::Error;
};

// A metric that has no defined value for the given inputs (e.g. Sharpe with zero
// variance). Callers that assemble reports represent it as not-a-value.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

// Report and environment disagree (e.g. mismatched date ranges in `compare`).
class ComparisonError : public Error {
public:
    using Error::Error;
};

// An internal consistency check failed (e.g. the no-leakage assertion).
class InternalError : public Error {
public:
    using Error::Error;
};

// Remote provider failure (embedding endpoint or chat completion endpoint).
class ProviderError : public Error {
public:
    ProviderError(const std::string& msg, int status = 0, std::string body = {})
        : Error(msg), status_(status), body_(std::move(body)) {}

    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_ = 0;
    std::string body_;
};

} // namespace memtrade
