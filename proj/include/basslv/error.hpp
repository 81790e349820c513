#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace basslv {

enum class ErrorCode {
    // marketdata
    InvalidInput,
    MalformedRow,
    DuplicateQuote,
    NoQuotes,
    NegativeValue,
    PriceOutOfBand,
    NoConvergence,
    DomainMismatch,
    // density
    TooFewQuotes,
    SingularDesign,
    OutOfRange,
    NoRoot,
    InvalidMixture,
    PastingMismatch,
    NonMonotone,
    TooFewStrikes,
    // quad
    EpsilonOutOfRange,
    InvalidVariance,
    UnsupportedOrder,
    // bass
    QuantileOverflow,
    MaxIterExceeded,
    TimeOutOfInterval,
    CalendarArbitrage,
    // mc
    AllPricesOutOfBand,
    // cli / io
    Io,
    Config,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace basslv
