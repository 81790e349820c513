#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace basslv::marketdata {

enum class Side { Call, Put };

Side side_from_string(std::string_view s);
std::string to_string(Side side);

struct OptionQuote {
    double maturity = 0.0;
    double strike = 0.0;
    Side side = Side::Call;
    std::optional<double> price;
    std::optional<double> iv;
};

struct OptionChain {
    double spot = 100.0;
    double rate = 0.0;
    std::vector<double> maturities;               // strictly increasing
    std::vector<std::vector<OptionQuote>> quotes; // one group per maturity, sorted by strike
    std::size_t dropped_below_intrinsic = 0;

    double forward(double tau) const;
};

/// Parses a delimited table with header naming maturity, strike, side and at
/// least one of price / iv. Lines starting with '#' are skipped. Quotes priced
/// at or below intrinsic + 1e-10 are dropped and counted.
OptionChain parse_chain(std::string_view text, double spot, double rate);

double bs_price(double S, double K, double r, double tau, double sigma, Side side);

/// Black-Scholes vega, dC/dsigma.
double bs_vega(double S, double K, double r, double tau, double sigma);

/// Inverts bs_price on sigma in [1e-6, 10].
double implied_vol(double price, double S, double K, double r, double tau, Side side);

/// Implied-volatility curve sampled at ascending strikes, linear in between.
struct IvCurve {
    std::vector<double> strikes;
    std::vector<double> ivs;

    double operator()(double K) const;
    bool covers(double lo, double hi) const;
};

/// Put IV below k_min, call IV above k_max, and the affine blend
/// w * put + (1 - w) * call with w = (k_max - K) / (k_max - k_min) in between.
IvCurve blend_put_call(const IvCurve& iv_call, const IvCurve& iv_put, double k_min, double k_max);

/// Rescales a price observed against forward F onto the S0 scale.
inline double normalized_price(double price, double forward, double spot) {
    return price / forward * spot;
}

/// Moves a chain to zero-rate coordinates: K -> K * S0 / F(tau), forward
/// prices rescaled by S0 / F(tau). Implied volatilities are unchanged.
OptionChain normalize_chain(const OptionChain& chain);

/// Strike and implied vol pairs for one maturity group. Price-only quotes are
/// inverted; when both sides exist at a strike the out-of-the-money side wins.
std::vector<std::pair<double, double>> iv_points(const OptionChain& chain, std::size_t index);

} // namespace basslv::marketdata
