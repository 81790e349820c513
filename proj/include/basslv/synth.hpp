#pragma once

#include "basslv/marginal.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace basslv::synth {

/// Lognormal marginals with log-variance sigma^2 T_i and mean S0.
std::vector<density::MarginalPtr> bs_marginals(double spot, double sigma,
                                               const std::vector<double>& maturities,
                                               int smoothness = 2);

/// Heston-like SSVI: phi(theta) = (1 - (1 - e^{-l theta}) / (l theta)) / (l theta),
/// theta_t = theta_slope * t.
struct SsviParams {
    double rho = 0.3;
    double lambda = 1.325;
    double theta_slope = 0.4;
    double spot = 100.0;
    double rate = 0.0;

    double theta(double t) const { return theta_slope * t; }
    double phi(double theta) const;
    void validate() const;
};

/// Preset: rho = 0.3, lambda = (1 + |rho|) / 4 + 1, theta_t = 0.4 t, S0 = 100, r = 0.
SsviParams ssvi_preset();

/// Preset strikes: 120 equally spaced in [1, 200], keeping those in [6, 160]
/// (93 strikes, 6.0168 to 159.8655).
std::vector<double> ssvi_strike_grid();

/// The full 120-strike grid before trimming.
std::vector<double> ssvi_wide_grid();

/// Total implied variance w(k, theta_t).
double ssvi_total_variance(const SsviParams& p, double k, double t);

double ssvi_iv(const SsviParams& p, double k, double t);

/// sigma and its first two strike derivatives at strike K.
struct SmileDerivatives {
    double sigma = 0.0;
    double dsigma = 0.0;
    double d2sigma = 0.0;
};
SmileDerivatives ssvi_smile(const SsviParams& p, double K, double t);

/// Density from the analytic smile and its strike derivatives.
double ssvi_rnd(const SsviParams& p, double K, double t);

/// Undiscounted call value from the SSVI smile.
double ssvi_call(const SsviParams& p, double K, double t);

/// Adds i.i.d. uniform noise on [-magnitude, magnitude] to the volatilities.
std::vector<std::pair<double, double>> add_noise(std::vector<std::pair<double, double>> iv_points,
                                                 double magnitude, std::uint64_t seed);

/// Noise-free SSVI quotes at the given strikes.
std::vector<std::pair<double, double>> ssvi_quotes(const SsviParams& p, double t,
                                                   const std::vector<double>& strikes);

} // namespace basslv::synth
