#include "basslv/synth.hpp"

#include "basslv/density.hpp"
#include "basslv/error.hpp"
#include "basslv/marketdata.hpp"
#include "basslv/math.hpp"

#include <cmath>
#include <random>

namespace basslv::synth {

std::vector<density::MarginalPtr> bs_marginals(double spot, double sigma,
                                               const std::vector<double>& maturities,
                                               int smoothness) {
    std::vector<density::MarginalPtr> out;
    for (double t : maturities) {
        out.push_back(std::make_shared<density::LognormalMarginal>(spot, sigma, t, smoothness));
    }
    return out;
}

double SsviParams::phi(double th) const {
    const double lt = lambda * th;
    return (1.0 - (1.0 - std::exp(-lt)) / lt) / lt;
}

void SsviParams::validate() const {
    if (!(rho > -1.0 && rho < 1.0)) {
        throw Error(ErrorCode::InvalidInput, "rho must lie in (-1, 1)");
    }
    if (lambda < (1.0 + std::abs(rho)) / 4.0) {
        throw Error(ErrorCode::InvalidInput, "lambda below (1 + |rho|) / 4 admits arbitrage");
    }
    if (!(theta_slope > 0.0) || !(spot > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "theta slope and spot must be positive");
    }
}

SsviParams ssvi_preset() {
    SsviParams p;
    p.rho = 0.3;
    p.lambda = (1.0 + std::abs(p.rho)) / 4.0 + 1.0;
    p.theta_slope = 0.4;
    p.spot = 100.0;
    p.rate = 0.0;
    return p;
}

std::vector<double> ssvi_wide_grid() { return math::linspace(1.0, 200.0, 120); }

std::vector<double> ssvi_strike_grid() {
    std::vector<double> out;
    for (double K : ssvi_wide_grid()) {
        if (K >= 6.0 && K <= 160.0) out.push_back(K);
    }
    return out;
}

double ssvi_total_variance(const SsviParams& p, double k, double t) {
    const double th = p.theta(t);
    const double ph = p.phi(th);
    const double a = ph * k + p.rho;
    return 0.5 * th * (1.0 + p.rho * ph * k + std::sqrt(a * a + 1.0 - p.rho * p.rho));
}

double ssvi_iv(const SsviParams& p, double k, double t) {
    if (!(t > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "maturity must be positive");
    }
    return std::sqrt(ssvi_total_variance(p, k, t) / t);
}

SmileDerivatives ssvi_smile(const SsviParams& p, double K, double t) {
    const double F = p.spot * std::exp(p.rate * t);
    const double k = std::log(K / F);
    const double th = p.theta(t);
    const double ph = p.phi(th);
    const double a = ph * k + p.rho;
    const double root = std::sqrt(a * a + 1.0 - p.rho * p.rho);
    const double w = 0.5 * th * (1.0 + p.rho * ph * k + root);
    const double wk = 0.5 * th * (p.rho * ph + ph * a / root);
    const double wkk = 0.5 * th * ph * ph * (1.0 - p.rho * p.rho) / (root * root * root);
    SmileDerivatives d;
    d.sigma = std::sqrt(w / t);
    const double sk = wk / (2.0 * t * d.sigma);
    const double skk = wkk / (2.0 * t * d.sigma) - wk * wk / (4.0 * t * t * d.sigma * d.sigma * d.sigma);
    d.dsigma = sk / K;
    d.d2sigma = (skk - sk) / (K * K);
    return d;
}

double ssvi_rnd(const SsviParams& p, double K, double t) {
    if (!(K > 0.0)) return 0.0;
    const SmileDerivatives d = ssvi_smile(p, K, t);
    const double F = p.spot * std::exp(p.rate * t);
    return density::rnd_from_alpha(d.sigma, d.dsigma, 0.5 * d.d2sigma, K, F, t);
}

double ssvi_call(const SsviParams& p, double K, double t) {
    const double F = p.spot * std::exp(p.rate * t);
    const double sigma = ssvi_iv(p, std::log(K / F), t);
    return marketdata::bs_price(F, K, 0.0, t, sigma, marketdata::Side::Call);
}

std::vector<std::pair<double, double>> add_noise(std::vector<std::pair<double, double>> pts,
                                                 double magnitude, std::uint64_t seed) {
    if (magnitude < 0.0) {
        throw Error(ErrorCode::InvalidInput, "noise magnitude must be >= 0");
    }
    if (magnitude == 0.0) return pts;
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(-magnitude, magnitude);
    for (auto& pt : pts) pt.second += u(eng);
    return pts;
}

std::vector<std::pair<double, double>> ssvi_quotes(const SsviParams& p, double t,
                                                   const std::vector<double>& strikes) {
    const double F = p.spot * std::exp(p.rate * t);
    std::vector<std::pair<double, double>> out;
    for (double K : strikes) out.emplace_back(K, ssvi_iv(p, std::log(K / F), t));
    return out;
}

} // namespace basslv::synth
