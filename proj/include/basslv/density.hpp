#pragma once

#include "basslv/interp.hpp"
#include "basslv/marginal.hpp"

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace basslv::density {

using interp::GridFunction;

/// (strike, implied vol) observation.
using IvQuote = std::pair<double, double>;

// ---------------------------------------------------------------------------
// Local quadratic regression of the smile

struct LqrPoint {
    double strike = 0.0;
    double alpha0 = 0.0; // sigma
    double alpha1 = 0.0; // dsigma/dK
    double alpha2 = 0.0; // half of d2sigma/dK2
    double bandwidth = 0.0;
    int window = 0; // observations with positive kernel weight
    bool constrained = false;
};

struct LqrFit {
    std::vector<IvQuote> quotes;
    std::vector<LqrPoint> points; // one per eval strike
    int window_count = 8;
    double forward = 0.0;
    double tau = 0.0;

    std::vector<double> strike_grid() const;
};

/// Epanechnikov-weighted quadratic fit of the smile at each eval strike, with
/// the bandwidth set between the k-th and (k+1)-th nearest observed strikes.
/// When the implied density at the eval strike would be negative the fit is
/// redone on the boundary of the non-negativity constraint.
LqrFit lqr_fit(std::vector<IvQuote> quotes, const std::vector<double>& eval_grid,
               int window_count, double forward, double tau);

/// Single local fit at strike K.
LqrPoint lqr_local(const std::vector<IvQuote>& quotes, double K, int window_count,
                   double forward, double tau);

/// Bracket multiplying F sqrt(tau) phi(d1) in the density formula.
double density_bracket(double alpha0, double alpha1, double alpha2, double K, double forward,
                       double tau);

/// Density implied by a local smile expansion at K.
double rnd_from_alpha(double alpha0, double alpha1, double alpha2, double K, double forward,
                      double tau);

/// Density at K from a fresh local fit.
double rnd_from_iv(const LqrFit& fit, double K, double forward, double tau);

// ---------------------------------------------------------------------------
// Lognormal-mixture tails

enum class TailSide { Left, Right };

/// lambda * LN(eta1, v1^2) + (1 - lambda) * LN(eta2, v2^2), both components
/// sharing the standardized boundary z at the pasting strike.
struct TailParams {
    TailSide side = TailSide::Left;
    double K = 0.0;
    double z = 0.0;
    double lambda = 1.0;
    double v1 = 0.0;
    double v2 = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;

    double mu1() const;
    double mu2() const;
    double pdf(double x) const;
    double dpdf(double x) const;
    /// P(X <= x) under the mixture.
    double cdf(double x) const;
    /// E[X; X <= x] under the mixture.
    double partial_mean(double x) const;
};

/// Values the tail must reproduce at its pasting strike.
struct TailTargets {
    double K = 0.0;
    double q = 0.0;           // density
    double dq = 0.0;          // density slope
    double survival = 0.0;    // P(X > K)
    double expectation = 0.0; // E[X; X < K] on the left, E[X; X > K] on the right
};

struct TailConstraints {
    bool bimodal = false; // v1 >= 1, v2 in (0, 1), lambda > 0.5
    bool require_exact = false;
};

struct TailSolution {
    TailParams params;
    std::vector<TailParams> alternatives; // other admissible roots found by the scan
    bool exact = true; // false: least-squares fallback
};

/// Solves the four pasting relations for one tail by scanning v2 over a
/// log-spaced bracket in (1e-3, 10) and refining sign changes of the
/// expectation residual. Among admissible roots the one minimizing |v1 - v2|
/// is returned. Noisy pasting data can leave the system with no admissible
/// root; then the density is matched exactly and survival, expectation and
/// slope in relative least squares (exact = false), unless
/// TailConstraints::require_exact is set.
TailSolution fit_tail(const TailTargets& targets, TailSide side,
                      const TailConstraints& constraints = {});

/// Residuals of the four pasting relations at params.
struct TailResiduals {
    double survival = 0.0;
    double density = 0.0;
    double slope = 0.0;
    double expectation = 0.0;
    double max_abs() const;
};
TailResiduals tail_residuals(const TailParams& params, const TailTargets& targets);

/// Smile data at a pasting strike.
struct PastingData {
    double K = 0.0;
    double q = 0.0;
    double dq = 0.0;
    double sigma = 0.0;
    double dsigma = 0.0;
};

/// Survival and partial expectation implied by the smile level and slope.
TailTargets smile_targets(const PastingData& p, TailSide side, double forward, double tau);

struct TailOptions {
    TailConstraints left;
    TailConstraints right;
};

struct TailFit {
    TailParams left;
    TailParams right;
    TailTargets left_targets;
    TailTargets right_targets;
    double mass_defect = 0.0; // 1 - (smile tail masses + core mass)
    double mean_defect = 0.0;
    std::vector<TailParams> left_alternatives;
    std::vector<TailParams> right_alternatives;
    bool left_exact = true;
    bool right_exact = true;
};

TailFit fit_tails(const PastingData& left, const PastingData& right, double core_mass,
                  double core_mean, double forward, double tau, const TailOptions& options = {});

// ---------------------------------------------------------------------------
// Assembled density

struct RiskNeutralDensity {
    double K_L = 0.0;
    double K_U = 0.0;
    double tau = 0.0;
    double forward = 0.0;
    GridFunction core;
    TailParams left;
    TailParams right;
    double scale = 1.0; // overall multiplier, 1 for assembled densities

    double pdf(double x) const;
    double cdf(double x) const;
    /// E[(X - K)_+].
    double call(double K) const;
    double mass() const;
    double mean() const;
    /// Mass and first moment of the core restricted to [a, b].
    std::pair<double, double> core_moments(double a, double b) const;
    /// Mass and first moment above K.
    std::pair<double, double> upper_moments(double K) const;
};

/// Core interpolant of the LQR density on the fit's strike grid. End slopes
/// come from one-sided differences of the local-fit density.
GridFunction core_from_fit(const LqrFit& fit);

/// Core whose moments on its own range equal target_mass and target_mean,
/// obtained as core * (1 + a s^2 + b s^2 u) with s the scaled distance to both
/// ends and u the centered position.
GridFunction close_core_moments(const GridFunction& core, double target_mass, double target_mean);

RiskNeutralDensity assemble(const GridFunction& core, const TailFit& tails, double forward,
                            double tau);

struct DensityOptions {
    int window_count = 8;
    int core_points = 401;
    bool shrink_domain = false; // move K_L past the leftmost interior minimum of the core
    /// Close the mass and mean defects left by the core with a smooth
    /// multiplicative bump that vanishes, with its slope, at K_L and K_U.
    bool enforce_moments = true;
    TailOptions tails;
};

struct DensityBuild {
    LqrFit fit;
    TailFit tails;
    RiskNeutralDensity density;
};

/// LQR core, tails and assembly from implied-vol quotes of one maturity.
DensityBuild build_density(const std::vector<IvQuote>& quotes, double forward, double tau,
                           const DensityOptions& options = {});

struct DensityReport {
    double min_density = 0.0;
    double mass = 0.0;
    double mean = 0.0;
    double forward = 0.0;
    double max_repricing_error = 0.0;
    bool nonnegative = true;
    bool mass_ok = true;
    bool mean_ok = true;
};

/// call_quotes are (strike, undiscounted call value) pairs.
DensityReport density_report(const RiskNeutralDensity& q,
                             const std::vector<std::pair<double, double>>& call_quotes);

struct CalendarViolation {
    double strike = 0.0;
    double value = 0.0;
};

/// Integral of (x - K)_+ (e^{r dT} q_late(x) - q_early(x e^{-r dT})) for each
/// strike, reporting values below -1e-6. Call functions are undiscounted.
std::vector<CalendarViolation> calendar_check(const std::function<double(double)>& call_early,
                                              const std::function<double(double)>& call_late,
                                              double r, double dT,
                                              const std::vector<double>& K_grid);

std::vector<CalendarViolation> calendar_check(const MarginalDistribution& early,
                                              const MarginalDistribution& late, double r,
                                              double dT, const std::vector<double>& K_grid);

/// Breeden-Litzenberger baseline: natural cubic spline through the call
/// prices and central second differences with the input strike spacing.
std::vector<double> bl_density(const std::vector<std::pair<double, double>>& call_prices, double r,
                               double tau, const std::vector<double>& eval_grid);

// ---------------------------------------------------------------------------
// Marginal built from an assembled density

struct GridSpec {
    int points = 2001;
    double tail_probability = 1e-13;
    int smoothness = 2;
};

class SplineMarginal final : public MarginalDistribution {
public:
    SplineMarginal(std::shared_ptr<const RiskNeutralDensity> q, GridFunction cdf, int smoothness);

    double cdf(double x) const override;
    double quantile(double p) const override;
    double pdf(double x) const override;
    double call(double K) const override;
    double mean() const override;
    int smoothness() const override { return m_; }

    const GridFunction& cdf_grid() const { return cdf_; }
    const RiskNeutralDensity& density() const { return *q_; }

private:
    std::shared_ptr<const RiskNeutralDensity> q_;
    GridFunction cdf_;
    int m_;
};

/// CDF by adaptive Simpson on a log-spaced grid spanning the tail quantiles,
/// then a monotone cubic interpolant.
std::shared_ptr<const SplineMarginal> to_marginal(const RiskNeutralDensity& q,
                                                  const GridSpec& spec = {});

} // namespace basslv::density
