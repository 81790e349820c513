#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

namespace basslv::math {

inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Inverse of the standard normal CDF. Requires p in (0, 1).
double norm_quantile(double p);

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Adaptive Simpson quadrature on [a, b] with absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 40);

/// Root of f on [lo, hi] given a sign change. Returns nullopt when f(lo) and
/// f(hi) share a sign.
std::optional<double> find_root(const std::function<double(double)>& f, double lo, double hi,
                                int max_iter = 200);

/// Ordinary least-squares slope and R^2 of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace basslv::math
