#pragma once

#include "basslv/interp.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace basslv::quad {

using interp::GridFunction;

enum class SchemeKind { Trapezoid, GaussHermite };

std::string to_string(SchemeKind kind);
SchemeKind scheme_from_string(const std::string& name);

/// Quadrature configuration for convolution against a Gaussian of variance t.
/// For the trapezoid rule n = 2N + 1 points; for Gauss-Hermite n is the node count.
struct QuadratureScheme {
    SchemeKind kind = SchemeKind::Trapezoid;
    int n = 101;
    int m = 2;
    std::optional<double> epsilon; // defaults to the midpoint of the admissible interval
};

/// Nodes and weights approximating the expectation under N(0, t).
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

struct TrapezoidParams {
    double h = 0.0;
    double truncation = 0.0; // Nh
};

/// Gaussian density with variance t.
double heat_kernel(double x, double t);

/// Step and truncation for the truncated trapezoid rule:
/// Nh = sqrt(2 dt / (1 - eps) * m * ln(2N + 1)), h = Nh / N.
TrapezoidParams trapezoid_params(int m, int N, double dt, double epsilon);

/// Midpoint of (max(1 - dt, 0), 1).
double default_epsilon(double dt);

/// Gauss-Hermite rule for N(0, t) via Golub-Welsch.
Rule gh_nodes(int n, double t);

/// Rule for the given scheme at variance t.
Rule make_rule(const QuadratureScheme& scheme, double t);

/// (K_t * f)(w) on each point of out_grid. The result keeps f's extrapolation kind.
GridFunction convolve(const GridFunction& f, double t, const std::vector<double>& out_grid,
                      const QuadratureScheme& scheme);

/// Same, with a prebuilt rule.
std::vector<double> convolve_values(const GridFunction& f, const Rule& rule,
                                    const std::vector<double>& out_grid);

/// Probabilists' Hermite polynomial He_n(x / sigma) / sqrt(n!), orthonormal
/// under N(0, sigma^2).
double hermite_sigma(int n, double sigma, double x);

struct StudyRow {
    SchemeKind kind;
    int n;
    double abs_error;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    double trapezoid_slope = 0.0;
    double gh_slope = 0.0;
};

/// Mean absolute error of E[(X - a)_+^3], X ~ N(0, t), over knots a spread
/// evenly in [-1.5 sqrt(t), 1.5 sqrt(t)]. The family is C^2 with a jump in
/// the third derivative. References come from a 10^6-point composite rule.
StudyResult convergence_study(const std::vector<int>& n_list, double t = 1.0, int m = 2,
                              int knots = 31);

/// Composite trapezoid of f * rho_t over [-12 sqrt(t), 12 sqrt(t)].
double reference_expectation(const std::function<double(double)>& f, double t,
                             std::size_t points = 1000001);

} // namespace basslv::quad
