#include "basslv/quad.hpp"

#include "basslv/error.hpp"
#include "basslv/math.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace basslv::quad {

std::string to_string(SchemeKind kind) {
    return kind == SchemeKind::Trapezoid ? "trap" : "gh";
}

SchemeKind scheme_from_string(const std::string& name) {
    if (name == "trap" || name == "trapezoid") return SchemeKind::Trapezoid;
    if (name == "gh" || name == "gauss_hermite") return SchemeKind::GaussHermite;
    throw Error(ErrorCode::Config, "unknown scheme '" + name + "'");
}

double heat_kernel(double x, double t) {
    if (!(t > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "heat kernel variance must be positive");
    }
    return std::exp(-0.5 * x * x / t) / std::sqrt(2.0 * std::numbers::pi * t);
}

double default_epsilon(double dt) {
    return 0.5 * (std::max(1.0 - dt, 0.0) + 1.0);
}

TrapezoidParams trapezoid_params(int m, int N, double dt, double epsilon) {
    if (N < 1 || m < 1 || !(dt > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "trapezoid_params needs N >= 1, m >= 1, dt > 0");
    }
    const double lo = std::max(1.0 - dt, 0.0);
    if (!(epsilon > lo && epsilon < 1.0)) {
        throw Error(ErrorCode::EpsilonOutOfRange,
                    "epsilon must lie in (" + std::to_string(lo) + ", 1)");
    }
    TrapezoidParams p;
    p.truncation = std::sqrt(2.0 * dt / (1.0 - epsilon) * m * std::log(2.0 * N + 1.0));
    p.h = p.truncation / N;
    return p;
}

Rule gh_nodes(int n, double t) {
    if (n < 1 || n > 200) {
        throw Error(ErrorCode::UnsupportedOrder, "Gauss-Hermite order must be in [1, 200]");
    }
    if (!(t > 0.0)) {
        throw Error(ErrorCode::InvalidVariance, "variance must be positive");
    }
    Rule rule;
    if (n == 1) {
        rule.nodes = {0.0};
        rule.weights = {1.0};
        return rule;
    }
    // Jacobi matrix of the probabilists' Hermite recurrence
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) {
        sub(k - 1) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double s = std::sqrt(t);
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.nodes[i] = s * solver.eigenvalues()(i);
        rule.weights[i] = v0 * v0;
    }
    // symmetrize to remove eigen-solver asymmetry
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
    }
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

Rule make_rule(const QuadratureScheme& scheme, double t) {
    if (!(t > 0.0)) {
        throw Error(ErrorCode::InvalidVariance, "variance must be positive");
    }
    if (scheme.n < 3 && scheme.kind == SchemeKind::Trapezoid) {
        throw Error(ErrorCode::InvalidInput, "trapezoid needs n >= 3");
    }
    if (scheme.kind == SchemeKind::GaussHermite) {
        return gh_nodes(scheme.n, t);
    }
    const int N = (scheme.n - 1) / 2;
    const double eps = scheme.epsilon.value_or(default_epsilon(t));
    const TrapezoidParams p = trapezoid_params(scheme.m, N, t, eps);
    Rule rule;
    rule.nodes.resize(2 * N + 1);
    rule.weights.resize(2 * N + 1);
    for (int k = -N; k <= N; ++k) {
        const double x = k * p.h;
        rule.nodes[k + N] = x;
        rule.weights[k + N] = heat_kernel(x, t) * p.h;
    }
    return rule;
}

std::vector<double> convolve_values(const GridFunction& f, const Rule& rule,
                                    const std::vector<double>& out_grid) {
    std::vector<double> out(out_grid.size());
    for (std::size_t j = 0; j < out_grid.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            acc += rule.weights[k] * f(out_grid[j] - rule.nodes[k]);
        }
        out[j] = acc;
    }
    return out;
}

GridFunction convolve(const GridFunction& f, double t, const std::vector<double>& out_grid,
                      const QuadratureScheme& scheme) {
    if (!(t > 0.0)) {
        throw Error(ErrorCode::InvalidVariance, "variance must be positive");
    }
    const Rule rule = make_rule(scheme, t);
    return GridFunction(out_grid, convolve_values(f, rule, out_grid), f.extrapolation());
}

double hermite_sigma(int n, double sigma, double x) {
    const double y = x / sigma;
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = y;
    for (int k = 1; k < n; ++k) {
        const double next = (y * cur - std::sqrt(static_cast<double>(k)) * prev) /
                            std::sqrt(static_cast<double>(k + 1));
        prev = cur;
        cur = next;
    }
    return cur;
}

double reference_expectation(const std::function<double(double)>& f, double t,
                             std::size_t points) {
    const double s = std::sqrt(t);
    const double lo = -12.0 * s;
    const double h = 24.0 * s / static_cast<double>(points - 1);
    // Neumaier summation: a million terms would otherwise lose the last digits
    double acc = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + h * static_cast<double>(i);
        const double w = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
        const double term = w * f(x) * heat_kernel(x, t);
        const double next = acc + term;
        comp += std::abs(acc) >= std::abs(term) ? (acc - next) + term : (term - next) + acc;
        acc = next;
    }
    return (acc + comp) * h;
}

StudyResult convergence_study(const std::vector<int>& n_list, double t, int m, int knots) {
    StudyResult res;
    const double s = std::sqrt(t);
    const auto anchors = math::linspace(-1.5 * s, 1.5 * s, static_cast<std::size_t>(knots));
    std::vector<double> refs;
    refs.reserve(anchors.size());
    for (double a : anchors) {
        refs.push_back(reference_expectation(
            [a](double x) { return x > a ? (x - a) * (x - a) * (x - a) : 0.0; }, t));
    }
    std::vector<double> log_n, log_trap, log_gh;
    for (SchemeKind kind : {SchemeKind::Trapezoid, SchemeKind::GaussHermite}) {
        for (int n : n_list) {
            QuadratureScheme scheme{kind, n, m, std::nullopt};
            const Rule rule = make_rule(scheme, t);
            double err = 0.0;
            for (std::size_t j = 0; j < anchors.size(); ++j) {
                const double a = anchors[j];
                double acc = 0.0;
                for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                    const double u = rule.nodes[k] - a;
                    if (u > 0.0) acc += rule.weights[k] * u * u * u;
                }
                err += std::abs(acc - refs[j]);
            }
            err /= static_cast<double>(anchors.size());
            res.rows.push_back({kind, n, err});
            if (kind == SchemeKind::Trapezoid) {
                log_n.push_back(std::log(static_cast<double>(n)));
                log_trap.push_back(std::log(err));
            } else {
                log_gh.push_back(std::log(err));
            }
        }
    }
    res.trapezoid_slope = math::fit_line(log_n, log_trap).slope;
    res.gh_slope = math::fit_line(log_n, log_gh).slope;
    return res;
}

} // namespace basslv::quad
