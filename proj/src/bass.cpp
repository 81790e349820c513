#include "basslv/bass.hpp"

#include "basslv/density.hpp"
#include "basslv/error.hpp"
#include "basslv/math.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace basslv::bass {

std::vector<double> w_grid(double t, const SolverOptions& options) {
    const double half = options.grid_width * std::sqrt(t);
    return math::linspace(-half, half, static_cast<std::size_t>(options.grid_points));
}

Convolver::Convolver(const std::vector<double>& grid, double t, const QuadratureScheme& scheme,
                     bool snap_to_grid)
    : grid_(grid) {
    step_ = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    if (scheme.kind == quad::SchemeKind::Trapezoid && snap_to_grid) {
        // keep the point count, move h onto the nearest multiple of the grid step
        const quad::Rule base = quad::make_rule(scheme, t);
        const int N = (scheme.n - 1) / 2;
        const double h = N > 0 ? base.nodes[static_cast<std::size_t>(N + 1)] : step_;
        const long mult = std::max(1L, std::lround(h / step_));
        const double hs = static_cast<double>(mult) * step_;
        for (int k = -N; k <= N; ++k) {
            rule_.nodes.push_back(k * hs);
            rule_.weights.push_back(quad::heat_kernel(k * hs, t) * hs);
            offsets_.push_back(k * mult);
        }
        aligned_ = true;
    } else {
        rule_ = quad::make_rule(scheme, t);
    }
}

std::vector<double> Convolver::apply(const GridFunction& f) const {
    if (!aligned_) {
        return quad::convolve_values(f, rule_, grid_);
    }
    const auto& v = f.values();
    const long n = static_cast<long>(v.size());
    const bool linear = f.extrapolation() == interp::Extrapolation::Linear;
    const double d_lo = linear ? f.slopes().front() : 0.0;
    const double d_hi = linear ? f.slopes().back() : 0.0;
    std::vector<double> out(grid_.size(), 0.0);
    const std::size_t K = offsets_.size();
    for (long j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const long idx = j - offsets_[k];
            double val;
            if (idx < 0) {
                val = v.front() + d_lo * static_cast<double>(idx) * step_;
            } else if (idx >= n) {
                val = v.back() + d_hi * static_cast<double>(idx - (n - 1)) * step_;
            } else {
                val = v[static_cast<std::size_t>(idx)];
            }
            acc += rule_.weights[k] * val;
        }
        out[static_cast<std::size_t>(j)] = acc;
    }
    return out;
}

namespace {

struct Step {
    GridFunction F;
    GridFunction inner;
    GridFunction terminal;
    GridFunction start;
};

GridFunction recenter(const GridFunction& F) {
    const auto& x = F.grid();
    const auto& y = F.values();
    double integral = 0.0;
    for (std::size_t j = 1; j < x.size(); ++j) {
        integral += 0.5 * (y[j] + y[j - 1]) * (x[j] - x[j - 1]);
    }
    const double mean = x.back() * y.back() - x.front() * y.front() - integral;
    std::vector<double> shifted(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        shifted[j] = F(x[j] + mean);
    }
    return GridFunction(x, std::move(shifted), interp::Extrapolation::Constant);
}

Step apply_once(const GridFunction& F, const MarginalDistribution& mu_i,
                const MarginalDistribution& mu_next, const Convolver& conv,
                const SolverOptions& options) {
    const auto& grid = F.grid();
    auto inner = conv.apply(F);
    std::vector<double> terminal(inner.size());
    for (std::size_t j = 0; j < inner.size(); ++j) {
        if (!std::isfinite(inner[j])) {
            throw Error(ErrorCode::QuantileOverflow, "inner convolution is not finite");
        }
        inner[j] = std::clamp(inner[j], options.clamp, 1.0 - options.clamp);
        terminal[j] = mu_next.quantile(inner[j]);
        if (!std::isfinite(terminal[j])) {
            throw Error(ErrorCode::QuantileOverflow, "quantile overflow; widen the w-grid");
        }
    }
    Step s;
    s.inner = GridFunction(grid, inner, interp::Extrapolation::Constant);
    s.terminal = GridFunction(grid, terminal, interp::Extrapolation::Linear);
    auto start = conv.apply(s.terminal);
    std::vector<double> next(start.size());
    for (std::size_t j = 0; j < start.size(); ++j) {
        next[j] = std::clamp(mu_i.cdf(start[j]), 0.0, 1.0);
    }
    // guard monotonicity against rounding in flat regions
    for (std::size_t j = 1; j < next.size(); ++j) {
        next[j] = std::max(next[j], next[j - 1]);
    }
    s.start = GridFunction(grid, std::move(start), interp::Extrapolation::Linear);
    s.F = GridFunction(grid, std::move(next), interp::Extrapolation::Constant);
    return s;
}

QuadratureScheme interval_scheme(const QuadratureScheme& scheme, const MarginalDistribution& a,
                                 const MarginalDistribution& b) {
    QuadratureScheme s = scheme;
    s.m = std::min(a.smoothness(), b.smoothness());
    return s;
}

} // namespace

GridFunction apply_A(const GridFunction& F, const MarginalDistribution& mu_i,
                     const MarginalDistribution& mu_next, double dt,
                     const QuadratureScheme& scheme, const SolverOptions& options) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "interval length must be positive");
    }
    const Convolver conv(F.grid(), dt, scheme, options.snap_trapezoid);
    return apply_once(F, mu_i, mu_next, conv, options).F;
}

BassInterval solve_fixed_point(const MarginalDistribution& mu_i,
                               const MarginalDistribution& mu_next, double t_start, double t_end,
                               double tol, int max_iter, const QuadratureScheme& scheme_in,
                               const SolverOptions& options) {
    if (!(tol > 0.0) || max_iter < 1) {
        throw Error(ErrorCode::InvalidInput, "need tol > 0 and max_iter >= 1");
    }
    if (!(t_start > 0.0) || !(t_end > t_start)) {
        throw Error(ErrorCode::InvalidInput, "need 0 < t_start < t_end");
    }
    const QuadratureScheme scheme = interval_scheme(scheme_in, mu_i, mu_next);
    const double dt = t_end - t_start;
    const auto grid = w_grid(t_end, options);
    const Convolver conv(grid, dt, scheme, options.snap_trapezoid);

    const double s0 = std::sqrt(options.initial_guess == InitialGuess::NextMaturity ? t_end : t_start);
    std::vector<double> init(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) init[j] = math::norm_cdf(grid[j] / s0);
    GridFunction F(grid, std::move(init), interp::Extrapolation::Constant);

    BassInterval out;
    out.t_start = t_start;
    out.t_end = t_end;
    out.scheme = scheme;
    for (int it = 1; it <= max_iter; ++it) {
        Step s = apply_once(F, mu_i, mu_next, conv, options);
        if (options.recenter) s.F = recenter(s.F);
        double err = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            err = std::max(err, std::abs(s.F.values()[j] - F.values()[j]));
        }
        out.error_history.push_back(err);
        F = std::move(s.F);
        if (err <= tol) {
            out.iterations = it;
            out.F_W = F;
            // maps built from the accepted iterate
            Step fin = apply_once(F, mu_i, mu_next, conv, options);
            out.inner = std::move(fin.inner);
            out.terminal_map = std::move(fin.terminal);
            out.start_map = std::move(fin.start);
            return out;
        }
    }
    std::ostringstream msg;
    msg << "no convergence after " << max_iter << " iterations; last errors:";
    const std::size_t h = out.error_history.size();
    for (std::size_t k = h > 5 ? h - 5 : 0; k < h; ++k) msg << ' ' << out.error_history[k];
    throw Error(ErrorCode::MaxIterExceeded, msg.str());
}

double transport_map(const BassInterval& interval, const MarginalDistribution& mu_next, double t,
                     double w, const SolverOptions& options) {
    const double eps = 1e-12 * std::max(1.0, interval.t_end);
    if (t < interval.t_start - eps || t > interval.t_end + eps) {
        throw Error(ErrorCode::TimeOutOfInterval, "time outside the interval");
    }
    const double var = interval.t_end - t;
    if (var <= eps) {
        return mu_next.quantile(std::clamp(interval.inner(w), options.clamp, 1.0 - options.clamp));
    }
    const quad::Rule rule = quad::make_rule(interval.scheme, var);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        acc += rule.weights[k] * interval.terminal_map(w - rule.nodes[k]);
    }
    return acc;
}

BassModel calibrate(const std::vector<MarginalPtr>& marginals,
                    const std::vector<double>& maturities, const QuadratureScheme& scheme,
                    double tol, int max_iter, const SolverOptions& options) {
    if (marginals.empty() || marginals.size() != maturities.size()) {
        throw Error(ErrorCode::InvalidInput, "need one marginal per maturity");
    }
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        if (!(maturities[i] > 0.0) || (i > 0 && !(maturities[i] > maturities[i - 1]))) {
            throw Error(ErrorCode::InvalidInput, "maturities must be positive and increasing");
        }
    }
    // calendar admission on a quantile strike grid of the later law
    for (std::size_t i = 0; i + 1 < marginals.size(); ++i) {
        std::vector<double> strikes;
        for (double p : math::linspace(1e-3, 1.0 - 1e-3, 199)) {
            strikes.push_back(marginals[i + 1]->quantile(p));
        }
        const auto bad = density::calendar_check(*marginals[i], *marginals[i + 1], 0.0,
                                                 maturities[i + 1] - maturities[i], strikes);
        if (!bad.empty()) {
            std::ostringstream msg;
            msg << "marginals " << i << " and " << i + 1 << " violate convex order at K="
                << bad.front().strike << " (" << bad.front().value << ")";
            throw Error(ErrorCode::CalendarArbitrage, msg.str());
        }
    }
    BassModel model;
    model.maturities = maturities;
    model.marginals = marginals;
    model.scheme = scheme;
    {
        const auto grid = w_grid(maturities.front(), options);
        const double s = std::sqrt(maturities.front());
        std::vector<double> v(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double p = std::clamp(math::norm_cdf(grid[j] / s), options.clamp, 1.0 - options.clamp);
            v[j] = marginals.front()->quantile(p);
        }
        model.first_map = GridFunction(grid, std::move(v), interp::Extrapolation::Linear);
    }
    for (std::size_t i = 0; i + 1 < marginals.size(); ++i) {
        try {
            model.intervals.push_back(solve_fixed_point(*marginals[i], *marginals[i + 1],
                                                        maturities[i], maturities[i + 1], tol,
                                                        max_iter, scheme, options));
        } catch (const Error& e) {
            throw Error(e.code(), "interval " + std::to_string(i) + ": " + e.what());
        }
    }
    return model;
}

} // namespace basslv::bass
