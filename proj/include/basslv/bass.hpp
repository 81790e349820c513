#pragma once

#include "basslv/interp.hpp"
#include "basslv/marginal.hpp"
#include "basslv/quad.hpp"

#include <vector>

namespace basslv::bass {

using density::MarginalDistribution;
using density::MarginalPtr;
using interp::GridFunction;
using quad::QuadratureScheme;

enum class InitialGuess {
    NextMaturity,  // Phi(w / sqrt(T_{i+1}))
    StartMaturity, // Phi(w / sqrt(T_i))
};

struct SolverOptions {
    int grid_points = 801;
    double grid_width = 8.0; // grid spans +-width * sqrt(T_{i+1})
    double clamp = 1e-12;    // inner convolution clamped to [clamp, 1 - clamp]
    bool recenter = true;    // remove the translation mode by fixing the mean of W at zero
    bool snap_trapezoid = true; // align trapezoid nodes with the uniform w-grid
    InitialGuess initial_guess = InitialGuess::NextMaturity;
};

/// Fixed point of one maturity interval with the maps that drive the spot.
struct BassInterval {
    double t_start = 0.0;
    double t_end = 0.0;
    GridFunction F_W;           // CDF of W at t_start
    GridFunction inner;         // K_dt * F_W
    GridFunction terminal_map;  // f(t_end, w) = Q_next(inner(w))
    GridFunction start_map;     // f(t_start, w) = K_dt * terminal_map
    int iterations = 0;
    std::vector<double> error_history;
    QuadratureScheme scheme;
};

struct BassModel {
    std::vector<double> maturities;
    std::vector<MarginalPtr> marginals;
    GridFunction first_map; // f(T_1, w) = Q_1(Phi(w / sqrt(T_1)))
    std::vector<BassInterval> intervals;
    QuadratureScheme scheme;
};

/// Uniform grid on [-width sqrt(t), width sqrt(t)].
std::vector<double> w_grid(double t, const SolverOptions& options = {});

/// Precomputed convolution against K_t on a fixed grid. Trapezoid rules whose
/// nodes fall on the grid reduce to shifted sums of node values.
class Convolver {
public:
    Convolver(const std::vector<double>& grid, double t, const QuadratureScheme& scheme,
              bool snap_to_grid);

    std::vector<double> apply(const GridFunction& f) const;
    const quad::Rule& rule() const { return rule_; }

private:
    std::vector<double> grid_;
    quad::Rule rule_;
    std::vector<long> offsets_; // node / grid step when aligned
    bool aligned_ = false;
    double step_ = 0.0;
};

/// One application of F -> F_i o (K * (Q_{i+1} o (K * F))).
GridFunction apply_A(const GridFunction& F, const MarginalDistribution& mu_i,
                     const MarginalDistribution& mu_next, double dt,
                     const QuadratureScheme& scheme, const SolverOptions& options = {});

/// Iterates apply_A from the initial guess until the sup-norm step is <= tol.
BassInterval solve_fixed_point(const MarginalDistribution& mu_i,
                               const MarginalDistribution& mu_next, double t_start, double t_end,
                               double tol, int max_iter, const QuadratureScheme& scheme,
                               const SolverOptions& options = {});

/// f(t, w) for t in [t_start, t_end].
double transport_map(const BassInterval& interval, const MarginalDistribution& mu_next, double t,
                     double w, const SolverOptions& options = {});

/// Calendar admission then one fixed point per consecutive maturity pair.
BassModel calibrate(const std::vector<MarginalPtr>& marginals,
                    const std::vector<double>& maturities, const QuadratureScheme& scheme,
                    double tol, int max_iter, const SolverOptions& options = {});

} // namespace basslv::bass
