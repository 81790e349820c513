#pragma once

#include "basslv/bass.hpp"

#include <cstdint>
#include <vector>

namespace basslv::mc {

enum class PathConstruction {
    /// One Brownian motion from time zero; S_{T_j} = f(T_j, W_{T_j}). The path
    /// jumps at interior maturities unless the fixed points are exact.
    Brownian,
    /// At each T_i the Brownian level is reset to f(T_i, .)^{-1}(S_{T_i}) so the
    /// path stays on the interval's transport map.
    Remap,
};

struct SimulationSpec {
    std::uint64_t n_paths = 1'000'000;
    std::uint64_t seed = 42;
    bool antithetic = true;
    PathConstruction construction = PathConstruction::Remap;
    int threads = 1;
};

inline constexpr std::uint64_t kBlockPaths = 65536;

/// Terminal spot per maturity: result[j][p] is path p at maturity j. With
/// antithetic sampling, paths 2k and 2k + 1 use opposite normal draws.
std::vector<std::vector<double>> simulate_terminals(const bass::BassModel& model,
                                                    const SimulationSpec& spec);

/// Brownian levels at each maturity, same layout as simulate_terminals.
std::vector<std::vector<double>> simulate_levels(const bass::BassModel& model,
                                                 const SimulationSpec& spec);

struct PriceEstimate {
    double strike = 0.0;
    double price = 0.0;
    double se = 0.0;
};

/// Sample mean of (S - K)_+ with its standard error.
std::vector<PriceEstimate> price_calls(const std::vector<double>& terminals,
                                       const std::vector<double>& strikes);

/// Streaming estimator: no terminal storage. Antithetic pairs are averaged
/// before the variance is taken. Returns one row set per maturity.
std::vector<std::vector<PriceEstimate>> price_calls_streaming(
    const bass::BassModel& model, const SimulationSpec& spec,
    const std::vector<double>& strikes);

/// Call values of the calibrated model by quadrature over the Brownian level.
std::vector<double> model_call_prices(const bass::BassModel& model, std::size_t maturity_index,
                                      const std::vector<double>& strikes,
                                      PathConstruction construction);

/// 21 strikes uniform in [0.5, 1.5] S0.
std::vector<double> default_strikes(double spot);

struct MaturityReport {
    double maturity = 0.0;
    std::vector<double> strikes;
    std::vector<double> model_prices;
    std::vector<double> model_ivs;
    std::vector<double> reference_ivs;
    std::size_t dropped = 0;
    double err_cab = 0.0;
};

struct CalibrationReport {
    std::vector<MaturityReport> maturities;
};

/// Mean absolute percentage error of model IVs against reference IVs. Prices
/// outside the invertible band, and strikes without a finite reference IV,
/// are dropped and counted.
MaturityReport calibration_error(double maturity, const std::vector<double>& strikes,
                                 const std::vector<double>& model_prices,
                                 const std::vector<double>& reference_ivs, double spot,
                                 double rate);

} // namespace basslv::mc
