#include "basslv/mc.hpp"

#include "basslv/error.hpp"
#include "basslv/marketdata.hpp"
#include "basslv/math.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace basslv::mc {

namespace {

using bass::BassModel;

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block & 0xffffffffu),
                      static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

// Spot and Brownian level at each maturity for one draw vector.
void run_path(const BassModel& model, PathConstruction construction, const double* z,
              double sign, double* spot, double* level) {
    const auto& T = model.maturities;
    double w = std::sqrt(T[0]) * sign * z[0];
    double s = model.first_map(w);
    spot[0] = s;
    level[0] = w;
    for (std::size_t i = 0; i < model.intervals.size(); ++i) {
        const auto& iv = model.intervals[i];
        if (construction == PathConstruction::Remap) {
            w = iv.start_map.inverse(s);
        }
        w += std::sqrt(T[i + 1] - T[i]) * sign * z[i + 1];
        s = iv.terminal_map(w);
        spot[i + 1] = s;
        level[i + 1] = w;
    }
}

std::uint64_t effective_paths(const SimulationSpec& spec) {
    if (spec.n_paths < 1) {
        throw Error(ErrorCode::InvalidInput, "n_paths must be >= 1");
    }
    return spec.antithetic ? spec.n_paths + (spec.n_paths & 1u) : spec.n_paths;
}

template <typename BlockFn>
void for_blocks(std::uint64_t n_blocks, int threads, BlockFn&& fn) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n_blocks)));
    if (workers == 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::uint64_t b = static_cast<std::uint64_t>(t); b < n_blocks;
                 b += static_cast<std::uint64_t>(workers)) {
                fn(b);
            }
        });
    }
    for (auto& th : pool) th.join();
}

// Fills spot and level rows for paths [begin, end) of one block.
template <typename Sink>
void simulate_block(const BassModel& model, const SimulationSpec& spec, std::uint64_t block,
                    std::uint64_t begin, std::uint64_t end, Sink&& sink) {
    const std::size_t m = model.maturities.size();
    auto eng = block_engine(spec.seed, block);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(m), s1(m), w1(m), s2(m), w2(m);
    std::uint64_t p = begin;
    while (p < end) {
        for (auto& v : z) v = normal(eng);
        run_path(model, spec.construction, z.data(), 1.0, s1.data(), w1.data());
        if (spec.antithetic) {
            run_path(model, spec.construction, z.data(), -1.0, s2.data(), w2.data());
            sink(p, s1, w1, &s2, &w2);
            p += 2;
        } else {
            sink(p, s1, w1, nullptr, nullptr);
            p += 1;
        }
    }
}

std::vector<std::vector<double>> simulate_rows(const BassModel& model, const SimulationSpec& spec,
                                               bool want_levels) {
    const std::uint64_t n = effective_paths(spec);
    const std::size_t m = model.maturities.size();
    std::vector<std::vector<double>> rows(m, std::vector<double>(n));
    const std::uint64_t n_blocks = (n + kBlockPaths - 1) / kBlockPaths;
    for_blocks(n_blocks, spec.threads, [&](std::uint64_t b) {
        const std::uint64_t begin = b * kBlockPaths;
        const std::uint64_t end = std::min(n, begin + kBlockPaths);
        simulate_block(model, spec, b, begin, end,
                       [&](std::uint64_t p, const std::vector<double>& s, const std::vector<double>& w,
                           const std::vector<double>* s2, const std::vector<double>* w2) {
                           for (std::size_t j = 0; j < m; ++j) {
                               rows[j][p] = want_levels ? w[j] : s[j];
                               if (s2) rows[j][p + 1] = want_levels ? (*w2)[j] : (*s2)[j];
                           }
                       });
    });
    return rows;
}

} // namespace

std::vector<std::vector<double>> simulate_terminals(const BassModel& model,
                                                    const SimulationSpec& spec) {
    return simulate_rows(model, spec, false);
}

std::vector<std::vector<double>> simulate_levels(const BassModel& model,
                                                 const SimulationSpec& spec) {
    return simulate_rows(model, spec, true);
}

std::vector<PriceEstimate> price_calls(const std::vector<double>& terminals,
                                       const std::vector<double>& strikes) {
    std::vector<PriceEstimate> out;
    const double n = static_cast<double>(terminals.size());
    for (double K : strikes) {
        double sum = 0.0, sq = 0.0;
        for (double s : terminals) {
            const double v = std::max(s - K, 0.0);
            sum += v;
            sq += v * v;
        }
        const double mean = sum / n;
        const double var = n > 1 ? std::max(sq / n - mean * mean, 0.0) * n / (n - 1) : 0.0;
        out.push_back({K, mean, std::sqrt(var / n)});
    }
    return out;
}

std::vector<std::vector<PriceEstimate>> price_calls_streaming(const BassModel& model,
                                                              const SimulationSpec& spec,
                                                              const std::vector<double>& strikes) {
    const std::uint64_t n = effective_paths(spec);
    const std::size_t m = model.maturities.size();
    const std::size_t k = strikes.size();
    const std::uint64_t n_blocks = (n + kBlockPaths - 1) / kBlockPaths;
    // per block: sums then sums of squares, maturity-major
    std::vector<std::vector<double>> partial(n_blocks, std::vector<double>(2 * m * k, 0.0));
    for_blocks(n_blocks, spec.threads, [&](std::uint64_t b) {
        auto& acc = partial[b];
        const std::uint64_t begin = b * kBlockPaths;
        const std::uint64_t end = std::min(n, begin + kBlockPaths);
        simulate_block(model, spec, b, begin, end,
                       [&](std::uint64_t, const std::vector<double>& s, const std::vector<double>&,
                           const std::vector<double>* s2, const std::vector<double>*) {
                           for (std::size_t j = 0; j < m; ++j) {
                               for (std::size_t c = 0; c < k; ++c) {
                                   double v = std::max(s[j] - strikes[c], 0.0);
                                   if (s2) v = 0.5 * (v + std::max((*s2)[j] - strikes[c], 0.0));
                                   acc[j * k + c] += v;
                                   acc[m * k + j * k + c] += v * v;
                               }
                           }
                       });
    });
    std::vector<double> total(2 * m * k, 0.0);
    for (const auto& part : partial) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];
    }
    const double samples = static_cast<double>(spec.antithetic ? n / 2 : n);
    std::vector<std::vector<PriceEstimate>> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t c = 0; c < k; ++c) {
            const double mean = total[j * k + c] / samples;
            const double second = total[m * k + j * k + c] / samples;
            const double var = samples > 1 ? std::max(second - mean * mean, 0.0) * samples / (samples - 1) : 0.0;
            out[j].push_back({strikes[c], mean, std::sqrt(var / samples)});
        }
    }
    return out;
}

namespace {

// E[(m(W) - K)_+] = (m(a) - K)_+ P(W > a) + int_a^inf m'(w) P(W > w) dw, a = max(m^-1(K), lo)
double call_from_level_law(const interp::GridFunction& map, const interp::GridFunction& cdf,
                           double K) {
    const double lo = std::max(map.front(), cdf.front());
    const double hi = std::min(map.back(), cdf.back());
    double a = lo;
    if (map(lo) < K) {
        if (map(hi) <= K) return 0.0;
        auto root = math::find_root([&](double w) { return map(w) - K; }, lo, hi);
        a = root ? *root : lo;
    }
    double value = std::max(map(a) - K, 0.0) * (1.0 - cdf(a));
    const int panels = 4000;
    const double h = (hi - a) / panels;
    auto f = [&](double w) { return map.derivative(w) * (1.0 - cdf(w)); };
    double acc = f(a) + f(hi);
    for (int i = 1; i < panels; ++i) {
        acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
    }
    value += acc * h / 3.0;
    return value;
}

interp::GridFunction gaussian_cdf(const std::vector<double>& grid, double t) {
    std::vector<double> v(grid.size());
    const double s = std::sqrt(t);
    for (std::size_t j = 0; j < grid.size(); ++j) v[j] = math::norm_cdf(grid[j] / s);
    return interp::GridFunction(grid, std::move(v), interp::Extrapolation::Constant);
}

} // namespace

std::vector<double> model_call_prices(const BassModel& model, std::size_t maturity_index,
                                      const std::vector<double>& strikes,
                                      PathConstruction construction) {
    if (maturity_index >= model.maturities.size()) {
        throw Error(ErrorCode::OutOfRange, "maturity index out of range");
    }
    const auto& T = model.maturities;
    const interp::GridFunction* map = &model.first_map;
    interp::GridFunction law = gaussian_cdf(model.first_map.grid(), T[0]);
    for (std::size_t i = 0; i < maturity_index; ++i) {
        const auto& iv = model.intervals[i];
        const auto& grid = iv.terminal_map.grid();
        if (construction == PathConstruction::Brownian) {
            law = gaussian_cdf(grid, T[i + 1]);
        } else {
            // law of the reset level, then Gaussian increment
            std::vector<double> reset(grid.size());
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const double s = iv.start_map(grid[j]);
                reset[j] = std::clamp(law(map->inverse(s)), 0.0, 1.0);
            }
            for (std::size_t j = 1; j < reset.size(); ++j) reset[j] = std::max(reset[j], reset[j - 1]);
            const interp::GridFunction reset_law(grid, std::move(reset), interp::Extrapolation::Constant);
            quad::QuadratureScheme fine{quad::SchemeKind::Trapezoid, 801, 2, std::nullopt};
            law = quad::convolve(reset_law, T[i + 1] - T[i], grid, fine);
        }
        map = &iv.terminal_map;
    }
    std::vector<double> out;
    out.reserve(strikes.size());
    for (double K : strikes) out.push_back(call_from_level_law(*map, law, K));
    return out;
}

std::vector<double> default_strikes(double spot) {
    auto k = math::linspace(0.5, 1.5, 21);
    for (auto& v : k) v *= spot;
    return k;
}

MaturityReport calibration_error(double maturity, const std::vector<double>& strikes,
                                 const std::vector<double>& model_prices,
                                 const std::vector<double>& reference_ivs, double spot,
                                 double rate) {
    if (strikes.size() != model_prices.size() || strikes.size() != reference_ivs.size()) {
        throw Error(ErrorCode::InvalidInput, "strike, price and reference sizes differ");
    }
    MaturityReport r;
    r.maturity = maturity;
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        double iv = std::numeric_limits<double>::quiet_NaN();
        try {
            iv = marketdata::implied_vol(model_prices[i], spot, strikes[i], rate, maturity,
                                         marketdata::Side::Call);
        } catch (const Error&) {
            ++r.dropped;
        }
        r.strikes.push_back(strikes[i]);
        r.model_prices.push_back(model_prices[i]);
        r.model_ivs.push_back(iv);
        r.reference_ivs.push_back(reference_ivs[i]);
        if (std::isfinite(iv) && !std::isfinite(reference_ivs[i])) ++r.dropped;
        if (std::isfinite(iv) && std::isfinite(reference_ivs[i])) {
            acc += std::abs(iv - reference_ivs[i]) / reference_ivs[i];
            ++used;
        }
    }
    if (used == 0) {
        throw Error(ErrorCode::AllPricesOutOfBand, "no model price inside the invertible band");
    }
    r.err_cab = acc / static_cast<double>(used);
    return r;
}

} // namespace basslv::mc
