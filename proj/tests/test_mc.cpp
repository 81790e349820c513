#include "basslv/error.hpp"
#include "basslv/marketdata.hpp"
#include "basslv/mc.hpp"
#include "basslv/synth.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

using namespace basslv;
using namespace basslv::mc;

namespace {

constexpr double kSpot = 100.0;
const std::vector<double> kMaturities{1.0, 1.2, 1.5};

const bass::BassModel& bs_model(double tol) {
    static std::map<double, bass::BassModel> cache;
    auto it = cache.find(tol);
    if (it == cache.end()) {
        const bass::QuadratureScheme s{quad::SchemeKind::Trapezoid, 101, 2, std::nullopt};
        it = cache.emplace(tol, bass::calibrate(synth::bs_marginals(kSpot, 1.0, kMaturities),
                                                kMaturities, s, tol, 1000))
                 .first;
    }
    return it->second;
}

SimulationSpec spec(std::uint64_t n, std::uint64_t seed) {
    SimulationSpec s;
    s.n_paths = n;
    s.seed = seed;
    return s;
}

// err_cab at one maturity of the Black-Scholes experiment
double bs_err_cab(double tol, std::size_t maturity, std::uint64_t n, std::uint64_t seed) {
    const auto K = default_strikes(kSpot);
    const auto rows = price_calls_streaming(bs_model(tol), spec(n, seed), K);
    std::vector<double> prices;
    for (const auto& r : rows[maturity]) prices.push_back(r.price);
    const std::vector<double> ref(K.size(), 1.0);
    return calibration_error(kMaturities[maturity], K, prices, ref, kSpot, 0.0).err_cab;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

// ---------------------------------------------------------------------------
// Simulation

TEST(Simulate, MeanIsSpot) {
    const auto T = simulate_terminals(bs_model(1e-4), spec(1'000'000, 7));
    ASSERT_EQ(T.size(), 3u);
    const auto est = price_calls(T[0], {0.0});
    EXPECT_NEAR(est[0].price, kSpot, 3.0 * est[0].se);
}

TEST(Simulate, Deterministic) {
    const auto& m = bs_model(1e-4);
    const auto a = simulate_terminals(m, spec(100'000, 11));
    const auto b = simulate_terminals(m, spec(100'000, 11));
    EXPECT_EQ(a, b);
    const auto c = simulate_terminals(m, spec(100'000, 12));
    EXPECT_NE(a, c);
    auto threaded = spec(100'000, 11);
    threaded.threads = 3;
    EXPECT_EQ(simulate_terminals(m, threaded), a);
}

TEST(Simulate, AntitheticPairs) {
    const auto& m = bs_model(1e-4);
    auto s = spec(10'000, 5);
    s.construction = PathConstruction::Brownian;
    const auto L = simulate_levels(m, s);
    for (const auto& level : L) {
        for (std::size_t p = 0; p + 1 < level.size(); p += 2) {
            ASSERT_EQ(level[p], -level[p + 1]) << p;
        }
    }
    s.construction = PathConstruction::Remap;
    const auto R = simulate_levels(m, s);
    for (std::size_t p = 0; p + 1 < R[0].size(); p += 2) ASSERT_EQ(R[0][p], -R[0][p + 1]);
}

// ---------------------------------------------------------------------------
// Pricing

TEST(Price, ZeroStrikeIsMean) {
    const std::vector<double> S{90.0, 110.0, 95.0, 105.0};
    const auto est = price_calls(S, {0.0});
    EXPECT_DOUBLE_EQ(est[0].price, 100.0);
    // sample std / sqrt(n)
    EXPECT_NEAR(est[0].se, std::sqrt((100.0 + 100.0 + 25.0 + 25.0) / 3.0) / 2.0, 1e-12);
}

TEST(Price, AtTheMoneyBlackScholes) {
    const double expect = oracle::bs_call(kSpot, 100.0, 0.0, 1.0, 1.0);
    EXPECT_NEAR(expect, 38.29, 5e-3);
    const auto rows = price_calls_streaming(bs_model(1e-4), spec(10'000'000, 2024), {100.0});
    EXPECT_NEAR(rows[0][0].price, expect, 3.0 * rows[0][0].se);
}

TEST(Price, FarOutOfTheMoney) {
    const auto rows = price_calls_streaming(bs_model(1e-4), spec(200'000, 3), {1e8});
    for (const auto& r : rows) EXPECT_LT(r[0].price, 1e-6);
}

TEST(Price, StreamingMatchesStored) {
    const auto& m = bs_model(1e-4);
    const auto K = default_strikes(kSpot);
    const auto T = simulate_terminals(m, spec(200'000, 9));
    const auto rows = price_calls_streaming(m, spec(200'000, 9), K);
    for (std::size_t j = 0; j < T.size(); ++j) {
        const auto stored = price_calls(T[j], K);
        for (std::size_t i = 0; i < K.size(); ++i) {
            EXPECT_NEAR(rows[j][i].price, stored[i].price, 1e-9 * stored[i].price + 1e-12);
        }
    }
}

TEST(Price, QuadratureAgreesWithBlackScholes) {
    const auto& m = bs_model(1e-5);
    const auto K = default_strikes(kSpot);
    for (std::size_t j = 0; j < kMaturities.size(); ++j) {
        const auto p = model_call_prices(m, j, K, PathConstruction::Remap);
        for (std::size_t i = 0; i < K.size(); ++i) {
            EXPECT_NEAR(p[i], oracle::bs_call(kSpot, K[i], 0.0, kMaturities[j], 1.0), 2e-3 * kSpot);
        }
    }
}

TEST(Price, DefaultStrikes) {
    const auto K = default_strikes(kSpot);
    ASSERT_EQ(K.size(), 21u);
    EXPECT_DOUBLE_EQ(K.front(), 50.0);
    EXPECT_DOUBLE_EQ(K.back(), 150.0);
    EXPECT_NEAR(K[1] - K[0], 5.0, 1e-12);
}

TEST(PriceInvariant, MartingaleMonotoneConvex) {
    std::vector<double> K{0.0};
    for (double k : default_strikes(kSpot)) K.push_back(k);
    const auto rows = price_calls_streaming(bs_model(1e-4), spec(1'000'000, 31), K);
    for (const auto& r : rows) {
        EXPECT_LE(std::abs(r[0].price - kSpot), 4.0 * r[0].se);
        for (std::size_t i = 2; i < r.size(); ++i) {
            EXPECT_LE(r[i].price, r[i - 1].price + 2.0 * (r[i].se + r[i - 1].se));
        }
        for (std::size_t i = 2; i + 1 < r.size(); ++i) {
            const double d2 = r[i + 1].price - 2.0 * r[i].price + r[i - 1].price;
            EXPECT_GE(d2, -2.0 * (r[i + 1].se + 2.0 * r[i].se + r[i - 1].se));
        }
    }
}

// ---------------------------------------------------------------------------
// Calibration error

TEST(CalibrationError, IdentityIsZero) {
    const auto K = default_strikes(kSpot);
    std::vector<double> prices, ivs;
    for (double k : K) {
        const double v = 0.2 + 0.001 * std::abs(k - kSpot);
        ivs.push_back(v);
        prices.push_back(oracle::bs_call(kSpot, k, 0.0, 1.0, v));
    }
    const auto r = calibration_error(1.0, K, prices, ivs, kSpot, 0.0);
    EXPECT_NEAR(r.err_cab, 0.0, 1e-9);
    EXPECT_EQ(r.dropped, 0u);
    EXPECT_GE(r.err_cab, 0.0);
}

TEST(CalibrationError, OutOfBandDroppedAndCounted) {
    const auto K = default_strikes(kSpot);
    std::vector<double> prices, ivs(K.size(), 0.3);
    for (double k : K) prices.push_back(oracle::bs_call(kSpot, k, 0.0, 1.0, 0.3));
    prices[3] = kSpot + 1.0;
    const auto r = calibration_error(1.0, K, prices, ivs, kSpot, 0.0);
    EXPECT_EQ(r.dropped, 1u);
    EXPECT_NEAR(r.err_cab, 0.0, 1e-9);
    std::vector<double> bad(K.size(), kSpot + 1.0);
    try {
        calibration_error(1.0, K, bad, ivs, kSpot, 0.0);
        ADD_FAILURE() << "expected AllPricesOutOfBand";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AllPricesOutOfBand);
    }
}

TEST(CalibrationError, MapeOfKnownBias) {
    const auto K = default_strikes(kSpot);
    std::vector<double> prices, ivs(K.size(), 0.5);
    for (double k : K) prices.push_back(oracle::bs_call(kSpot, k, 0.0, 1.0, 0.51));
    EXPECT_NEAR(calibration_error(1.0, K, prices, ivs, kSpot, 0.0).err_cab, 0.02, 1e-8);
}

TEST(CalibrationError, TightToleranceExperiment) {
    const double e = bs_err_cab(1e-3, 1, 10'000'000, 42);
    std::printf("err_cab(T2) at tol 1e-3, 1e7 paths: %.4e\n", e);
    EXPECT_LE(e, 3e-2);
}

TEST(CalibrationError, LooseToleranceBand) {
    const double e = bs_err_cab(1e-2, 1, 10'000'000, 42);
    std::printf("err_cab(T2) at tol 1e-2, 1e7 paths: %.4e\n", e);
    EXPECT_GE(e, 5e-2);
    EXPECT_LE(e, 2e-1);
}

TEST(CalibrationErrorInvariant, OrderingAndFlattening) {
    std::map<double, double> med;
    for (double tol : {1e-2, 1e-3, 1e-4, 1e-5}) {
        std::vector<double> runs;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) runs.push_back(bs_err_cab(tol, 1, 1'000'000, seed));
        med[tol] = median(runs);
        std::printf("tol %.0e median err_cab(T2) %.4e\n", tol, med[tol]);
    }
    EXPECT_GT(med[1e-2], med[1e-3]);
    EXPECT_GT(med[1e-3], med[1e-4]);
    EXPECT_LT(std::abs(med[1e-4] - med[1e-5]), med[1e-3] - med[1e-4]);
}
