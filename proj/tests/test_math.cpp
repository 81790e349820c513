#include "basslv/interp.hpp"
#include "basslv/math.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace basslv;

TEST(NormQuantile, InvertsTheCdf) {
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
        EXPECT_NEAR(oracle::Phi(math::norm_quantile(p)), p, 1e-12 * std::max(1.0, p / 1e-3));
    }
}

TEST(AdaptiveSimpson, MatchesClosedForms) {
    EXPECT_NEAR(math::adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0),
                std::exp(1.0) - 1.0, 1e-10);
    EXPECT_NEAR(math::adaptive_simpson(oracle::phi, -8.0, 8.0), 1.0, 1e-10);
}

TEST(FindRoot, BracketedAndUnbracketed) {
    auto r = math::find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0);
    ASSERT_TRUE(r);
    EXPECT_NEAR(*r, std::sqrt(2.0), 1e-12);
    EXPECT_FALSE(math::find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0));
}

TEST(FitLine, ExactLineHasUnitR2) {
    std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    auto f = math::fit_line(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(GridFunction, ReproducesCubicWithExactSlopes) {
    auto xs = oracle::grid(-2.0, 3.0, 11);
    std::vector<double> v, d;
    for (double x : xs) {
        v.push_back(x * x * x - x);
        d.push_back(3 * x * x - 1);
    }
    interp::GridFunction f(xs, v, d, interp::Extrapolation::Linear);
    for (double x : oracle::grid(-2.0, 3.0, 97)) EXPECT_NEAR(f(x), x * x * x - x, 1e-12);
}

TEST(GridFunction, MonotoneDataStaysMonotone) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs{0.0}, ys{0.0};
        for (int i = 1; i < 20; ++i) {
            xs.push_back(xs.back() + 0.1 + u(rng));
            ys.push_back(ys.back() + (u(rng) < 0.3 ? 0.0 : u(rng)));
        }
        interp::GridFunction f(xs, ys);
        double prev = f(xs.front());
        for (double x : oracle::grid(xs.front(), xs.back(), 2000)) {
            const double y = f(x);
            ASSERT_GE(y, prev - 1e-14);
            prev = y;
        }
    }
}

TEST(GridFunction, ExtrapolationKinds) {
    std::vector<double> xs{0, 1, 2}, ys{0, 1, 2};
    interp::GridFunction c(xs, ys, interp::Extrapolation::Constant);
    interp::GridFunction l(xs, ys, interp::Extrapolation::Linear);
    EXPECT_DOUBLE_EQ(c(5.0), 2.0);
    EXPECT_DOUBLE_EQ(c(-1.0), 0.0);
    EXPECT_NEAR(l(5.0), 5.0, 1e-12);
    EXPECT_NEAR(l(-1.0), -1.0, 1e-12);
}

TEST(GridFunction, InverseRoundTrip) {
    auto xs = oracle::grid(-4.0, 4.0, 81);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(oracle::Phi(x));
    interp::GridFunction f(xs, ys);
    for (double x : oracle::grid(-3.9, 3.9, 50)) EXPECT_NEAR(f.inverse(f(x)), x, 1e-9);
}

TEST(NaturalCubicSpline, AffineDataIsExact) {
    std::vector<double> xs{1, 2, 4, 7}, ys{3, 5, 9, 15};
    interp::NaturalCubicSpline s(xs, ys);
    for (double x : oracle::grid(1.0, 7.0, 25)) EXPECT_NEAR(s(x), 2 * x + 1, 1e-12);
}
