#include "basslv/error.hpp"
#include "basslv/quad.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace basslv;
using namespace basslv::quad;

namespace {

double rule_sum(const Rule& r, const std::function<double(double)>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
    return s;
}

// Phi(x / s) sampled with exact slopes, so interpolation error stays below 1e-10.
interp::GridFunction normal_cdf_grid(double s) {
    auto xs = oracle::grid(-15.0, 15.0, 3001);
    std::vector<double> v, d;
    for (double x : xs) {
        v.push_back(oracle::Phi(x / s));
        d.push_back(oracle::phi(x / s) / s);
    }
    return interp::GridFunction(xs, v, d, interp::Extrapolation::Constant);
}

} // namespace

TEST(HeatKernel, Examples) {
    EXPECT_NEAR(heat_kernel(0.0, 1.0), 0.398942280401433, 1e-12);
    for (double t : {0.04, 0.3, 2.0}) {
        for (double u : {-1.3, 0.0, 0.7, 2.5}) {
            const double x = std::sqrt(t) * u;
            EXPECT_NEAR(heat_kernel(x, t), heat_kernel(u, 1.0) / std::sqrt(t), 1e-14);
            EXPECT_DOUBLE_EQ(heat_kernel(x, t), heat_kernel(-x, t));
        }
        const double s = std::sqrt(t);
        EXPECT_NEAR(oracle::simpson([t](double x) { return heat_kernel(x, t); }, -10 * s, 10 * s,
                                    20000),
                    1.0, 1e-12);
    }
    EXPECT_THROW(heat_kernel(0.0, 0.0), Error);
}

TEST(TrapezoidParams, ClosedForm) {
    auto p = trapezoid_params(3, 50, 0.2, 0.9);
    EXPECT_NEAR(p.truncation, 7.4419, 1e-4);
    EXPECT_NEAR(p.h, 0.14884, 1e-5);
    EXPECT_NEAR(p.truncation, std::sqrt(2.0 * 0.2 / 0.1 * 3.0 * std::log(101.0)), 1e-14);
    EXPECT_DOUBLE_EQ(p.h * 50, p.truncation);
    auto q = trapezoid_params(1, 1, 1.0, 0.5);
    EXPECT_NEAR(q.truncation, std::sqrt(4.0 * std::log(3.0)), 1e-14);
    EXPECT_NEAR(q.truncation, 2.0963, 1e-4);
}

TEST(TrapezoidParams, EpsilonRange) {
    try {
        trapezoid_params(2, 50, 0.2, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EpsilonOutOfRange);
    }
    // lower end is max(1 - dt, 0)
    EXPECT_THROW(trapezoid_params(2, 50, 0.2, 0.8), Error);
    EXPECT_NO_THROW(trapezoid_params(2, 50, 0.2, 0.81));
    EXPECT_NEAR(default_epsilon(0.2), 0.9, 1e-15);
    EXPECT_NEAR(default_epsilon(3.0), 0.5, 1e-15);
}

TEST(GhNodes, Examples) {
    auto r2 = gh_nodes(2, 1.0);
    EXPECT_NEAR(r2.nodes[0], -1.0, 1e-14);
    EXPECT_NEAR(r2.nodes[1], 1.0, 1e-14);
    EXPECT_NEAR(r2.weights[0], 0.5, 1e-14);
    EXPECT_NEAR(r2.weights[1], 0.5, 1e-14);
    auto r1 = gh_nodes(1, 0.7);
    ASSERT_EQ(r1.nodes.size(), 1u);
    EXPECT_NEAR(r1.nodes[0], 0.0, 1e-15);
    EXPECT_NEAR(r1.weights[0], 1.0, 1e-15);
    try {
        gh_nodes(201, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedOrder);
    }
}

TEST(GhNodes, MomentsUpToDegree2nMinus1) {
    const auto r = gh_nodes(10, 0.2);
    for (int k = 0; k <= 19; ++k) {
        const double exact = oracle::gaussian_moment(k, 0.2);
        EXPECT_NEAR(rule_sum(r, [k](double x) { return std::pow(x, k); }), exact,
                    1e-12 * std::max(1.0, exact))
            << "degree " << k;
    }
    for (int n : {3, 20, 77, 200}) {
        const auto g = gh_nodes(n, 1.7);
        EXPECT_NEAR(rule_sum(g, [](double) { return 1.0; }), 1.0, 1e-12);
        EXPECT_NEAR(rule_sum(g, [](double x) { return x; }), 0.0, 1e-12);
        EXPECT_NEAR(rule_sum(g, [](double x) { return x * x; }), 1.7, 1e-10);
    }
}

TEST(TrapezoidRule, KernelMoments) {
    // the interval lengths of the three-maturity experiment
    for (double t : {0.2, 0.3}) {
        const auto r = make_rule({SchemeKind::Trapezoid, 101, 2, std::nullopt}, t);
        EXPECT_NEAR(rule_sum(r, [](double) { return 1.0; }), 1.0, 1e-12);
        EXPECT_NEAR(rule_sum(r, [](double x) { return x; }), 0.0, 1e-12);
        EXPECT_NEAR(rule_sum(r, [](double x) { return x * x; }), t, 1e-10);
    }
}

TEST(TrapezoidRule, MassDefectIsTheTruncatedTail) {
    // at t = 1 the optimal truncation drops ~1e-9 of kernel mass by design
    const double t = 1.0;
    const auto r = make_rule({SchemeKind::Trapezoid, 101, 2, std::nullopt}, t);
    const auto p = trapezoid_params(2, 50, t, default_epsilon(t));
    const double inside = 1.0 - 2.0 * oracle::Phi(-p.truncation / std::sqrt(t));
    // end nodes carry full weight, one extra half panel on each side
    const double expected = inside + p.h * oracle::phi(p.truncation / std::sqrt(t)) / std::sqrt(t);
    // first Euler-Maclaurin endpoint term bounds the remainder
    const double em = p.h * p.h * p.truncation * oracle::phi(p.truncation / std::sqrt(t));
    EXPECT_NEAR(rule_sum(r, [](double) { return 1.0; }), expected, em);
    EXPECT_GT(1.0 - expected, 1e-10);
}

TEST(Convolve, ConstantAndLinear) {
    auto xs = oracle::grid(-20, 20, 401);
    std::vector<double> one(xs.size(), 1.0);
    interp::GridFunction c(xs, one, interp::Extrapolation::Constant);
    interp::GridFunction l(xs, xs, interp::Extrapolation::Linear);
    auto out = oracle::grid(-5, 5, 41);
    for (SchemeKind kind : {SchemeKind::Trapezoid, SchemeKind::GaussHermite}) {
        QuadratureScheme s{kind, 101, 2, std::nullopt};
        auto cc = convolve(c, 0.3, out, s);
        auto ll = convolve(l, 0.3, out, s);
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_NEAR(cc.values()[i], 1.0, 1e-12);
            EXPECT_NEAR(ll.values()[i], out[i], 1e-10);
        }
    }
    EXPECT_THROW(convolve(c, 0.0, out, {}), Error);
}

TEST(Convolve, GaussianCdfIdentity) {
    const double s = 1.0, t = 0.5;
    auto f = normal_cdf_grid(s);
    auto out = oracle::grid(-5, 5, 101);
    for (auto [kind, n] : {std::pair{SchemeKind::Trapezoid, 101}, {SchemeKind::GaussHermite, 60}}) {
        auto g = convolve(f, t, out, {kind, n, 2, std::nullopt});
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_NEAR(g.values()[i], oracle::Phi(out[i] / std::sqrt(s * s + t)), 1e-8)
                << to_string(kind) << " w=" << out[i];
        }
    }
}

TEST(Hermite, LowOrders) {
    for (double x : {-2.0, 0.3, 1.7}) {
        EXPECT_DOUBLE_EQ(hermite_sigma(0, 0.7, x), 1.0);
        EXPECT_NEAR(hermite_sigma(1, 0.7, x), x / 0.7, 1e-15);
    }
}

TEST(Hermite, MatchesExplicitSum) {
    for (int n = 0; n <= 8; ++n) {
        for (double x : {-1.5, 0.2, 0.9}) {
            const double sigma = std::sqrt(0.2);
            EXPECT_NEAR(hermite_sigma(n, sigma, x),
                        oracle::hermite_he(n, x / sigma) / std::sqrt(std::tgamma(n + 1.0)), 1e-10);
        }
    }
}

TEST(Hermite, Orthonormality) {
    for (double var : {0.2, 1.0}) {
        const double sigma = std::sqrt(var);
        const auto r = gh_nodes(200, var);
        for (int n = 0; n <= 8; ++n) {
            for (int m = 0; m <= 8; ++m) {
                const double ip = rule_sum(r, [&](double x) {
                    return hermite_sigma(n, sigma, x) * hermite_sigma(m, sigma, x);
                });
                EXPECT_NEAR(ip, n == m ? 1.0 : 0.0, 1e-8) << n << "," << m << " var " << var;
            }
        }
    }
}

TEST(Hermite, DerivativeRecurrence) {
    for (double var : {0.2, 1.0}) {
        const double sigma = std::sqrt(var);
        for (int n = 1; n <= 8; ++n) {
            for (double x : oracle::grid(-2.0 * sigma, 2.0 * sigma, 9)) {
                const double h = 1e-5;
                const double fd =
                    (hermite_sigma(n, sigma, x + h) - hermite_sigma(n, sigma, x - h)) / (2 * h);
                EXPECT_NEAR(fd, std::sqrt(n) / sigma * hermite_sigma(n - 1, sigma, x), 1e-6);
            }
        }
    }
}

TEST(Quadrature, AnalyticIntegrandTrapezoidReaches1e12) {
    // E[exp(-X^2 / 4)], X ~ N(0, 1), equals sqrt(2 / 3)
    const double exact = std::sqrt(2.0 / 3.0);
    const auto f = [](double x) { return std::exp(-0.25 * x * x); };
    EXPECT_NEAR(reference_expectation(f, 1.0), exact, 1e-13);
    const auto r = make_rule({SchemeKind::Trapezoid, 65, 2, std::nullopt}, 1.0);
    EXPECT_LT(std::abs(rule_sum(r, f) - exact), 1e-12);
}

class ConvergenceStudy : public ::testing::Test {
protected:
    static void SetUpTestSuite() { study_ = new StudyResult(convergence_study({9, 17, 33, 65, 129})); }
    static void TearDownTestSuite() { delete study_; }
    static StudyResult* study_;
};
StudyResult* ConvergenceStudy::study_ = nullptr;

TEST_F(ConvergenceStudy, TrapezoidSlope) { EXPECT_LE(study_->trapezoid_slope, -1.5); }

// The O(n^{-m/2}) rate is an upper bound; this asserts the band as stated.
TEST_F(ConvergenceStudy, GaussHermiteSlopeBand) { EXPECT_GE(study_->gh_slope, -1.5); }

TEST_F(ConvergenceStudy, TrapezoidBeatsGaussHermiteFrom33) {
    for (const auto& t : study_->rows) {
        if (t.kind != SchemeKind::Trapezoid || t.n < 33) continue;
        for (const auto& g : study_->rows) {
            if (g.kind == SchemeKind::GaussHermite && g.n == t.n) {
                EXPECT_LT(t.abs_error, g.abs_error) << "n=" << t.n;
            }
        }
    }
}
