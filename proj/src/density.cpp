#include "basslv/density.hpp"

#include "basslv/error.hpp"
#include "basslv/math.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace basslv::density {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

// three-point Gauss-Legendre on [-1, 1]
constexpr double kGlNode = 0.7745966692414834;
constexpr double kGlOuter = 5.0 / 9.0;
constexpr double kGlInner = 8.0 / 9.0;

void check_positive(double v, const char* what) {
    if (!(v > 0.0)) {
        throw Error(ErrorCode::InvalidInput, std::string(what) + " must be positive");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// LQR

std::vector<double> LqrFit::strike_grid() const {
    std::vector<double> g;
    g.reserve(points.size());
    for (const auto& p : points) g.push_back(p.strike);
    return g;
}

double density_bracket(double a0, double a1, double a2, double K, double F, double tau) {
    const double st = std::sqrt(tau);
    const double d1 = (std::log(F / K) + 0.5 * a0 * a0 * tau) / (a0 * st);
    const double d2 = d1 - a0 * st;
    return 1.0 / (K * K * a0 * tau) + 2.0 * d1 * a1 / (K * a0 * st) + d1 * d2 * a1 * a1 / a0 +
           2.0 * a2;
}

double rnd_from_alpha(double a0, double a1, double a2, double K, double F, double tau) {
    const double st = std::sqrt(tau);
    const double d1 = (std::log(F / K) + 0.5 * a0 * a0 * tau) / (a0 * st);
    return F * st * math::norm_pdf(d1) * density_bracket(a0, a1, a2, K, F, tau);
}

namespace {

struct Window {
    std::vector<double> u;
    std::vector<double> w;
    std::vector<double> y;
    double h = 0.0;
    int positive = 0;
};

Window make_window(const std::vector<IvQuote>& quotes, double K, int k) {
    std::vector<double> dist;
    dist.reserve(quotes.size());
    for (const auto& q : quotes) dist.push_back(std::abs(q.first - K));
    std::sort(dist.begin(), dist.end());
    const double dk = dist[static_cast<std::size_t>(k - 1)];
    double h = 1.05 * dk;
    for (std::size_t j = static_cast<std::size_t>(k); j < dist.size(); ++j) {
        if (dist[j] > dk) {
            h = 0.5 * (dk + dist[j]);
            break;
        }
    }
    Window win;
    win.h = h;
    for (const auto& q : quotes) {
        const double u = (q.first - K) / h;
        if (std::abs(u) < 1.0) {
            win.u.push_back(u);
            win.w.push_back(0.75 * (1.0 - u * u));
            win.y.push_back(q.second);
            ++win.positive;
        }
    }
    return win;
}

double window_loss(const Window& win, double b0, double b1, double b2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < win.u.size(); ++i) {
        const double r = b0 + b1 * win.u[i] + b2 * win.u[i] * win.u[i] - win.y[i];
        loss += win.w[i] * r * r;
    }
    return loss;
}

// alpha2 placing the bracket exactly on zero
double boundary_alpha2(double a0, double a1, double K, double F, double tau) {
    return -0.5 * density_bracket(a0, a1, 0.0, K, F, tau);
}

} // namespace

LqrPoint lqr_local(const std::vector<IvQuote>& quotes, double K, int window_count, double F,
                   double tau) {
    const int n = static_cast<int>(quotes.size());
    for (int k = window_count; k <= n; ++k) {
        Window win = make_window(quotes, K, k);
        if (win.positive < 3) continue;
        const auto m = win.u.size();
        Eigen::MatrixXd X(m, 3);
        Eigen::VectorXd y(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double sw = std::sqrt(win.w[i]);
            X(i, 0) = sw;
            X(i, 1) = sw * win.u[i];
            X(i, 2) = sw * win.u[i] * win.u[i];
            y(i) = sw * win.y[i];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        qr.setThreshold(1e-12);
        if (qr.rank() < 3) continue;
        const Eigen::Vector3d b = qr.solve(y);

        LqrPoint p;
        p.strike = K;
        p.bandwidth = win.h;
        p.window = win.positive;
        p.alpha0 = b(0);
        p.alpha1 = b(1) / win.h;
        p.alpha2 = b(2) / (win.h * win.h);
        if (!(p.alpha0 > 0.0)) {
            throw Error(ErrorCode::SingularDesign, "local fit produced non-positive volatility");
        }
        if (density_bracket(p.alpha0, p.alpha1, p.alpha2, K, F, tau) >= 0.0) {
            return p;
        }

        // Constrained refit: alpha2 eliminated via the bracket = 0 boundary,
        // Levenberg-Marquardt on (alpha0, alpha1 * h).
        p.constrained = true;
        const double h = win.h;
        auto loss_at = [&](double a0, double b1) {
            if (!(a0 > 0.0)) return std::numeric_limits<double>::infinity();
            const double a2 = boundary_alpha2(a0, b1 / h, K, F, tau);
            return window_loss(win, a0, b1, a2 * h * h);
        };
        auto residuals = [&](double a0, double b1) {
            const double b2 = boundary_alpha2(a0, b1 / h, K, F, tau) * h * h;
            Eigen::VectorXd r(m);
            for (std::size_t i = 0; i < m; ++i) {
                r(i) = std::sqrt(win.w[i]) *
                       (a0 + b1 * win.u[i] + b2 * win.u[i] * win.u[i] - win.y[i]);
            }
            return r;
        };
        double a0 = p.alpha0;
        double b1 = b(1);
        double mu = 1e-3;
        double cur = loss_at(a0, b1);
        for (int it = 0; it < 200; ++it) {
            const Eigen::VectorXd r = residuals(a0, b1);
            Eigen::MatrixXd J(m, 2);
            const double e0 = 1e-7 * std::max(1.0, std::abs(a0));
            const double e1 = 1e-7 * std::max(1e-3, std::abs(b1));
            J.col(0) = (residuals(a0 + e0, b1) - residuals(a0 - e0, b1)) / (2.0 * e0);
            J.col(1) = (residuals(a0, b1 + e1) - residuals(a0, b1 - e1)) / (2.0 * e1);
            const Eigen::Matrix2d JtJ = J.transpose() * J;
            const Eigen::Vector2d g = J.transpose() * r;
            bool improved = false;
            for (int tries = 0; tries < 30; ++tries) {
                Eigen::Matrix2d A = JtJ;
                A(0, 0) += mu * (JtJ(0, 0) + 1e-300);
                A(1, 1) += mu * (JtJ(1, 1) + 1e-300);
                const Eigen::Vector2d step = A.ldlt().solve(-g);
                const double na0 = a0 + step(0);
                const double nb1 = b1 + step(1);
                const double trial = loss_at(na0, nb1);
                if (trial < cur) {
                    const double rel = (cur - trial) / std::max(cur, 1e-300);
                    a0 = na0;
                    b1 = nb1;
                    cur = trial;
                    mu = std::max(mu * 0.3, 1e-12);
                    improved = rel > 1e-14;
                    break;
                }
                mu *= 10.0;
            }
            if (!improved) break;
        }
        p.alpha0 = a0;
        p.alpha1 = b1 / h;
        p.alpha2 = boundary_alpha2(a0, p.alpha1, K, F, tau);
        // nudge onto the feasible side of the boundary
        for (int it = 0; it < 64 && density_bracket(p.alpha0, p.alpha1, p.alpha2, K, F, tau) < 0.0;
             ++it) {
            const double deficit = -density_bracket(p.alpha0, p.alpha1, p.alpha2, K, F, tau);
            p.alpha2 += std::max(0.5 * deficit, std::abs(p.alpha2) * 1e-16 + 1e-300);
        }
        return p;
    }
    throw Error(ErrorCode::SingularDesign,
                "fewer than 3 distinct strikes in every window at K=" + std::to_string(K));
}

LqrFit lqr_fit(std::vector<IvQuote> quotes, const std::vector<double>& eval_grid,
               int window_count, double forward, double tau) {
    check_positive(forward, "forward");
    check_positive(tau, "maturity");
    if (quotes.size() < 5) {
        throw Error(ErrorCode::TooFewQuotes, "need at least 5 quotes, got " +
                                                 std::to_string(quotes.size()));
    }
    if (window_count < 5 || window_count > static_cast<int>(quotes.size())) {
        throw Error(ErrorCode::TooFewQuotes, "window count must lie in [5, number of quotes]");
    }
    std::sort(quotes.begin(), quotes.end());
    const double lo = quotes.front().first;
    const double hi = quotes.back().first;
    LqrFit fit;
    fit.window_count = window_count;
    fit.forward = forward;
    fit.tau = tau;
    for (double K : eval_grid) {
        if (K < lo - 1e-12 * lo || K > hi + 1e-12 * hi) {
            throw Error(ErrorCode::OutOfRange, "eval strike outside quoted range");
        }
        fit.points.push_back(lqr_local(quotes, K, window_count, forward, tau));
    }
    fit.quotes = std::move(quotes);
    return fit;
}

double rnd_from_iv(const LqrFit& fit, double K, double forward, double tau) {
    if (fit.quotes.empty() || K < fit.quotes.front().first - 1e-12 ||
        K > fit.quotes.back().first + 1e-12) {
        throw Error(ErrorCode::OutOfRange, "strike outside fitted range");
    }
    const LqrPoint p = lqr_local(fit.quotes, K, fit.window_count, forward, tau);
    return rnd_from_alpha(p.alpha0, p.alpha1, p.alpha2, K, forward, tau);
}

// ---------------------------------------------------------------------------
// Tails

namespace {

double ln_mu(double eta, double v) { return std::log(eta) - 0.5 * v * v; }

double ln_pdf(double x, double eta, double v) {
    if (x <= 0.0) return 0.0;
    const double u = (std::log(x) - ln_mu(eta, v)) / v;
    return math::norm_pdf(u) / (x * v);
}

double ln_dpdf(double x, double eta, double v) {
    if (x <= 0.0) return 0.0;
    const double u = (std::log(x) - ln_mu(eta, v)) / v;
    return ln_pdf(x, eta, v) * (-1.0 - u / v) / x;
}

double ln_cdf(double x, double eta, double v) {
    if (x <= 0.0) return 0.0;
    return math::norm_cdf((std::log(x) - ln_mu(eta, v)) / v);
}

double ln_survival(double x, double eta, double v) {
    if (x <= 0.0) return 1.0;
    return math::norm_cdf((ln_mu(eta, v) - std::log(x)) / v);
}

// E[X; X <= x]
double ln_lower_mean(double x, double eta, double v) {
    if (x <= 0.0) return 0.0;
    return eta * math::norm_cdf((std::log(x) - ln_mu(eta, v) - v * v) / v);
}

// E[X; X > x]
double ln_upper_mean(double x, double eta, double v) {
    if (x <= 0.0) return eta;
    return eta * math::norm_cdf((ln_mu(eta, v) + v * v - std::log(x)) / v);
}

double tail_survival(const TailParams& t, double x) {
    return t.lambda * ln_survival(x, t.eta1, t.v1) + (1.0 - t.lambda) * ln_survival(x, t.eta2, t.v2);
}

double tail_upper_mean(const TailParams& t, double x) {
    return t.lambda * ln_upper_mean(x, t.eta1, t.v1) +
           (1.0 - t.lambda) * ln_upper_mean(x, t.eta2, t.v2);
}

} // namespace

double TailParams::mu1() const { return ln_mu(eta1, v1); }
double TailParams::mu2() const { return ln_mu(eta2, v2); }

double TailParams::pdf(double x) const {
    return lambda * ln_pdf(x, eta1, v1) + (1.0 - lambda) * ln_pdf(x, eta2, v2);
}

double TailParams::dpdf(double x) const {
    return lambda * ln_dpdf(x, eta1, v1) + (1.0 - lambda) * ln_dpdf(x, eta2, v2);
}

double TailParams::cdf(double x) const {
    return lambda * ln_cdf(x, eta1, v1) + (1.0 - lambda) * ln_cdf(x, eta2, v2);
}

double TailParams::partial_mean(double x) const {
    return lambda * ln_lower_mean(x, eta1, v1) + (1.0 - lambda) * ln_lower_mean(x, eta2, v2);
}

double TailResiduals::max_abs() const {
    return std::max({std::abs(survival), std::abs(density), std::abs(slope),
                     std::abs(expectation)});
}

TailResiduals tail_residuals(const TailParams& p, const TailTargets& t) {
    TailResiduals r;
    r.survival = tail_survival(p, t.K) - t.survival;
    r.density = p.pdf(t.K) - t.q;
    r.slope = p.dpdf(t.K) - t.dq;
    const double e = p.side == TailSide::Left ? p.partial_mean(t.K) : tail_upper_mean(p, t.K);
    r.expectation = e - t.expectation;
    return r;
}

namespace {

struct Candidate {
    bool valid = false;
    TailParams params;
    double residual = 0.0;
};

bool admissible(const TailParams& p, const TailConstraints& c) {
    if (!(p.v1 > 0.0) || !(p.v2 > 0.0) || !std::isfinite(p.v1) || !std::isfinite(p.v2)) {
        return false;
    }
    if (!(p.lambda >= 0.0 && p.lambda <= 1.0)) return false;
    if (c.bimodal) {
        if (!(p.v1 >= 1.0) || !(p.v2 < 1.0) || !(p.lambda > 0.5)) return false;
    }
    return true;
}

TailParams make_params(TailSide side, double K, double z, double lambda, double v1, double v2) {
    TailParams p;
    p.side = side;
    p.K = K;
    p.z = z;
    p.lambda = lambda;
    p.v1 = v1;
    p.v2 = v2;
    p.eta1 = K * std::exp(z * v1 + 0.5 * v1 * v1);
    p.eta2 = K * std::exp(z * v2 + 0.5 * v2 * v2);
    return p;
}

} // namespace

namespace {

// Density matched exactly, survival, expectation and slope in relative least
// squares over (z, log v1, log v2); lambda follows from the density.
std::optional<TailParams> least_squares_tail(const TailTargets& t, TailSide side,
                                             const TailConstraints& constraints) {
    const double tail_mass = side == TailSide::Left ? 1.0 - t.survival : t.survival;
    const double slope_scale = t.q / t.K;
    auto params_at = [&](const Eigen::Vector3d& x) -> std::optional<TailParams> {
        const double z = x(0);
        const double c = std::exp(-0.5 * z * z) / (t.K * kSqrt2Pi);
        const double B = t.q / c;
        const double v1 = std::exp(x(1));
        const double v2 = std::exp(x(2));
        const double lambda = (B - 1.0 / v2) / (1.0 / v1 - 1.0 / v2);
        if (!std::isfinite(lambda) || std::min(v1, v2) < 1e-3 || std::max(v1, v2) > 10.0) {
            return std::nullopt;
        }
        TailParams p = make_params(side, t.K, z, lambda, v1, v2);
        if (!admissible(p, constraints) || !(std::abs(p.pdf(t.K) - t.q) <= 1e-9 * t.q)) {
            return std::nullopt;
        }
        return p;
    };
    auto residuals = [&](const Eigen::Vector3d& x) -> std::optional<Eigen::Vector3d> {
        auto p = params_at(x);
        if (!p) return std::nullopt;
        const TailResiduals r = tail_residuals(*p, t);
        Eigen::Vector3d out(r.survival / tail_mass, r.expectation / std::abs(t.expectation),
                            r.slope / slope_scale);
        if (!out.allFinite()) return std::nullopt;
        return out;
    };
    const double z0 = math::norm_quantile(t.survival);
    const double B0 = t.q / (std::exp(-0.5 * z0 * z0) / (t.K * kSqrt2Pi));
    std::optional<Eigen::Vector3d> best_x;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Vector3d> starts;
    for (double spread : {1.05, 1.5, 3.0}) {
        for (double w : {0.1, 0.5, 0.9}) {
            // v1 = spread / B, v2 chosen so that the density fixes lambda at w
            const double v2 = (1.0 - w) / (B0 * (1.0 - w / spread));
            starts.emplace_back(z0, std::log(spread / B0), std::log(v2));
        }
    }
    for (Eigen::Vector3d x : starts) {
        auto r = residuals(x);
        if (!r) continue;
        double cur = r->squaredNorm();
        double mu = 1e-3;
        for (int it = 0; it < 200; ++it) {
            Eigen::Matrix3d J;
            bool ok = true;
            for (int k = 0; k < 3 && ok; ++k) {
                Eigen::Vector3d e = Eigen::Vector3d::Zero();
                e(k) = 1e-6;
                auto rp = residuals(x + e);
                auto rm = residuals(x - e);
                if (rp && rm) {
                    J.col(k) = (*rp - *rm) / 2e-6;
                } else if (rp) {
                    J.col(k) = (*rp - *r) / 1e-6;
                } else if (rm) {
                    J.col(k) = (*r - *rm) / 1e-6;
                } else {
                    ok = false;
                }
            }
            if (!ok) break;
            const Eigen::Matrix3d JtJ = J.transpose() * J;
            const Eigen::Vector3d g = J.transpose() * *r;
            bool improved = false;
            for (int tries = 0; tries < 30; ++tries) {
                Eigen::Matrix3d A = JtJ;
                A.diagonal() += mu * (JtJ.diagonal().array() + 1e-12).matrix();
                const Eigen::Vector3d trial_x = x + A.ldlt().solve(-g);
                auto tr = residuals(trial_x);
                if (tr && tr->squaredNorm() < cur) {
                    improved = (cur - tr->squaredNorm()) > 1e-14 * std::max(cur, 1e-300);
                    x = trial_x;
                    r = tr;
                    cur = tr->squaredNorm();
                    mu = std::max(mu * 0.3, 1e-12);
                    break;
                }
                mu *= 10.0;
            }
            if (!improved) break;
        }
        if (cur < best) {
            best = cur;
            best_x = x;
        }
    }
    if (!best_x) return std::nullopt;
    return params_at(*best_x);
}

// Admissible solutions of the four relations, best first. Empty when none.
std::vector<TailParams> exact_roots(const TailTargets& t, TailSide side,
                                    const TailConstraints& constraints, int scan) {
    const double z = math::norm_quantile(t.survival);
    const double c = std::exp(-0.5 * z * z) / (t.K * kSqrt2Pi);
    const double B = t.q / c;
    const double P = (t.K * t.dq + t.q) / z;
    const double A = P / c;

    // single lognormal: v1 no longer depends on v2
    if (std::abs(A - B * B) <= 1e-12 * B * B) {
        return {make_params(side, t.K, z, 1.0, 1.0 / B, 1.0 / B)};
    }
    // A and B are the mixture averages of 1/v^2 and 1/v, so A < B^2 admits no mixture
    if (A < B * B) return {};

    auto evaluate = [&](double v2) {
        Candidate cand;
        const double v1 = (B - 1.0 / v2) / (A - B / v2);
        const double lambda = (B - 1.0 / v2) / (1.0 / v1 - 1.0 / v2);
        cand.params = make_params(side, t.K, z, lambda, v1, v2);
        cand.valid = admissible(cand.params, constraints) && std::isfinite(lambda);
        if (cand.valid) {
            const auto& p = cand.params;
            double e;
            if (side == TailSide::Left) {
                e = p.lambda * p.eta1 * math::norm_cdf(-z - p.v1) +
                    (1.0 - p.lambda) * p.eta2 * math::norm_cdf(-z - p.v2);
            } else {
                e = p.lambda * p.eta1 * math::norm_cdf(z + p.v1) +
                    (1.0 - p.lambda) * p.eta2 * math::norm_cdf(z + p.v2);
            }
            cand.residual = e - t.expectation;
        }
        return cand;
    };

    const double lo = std::log(1e-3), hi = std::log(10.0);
    std::vector<TailParams> roots;
    Candidate prev = evaluate(std::exp(lo));
    double prev_v = std::exp(lo);
    const double scale = std::max(1.0, std::abs(t.expectation));
    // a tail holding almost no mass leaves the residual flat at the rounding level
    std::optional<Candidate> flat;
    for (int i = 1; i <= scan; ++i) {
        const double v = std::exp(lo + (hi - lo) * i / scan);
        Candidate cur = evaluate(v);
        if (cur.valid && std::abs(cur.residual) <= 1e-10 * scale &&
            (!flat || std::abs(cur.residual) < std::abs(flat->residual))) {
            flat = cur;
        }
        if (prev.valid && cur.valid &&
            (prev.residual == 0.0 || (prev.residual < 0.0) != (cur.residual < 0.0))) {
            auto f = [&](double x) {
                Candidate cc = evaluate(x);
                return cc.valid ? cc.residual : std::numeric_limits<double>::quiet_NaN();
            };
            auto root = math::find_root(f, prev_v, v);
            if (root) {
                Candidate r = evaluate(*root);
                if (r.valid && std::abs(r.residual) <= 1e-10 * scale) {
                    roots.push_back(r.params);
                }
            }
        }
        prev = cur;
        prev_v = v;
    }
    if (roots.empty() && flat) roots.push_back(flat->params);
    // a root and its relabelled twin tie on |v1 - v2|; list the heavier component first
    std::stable_sort(roots.begin(), roots.end(), [](const TailParams& a, const TailParams& b) {
        const double da = std::abs(a.v1 - a.v2), db = std::abs(b.v1 - b.v2);
        if (std::abs(da - db) > 1e-9 * std::max(da, db)) return da < db;
        return (a.lambda >= 0.5) > (b.lambda >= 0.5);
    });
    return roots;
}

} // namespace

TailSolution fit_tail(const TailTargets& t, TailSide side, const TailConstraints& constraints) {
    if (!(t.q > 0.0) || !std::isfinite(t.dq) || !(t.K > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "tail fit needs positive density and finite slope");
    }
    if (!(t.survival > 0.0 && t.survival < 1.0)) {
        throw Error(ErrorCode::NoRoot, "survival target outside (0, 1)");
    }
    TailSolution sol;
    auto roots = exact_roots(t, side, constraints, 4000);
    if (roots.empty() && !constraints.require_exact) {
        if (auto p = least_squares_tail(t, side, constraints)) roots.push_back(*p);
        sol.exact = false;
    }
    if (roots.empty()) {
        throw Error(ErrorCode::NoRoot, "no admissible lognormal mixture for v2 in [1e-3, 10]");
    }
    sol.params = roots.front();
    sol.alternatives.assign(roots.begin() + 1, roots.end());
    return sol;
}

TailTargets smile_targets(const PastingData& p, TailSide side, double F, double tau) {
    const double st = std::sqrt(tau);
    const double sd = p.sigma * st;
    const double d1 = (std::log(F / p.K) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    const double skew = p.K * math::norm_pdf(d2) * st * p.dsigma;
    TailTargets t;
    t.K = p.K;
    t.q = p.q;
    t.dq = p.dq;
    t.survival = math::norm_cdf(d2) - skew;
    if (side == TailSide::Left) {
        t.expectation = F * math::norm_cdf(-d1) + p.K * skew;
    } else {
        t.expectation = F * math::norm_cdf(d1) - p.K * skew;
    }
    return t;
}

TailFit fit_tails(const PastingData& left, const PastingData& right, double core_mass,
                  double core_mean, double F, double tau, const TailOptions& options) {
    TailFit out;
    TailTargets lt = smile_targets(left, TailSide::Left, F, tau);
    TailTargets rt = smile_targets(right, TailSide::Right, F, tau);
    const double mass_l = 1.0 - lt.survival;
    const double mass_r = rt.survival;
    out.mass_defect = 1.0 - (mass_l + core_mass + mass_r);
    out.mean_defect = F - (lt.expectation + core_mean + rt.expectation);
    auto ls = fit_tail(lt, TailSide::Left, options.left);
    auto rs = fit_tail(rt, TailSide::Right, options.right);
    out.left = ls.params;
    out.right = rs.params;
    out.left_targets = lt;
    out.right_targets = rt;
    out.left_alternatives = std::move(ls.alternatives);
    out.right_alternatives = std::move(rs.alternatives);
    out.left_exact = ls.exact;
    out.right_exact = rs.exact;
    return out;
}

// ---------------------------------------------------------------------------
// Assembled density

double RiskNeutralDensity::pdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x < K_L) return scale * left.pdf(x);
    if (x <= K_U) return scale * core(x);
    return scale * right.pdf(x);
}

std::pair<double, double> RiskNeutralDensity::core_moments(double a, double b) const {
    a = std::max(a, K_L);
    b = std::min(b, K_U);
    if (!(b > a)) return {0.0, 0.0};
    const auto& g = core.grid();
    double mass = 0.0, first = 0.0;
    auto it = std::upper_bound(g.begin(), g.end(), a);
    std::size_t i = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
    for (; i + 1 < g.size() && g[i] < b; ++i) {
        const double lo = std::max(a, g[i]);
        const double hi = std::min(b, g[i + 1]);
        if (!(hi > lo)) continue;
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        for (int k = -1; k <= 1; ++k) {
            const double x = mid + k * kGlNode * half;
            const double w = (k == 0 ? kGlInner : kGlOuter) * half;
            const double v = core(x);
            mass += w * v;
            first += w * v * x;
        }
    }
    return {mass, first};
}

double RiskNeutralDensity::mass() const {
    return scale * (left.cdf(K_L) + core_moments(K_L, K_U).first + tail_survival(right, K_U));
}

double RiskNeutralDensity::mean() const {
    return scale * (left.partial_mean(K_L) + core_moments(K_L, K_U).second +
                    tail_upper_mean(right, K_U));
}

double RiskNeutralDensity::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x < K_L) return scale * left.cdf(x);
    const double below = left.cdf(K_L);
    if (x <= K_U) return scale * (below + core_moments(K_L, x).first);
    return scale * (below + core_moments(K_L, K_U).first + tail_survival(right, K_U) -
                    tail_survival(right, x));
}

std::pair<double, double> RiskNeutralDensity::upper_moments(double K) const {
    double mass = 0.0, first = 0.0;
    if (K >= K_U) {
        mass = tail_survival(right, K);
        first = tail_upper_mean(right, K);
    } else {
        const auto core_part = core_moments(std::max(K, K_L), K_U);
        mass = core_part.first + tail_survival(right, K_U);
        first = core_part.second + tail_upper_mean(right, K_U);
        if (K < K_L) {
            mass += left.cdf(K_L) - left.cdf(std::max(K, 0.0));
            first += left.partial_mean(K_L) - left.partial_mean(std::max(K, 0.0));
        }
    }
    return {scale * mass, scale * first};
}

double RiskNeutralDensity::call(double K) const {
    const auto [mass, first] = upper_moments(K);
    return first - K * mass;
}

GridFunction core_from_fit(const LqrFit& fit) {
    const auto grid = fit.strike_grid();
    if (grid.size() < 3) {
        throw Error(ErrorCode::InvalidInput, "core needs at least 3 eval strikes");
    }
    std::vector<double> values;
    values.reserve(grid.size());
    for (const auto& p : fit.points) {
        values.push_back(rnd_from_alpha(p.alpha0, p.alpha1, p.alpha2, p.strike, fit.forward, fit.tau));
    }
    auto slopes = interp::pchip_slopes(grid, values);
    const double step = std::min(grid[1] - grid[0], grid[grid.size() - 1] - grid[grid.size() - 2]);
    const double delta = 0.05 * step;
    auto q = [&](double K) { return rnd_from_iv(fit, K, fit.forward, fit.tau); };
    const double kl = grid.front();
    const double ku = grid.back();
    slopes.front() = (-3.0 * values.front() + 4.0 * q(kl + delta) - q(kl + 2.0 * delta)) / (2.0 * delta);
    slopes.back() = (3.0 * values.back() - 4.0 * q(ku - delta) + q(ku - 2.0 * delta)) / (2.0 * delta);
    return GridFunction(grid, values, slopes, interp::Extrapolation::Constant);
}

GridFunction close_core_moments(const GridFunction& core, double target_mass, double target_mean) {
    const auto& x = core.grid();
    const auto& q = core.values();
    const auto& dq = core.slopes();
    const double a = x.front();
    const double b = x.back();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    auto moments = [&](std::vector<double> v, std::vector<double> d) {
        RiskNeutralDensity probe;
        probe.K_L = a;
        probe.K_U = b;
        probe.core = GridFunction(x, std::move(v), std::move(d), interp::Extrapolation::Constant);
        return probe.core_moments(a, b);
    };
    // bumps s^2 and s^2 * u vanish with zero slope at both ends, so pasting is untouched
    const std::size_t n = x.size();
    std::vector<double> v1(n), d1(n), v2(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = (x[i] - a) * (b - x[i]) / (half * half);
        const double ds = (a + b - 2.0 * x[i]) / (half * half);
        const double u = (x[i] - mid) / half;
        const double B1 = s * s;
        const double dB1 = 2.0 * s * ds;
        const double B2 = B1 * u;
        const double dB2 = dB1 * u + B1 / half;
        v1[i] = q[i] * B1;
        d1[i] = dq[i] * B1 + q[i] * dB1;
        v2[i] = q[i] * B2;
        d2[i] = dq[i] * B2 + q[i] * dB2;
    }
    // the Hermite interpolant is linear in its data, so one solve is exact
    const auto base = moments(q, dq);
    const auto m1 = moments(v1, d1);
    const auto m2 = moments(v2, d2);
    Eigen::Matrix2d M;
    M << m1.first, m2.first, m1.second, m2.second;
    const Eigen::Vector2d rhs(target_mass - base.first, target_mean - base.second);
    const Eigen::Vector2d c = M.fullPivLu().solve(rhs);
    if (!c.allFinite()) {
        throw Error(ErrorCode::SingularDesign, "core moment correction is singular");
    }
    std::vector<double> v(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double factor = 1.0 + c(0) * (q[i] > 0.0 ? v1[i] / q[i] : 0.0) +
                              c(1) * (q[i] > 0.0 ? v2[i] / q[i] : 0.0);
        if (!(factor > 0.5)) {
            throw Error(ErrorCode::InvalidInput,
                        "moment defects too large to absorb in the core");
        }
        v[i] = q[i] + c(0) * v1[i] + c(1) * v2[i];
        d[i] = dq[i] + c(0) * d1[i] + c(1) * d2[i];
    }
    return GridFunction(x, std::move(v), std::move(d), interp::Extrapolation::Constant);
}

RiskNeutralDensity assemble(const GridFunction& core, const TailFit& tails, double forward,
                            double tau) {
    RiskNeutralDensity q;
    q.K_L = core.front();
    q.K_U = core.back();
    q.tau = tau;
    q.forward = forward;
    q.core = core;
    q.left = tails.left;
    q.right = tails.right;
    if (std::abs(tails.left.K - q.K_L) > 1e-12 * q.K_L ||
        std::abs(tails.right.K - q.K_U) > 1e-12 * q.K_U) {
        throw Error(ErrorCode::PastingMismatch, "tail pasting strikes differ from core range");
    }
    const double jump_l = std::abs(q.left.pdf(q.K_L) - core(q.K_L));
    const double jump_u = std::abs(q.right.pdf(q.K_U) - core(q.K_U));
    if (jump_l > 1e-6 || jump_u > 1e-6) {
        throw Error(ErrorCode::PastingMismatch, "density jump at pasting strike");
    }
    return q;
}

DensityBuild build_density(const std::vector<IvQuote>& quotes_in, double forward, double tau,
                           const DensityOptions& options) {
    if (quotes_in.size() < 5) {
        throw Error(ErrorCode::TooFewQuotes, "need at least 5 quotes");
    }
    auto quotes = quotes_in;
    std::sort(quotes.begin(), quotes.end());
    double k_lo = quotes.front().first;
    const double k_hi = quotes.back().first;
    const auto n = static_cast<std::size_t>(std::max(options.core_points, 3));
    DensityBuild out;
    out.fit = lqr_fit(quotes, math::linspace(k_lo, k_hi, n), options.window_count, forward, tau);
    if (options.shrink_domain) {
        const auto& pts = out.fit.points;
        std::vector<double> qv;
        for (const auto& p : pts) {
            qv.push_back(rnd_from_alpha(p.alpha0, p.alpha1, p.alpha2, p.strike, forward, tau));
        }
        for (std::size_t i = 1; i + 1 < qv.size(); ++i) {
            if (qv[i] < qv[i - 1] && qv[i] <= qv[i + 1]) {
                k_lo = pts[i].strike;
                out.fit = lqr_fit(quotes, math::linspace(k_lo, k_hi, n), options.window_count,
                                  forward, tau);
                break;
            }
        }
    }
    const GridFunction core = core_from_fit(out.fit);
    const auto& first = out.fit.points.front();
    const auto& last = out.fit.points.back();
    PastingData left{first.strike, core(first.strike), core.slopes().front(), first.alpha0,
                     first.alpha1};
    PastingData right{last.strike, core(last.strike), core.slopes().back(), last.alpha0,
                      last.alpha1};
    RiskNeutralDensity probe;
    probe.K_L = core.front();
    probe.K_U = core.back();
    probe.core = core;
    const auto [core_mass, core_mean] = probe.core_moments(probe.K_L, probe.K_U);
    out.tails = fit_tails(left, right, core_mass, core_mean, forward, tau, options.tails);
    if (!options.enforce_moments) {
        out.density = assemble(core, out.tails, forward, tau);
        return out;
    }
    const double tail_mass = out.tails.left.cdf(left.K) + tail_survival(out.tails.right, right.K);
    const double tail_mean =
        out.tails.left.partial_mean(left.K) + tail_upper_mean(out.tails.right, right.K);
    out.density = assemble(close_core_moments(core, 1.0 - tail_mass, forward - tail_mean),
                           out.tails, forward, tau);
    return out;
}

DensityReport density_report(const RiskNeutralDensity& q,
                             const std::vector<std::pair<double, double>>& call_quotes) {
    DensityReport r;
    r.forward = q.forward;
    r.mass = q.mass();
    r.mean = q.mean();
    double lo = std::numeric_limits<double>::infinity();
    for (double v : q.core.values()) lo = std::min(lo, q.scale * v);
    const auto left_grid = math::linspace(std::log(q.K_L) - 8.0, std::log(q.K_L), 400);
    const auto right_grid = math::linspace(std::log(q.K_U), std::log(q.K_U) + 8.0, 400);
    for (double lx : left_grid) lo = std::min(lo, q.pdf(std::exp(lx) * (1.0 - 1e-15)));
    for (double lx : right_grid) lo = std::min(lo, q.pdf(std::exp(lx) * (1.0 + 1e-15)));
    for (double x : math::linspace(q.K_L, q.K_U, 4001)) lo = std::min(lo, q.pdf(x));
    r.min_density = lo;
    for (const auto& [K, C] : call_quotes) {
        r.max_repricing_error = std::max(r.max_repricing_error, std::abs(q.call(K) - C));
    }
    r.nonnegative = r.min_density >= -1e-12;
    r.mass_ok = std::abs(r.mass - 1.0) < 1e-6;
    r.mean_ok = std::abs(r.mean - r.forward) < 1e-4 * r.forward;
    return r;
}

std::vector<CalendarViolation> calendar_check(const std::function<double(double)>& call_early,
                                              const std::function<double(double)>& call_late,
                                              double r, double dT,
                                              const std::vector<double>& K_grid) {
    std::vector<CalendarViolation> out;
    const double g = std::exp(r * dT);
    for (double K : K_grid) {
        const double v = g * call_late(K) - g * g * call_early(K / g);
        if (v < -1e-6) out.push_back({K, v});
    }
    return out;
}

std::vector<CalendarViolation> calendar_check(const MarginalDistribution& early,
                                              const MarginalDistribution& late, double r,
                                              double dT, const std::vector<double>& K_grid) {
    return calendar_check([&](double K) { return early.call(K); },
                          [&](double K) { return late.call(K); }, r, dT, K_grid);
}

std::vector<double> bl_density(const std::vector<std::pair<double, double>>& call_prices, double r,
                               double tau, const std::vector<double>& eval_grid) {
    if (call_prices.size() < 3) {
        throw Error(ErrorCode::TooFewStrikes, "need at least 3 strikes");
    }
    std::vector<double> ks, cs;
    for (const auto& [K, C] : call_prices) {
        if (!ks.empty() && !(K > ks.back())) {
            throw Error(ErrorCode::InvalidInput, "strikes must be ascending");
        }
        ks.push_back(K);
        cs.push_back(C);
    }
    const interp::NaturalCubicSpline spline(ks, cs);
    const double delta = (ks.back() - ks.front()) / static_cast<double>(ks.size() - 1);
    const double growth = std::exp(r * tau);
    std::vector<double> out;
    out.reserve(eval_grid.size());
    for (double K : eval_grid) {
        out.push_back(growth * (spline(K + delta) - 2.0 * spline(K) + spline(K - delta)) /
                      (delta * delta));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Marginal

SplineMarginal::SplineMarginal(std::shared_ptr<const RiskNeutralDensity> q, GridFunction cdf,
                               int smoothness)
    : q_(std::move(q)), cdf_(std::move(cdf)), m_(smoothness) {}

double SplineMarginal::cdf(double x) const {
    if (x <= cdf_.front()) return std::clamp(q_->cdf(x), 0.0, 1.0);
    if (x >= cdf_.back()) {
        // continue from the tabulated end so rounding cannot step the CDF down
        const double tail = q_->cdf(x) - q_->cdf(cdf_.back());
        return std::clamp(cdf_.values().back() + std::max(tail, 0.0), 0.0, 1.0);
    }
    return std::clamp(cdf_(x), 0.0, 1.0);
}

double SplineMarginal::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorCode::InvalidInput, "quantile level must lie in (0, 1)");
    }
    return cdf_.inverse(p);
}

double SplineMarginal::pdf(double x) const { return q_->pdf(x); }
double SplineMarginal::call(double K) const { return q_->call(K); }
double SplineMarginal::mean() const { return q_->mean(); }

std::shared_ptr<const SplineMarginal> to_marginal(const RiskNeutralDensity& q,
                                                  const GridSpec& spec) {
    const double p = spec.tail_probability;
    auto log_root = [&](auto&& f, double a, double b, double fallback) {
        auto r = math::find_root(f, a, b);
        return r ? std::exp(*r) : fallback;
    };
    const double lkl = std::log(q.K_L);
    const double lku = std::log(q.K_U);
    const double x_lo = q.cdf(q.K_L) > p
                            ? log_root([&](double lx) { return q.cdf(std::exp(lx)) - p; },
                                       lkl - 60.0, lkl, 0.5 * q.K_L)
                            : 0.5 * q.K_L;
    const double total = q.mass();
    const double x_hi = total - q.cdf(q.K_U) > p
                            ? log_root([&](double lx) { return total - q.cdf(std::exp(lx)) - p; },
                                       lku, lku + 60.0, 2.0 * q.K_U)
                            : 2.0 * q.K_U;
    const auto logs = math::linspace(std::log(x_lo), std::log(x_hi),
                                     static_cast<std::size_t>(std::max(spec.points, 3)));
    std::vector<double> grid, values;
    grid.reserve(logs.size());
    for (double lx : logs) grid.push_back(std::exp(lx));
    values.reserve(grid.size());
    double acc = q.cdf(grid.front());
    values.push_back(acc);
    auto pdf = [&](double x) { return q.pdf(x); };
    for (std::size_t j = 1; j < grid.size(); ++j) {
        double a = grid[j - 1], b = grid[j];
        double piece = 0.0;
        // split at pasting strikes so each panel sees one smooth piece
        std::vector<double> cuts{a};
        for (double k : {q.K_L, q.K_U}) {
            if (k > a && k < b) cuts.push_back(k);
        }
        cuts.push_back(b);
        for (std::size_t c = 1; c < cuts.size(); ++c) {
            piece += math::adaptive_simpson(pdf, cuts[c - 1], cuts[c], 1e-10 * 1e-3);
        }
        if (piece < -1e-12) {
            throw Error(ErrorCode::NonMonotone, "CDF decreases near x=" + std::to_string(b));
        }
        acc += std::max(piece, 0.0);
        values.push_back(acc);
    }
    // spread the quadrature drift so the table ends on the closed-form tail value
    const double target = q.cdf(grid.back());
    const double span = acc - values.front();
    if (span > 0.0 && target > values.front()) {
        const double stretch = (target - values.front()) / span;
        for (double& v : values) v = values.front() + (v - values.front()) * stretch;
    }
    auto shared = std::make_shared<RiskNeutralDensity>(q);
    return std::make_shared<SplineMarginal>(
        shared, GridFunction(std::move(grid), std::move(values), interp::Extrapolation::Constant),
        spec.smoothness);
}

} // namespace basslv::density
