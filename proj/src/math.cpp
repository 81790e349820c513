#include "basslv/math.hpp"

#include "basslv/error.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace basslv {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateQuote: return "DuplicateQuote";
    case ErrorCode::NoQuotes: return "NoQuotes";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::PriceOutOfBand: return "PriceOutOfBand";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::TooFewQuotes: return "TooFewQuotes";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::InvalidMixture: return "InvalidMixture";
    case ErrorCode::PastingMismatch: return "PastingMismatch";
    case ErrorCode::NonMonotone: return "NonMonotone";
    case ErrorCode::TooFewStrikes: return "TooFewStrikes";
    case ErrorCode::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorCode::InvalidVariance: return "InvalidVariance";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::QuantileOverflow: return "QuantileOverflow";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::TimeOutOfInterval: return "TimeOutOfInterval";
    case ErrorCode::CalendarArbitrage: return "CalendarArbitrage";
    case ErrorCode::AllPricesOutOfBand: return "AllPricesOutOfBand";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

namespace math {

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorCode::InvalidInput, "norm_quantile requires p in (0,1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + step * static_cast<double>(i);
    }
    v.back() = hi;
    return v;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (a == b) {
        return 0.0;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

std::optional<double> find_root(const std::function<double(double)>& f, double lo, double hi,
                                int max_iter) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi)) return std::nullopt;
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) {
        return std::nullopt;
    }
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 3);
    try {
        auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
        return 0.5 * (a + b);
    } catch (const std::domain_error&) {
        // f left the real line inside the bracket
        return std::nullopt;
    } catch (const boost::math::evaluation_error&) {
        return std::nullopt;
    }
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 0.0;
    return fit;
}

} // namespace math
} // namespace basslv
