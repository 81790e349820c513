#include "basslv/interp.hpp"

#include "basslv/error.hpp"

#include <algorithm>
#include <cmath>

namespace basslv::interp {

std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) {
        return d;
    }
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // one-sided three-point end slopes, limited to keep shape
    auto end_slope = [](double h0, double h1, double del0, double del1) {
        double s = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if (s * del0 <= 0.0) {
            s = 0.0;
        } else if (del0 * del1 <= 0.0 && std::abs(s) > std::abs(3.0 * del0)) {
            s = 3.0 * del0;
        }
        return s;
    };
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

GridFunction::GridFunction(std::vector<double> grid, std::vector<double> values,
                           Extrapolation extrap)
    : x_(std::move(grid)), y_(std::move(values)), extrap_(extrap) {
    validate_and_index();
    d_ = pchip_slopes(x_, y_);
}

GridFunction::GridFunction(std::vector<double> grid, std::vector<double> values,
                           std::vector<double> slopes, Extrapolation extrap)
    : x_(std::move(grid)), y_(std::move(values)), d_(std::move(slopes)), extrap_(extrap) {
    validate_and_index();
    if (d_.size() != x_.size()) {
        throw Error(ErrorCode::InvalidInput, "slope count must match grid");
    }
}

void GridFunction::validate_and_index() {
    if (x_.size() != y_.size() || x_.size() < 2) {
        throw Error(ErrorCode::InvalidInput, "grid function needs >= 2 matching nodes");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw Error(ErrorCode::InvalidInput, "grid must be strictly ascending");
        }
    }
    const double step = (x_.back() - x_.front()) / static_cast<double>(x_.size() - 1);
    uniform_ = true;
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (std::abs((x_[i] - x_[i - 1]) - step) > 1e-9 * step) {
            uniform_ = false;
            break;
        }
    }
    inv_step_ = 1.0 / step;
}

std::size_t GridFunction::segment(double x) const {
    const std::size_t last = x_.size() - 2;
    if (uniform_) {
        const double pos = (x - x_.front()) * inv_step_;
        if (pos <= 0.0) return 0;
        auto i = static_cast<std::size_t>(pos);
        i = std::min(i, last);
        // guard against rounding at node boundaries
        if (i < last && x >= x_[i + 1]) ++i;
        if (i > 0 && x < x_[i]) --i;
        return i;
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    if (it == x_.begin()) return 0;
    const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, last);
}

double GridFunction::eval_segment(std::size_t i, double x) const {
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double GridFunction::operator()(double x) const {
    if (x <= x_.front()) {
        return extrap_ == Extrapolation::Constant ? y_.front()
                                                  : y_.front() + d_.front() * (x - x_.front());
    }
    if (x >= x_.back()) {
        return extrap_ == Extrapolation::Constant ? y_.back()
                                                  : y_.back() + d_.back() * (x - x_.back());
    }
    return eval_segment(segment(x), x);
}

double GridFunction::derivative(double x) const {
    // the end nodes report their interior slope
    if (x < x_.front()) {
        return extrap_ == Extrapolation::Constant ? 0.0 : d_.front();
    }
    if (x > x_.back()) {
        return extrap_ == Extrapolation::Constant ? 0.0 : d_.back();
    }
    if (x == x_.front()) return d_.front();
    if (x == x_.back()) return d_.back();
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    return ((6.0 * t2 - 6.0 * t) * y_[i] + (6.0 * t - 6.0 * t2) * y_[i + 1]) / h +
           (3.0 * t2 - 4.0 * t + 1.0) * d_[i] + (3.0 * t2 - 2.0 * t) * d_[i + 1];
}

double GridFunction::inverse(double y) const {
    if (y <= y_.front()) {
        if (extrap_ == Extrapolation::Linear && d_.front() > 0.0) {
            return x_.front() + (y - y_.front()) / d_.front();
        }
        return x_.front();
    }
    if (y >= y_.back()) {
        if (extrap_ == Extrapolation::Linear && d_.back() > 0.0) {
            return x_.back() + (y - y_.back()) / d_.back();
        }
        return x_.back();
    }
    auto it = std::upper_bound(y_.begin(), y_.end(), y);
    const auto i = static_cast<std::size_t>(it - y_.begin()) - 1;
    double lo = x_[i];
    double hi = x_[i + 1];
    if (y_[i] == y_[i + 1]) {
        return lo;
    }
    // safeguarded Newton on a monotone cubic segment
    double x = lo + (hi - lo) * (y - y_[i]) / (y_[i + 1] - y_[i]);
    for (int k = 0; k < 100; ++k) {
        const double r = eval_segment(i, x) - y;
        if (r > 0.0) hi = x; else lo = x;
        if (std::abs(r) <= 1e-15 * std::max(1.0, std::abs(y)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) {
            break;
        }
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t;
        const double dy = ((6.0 * t2 - 6.0 * t) * y_[i] + (6.0 * t - 6.0 * t2) * y_[i + 1]) / h +
                          (3.0 * t2 - 4.0 * t + 1.0) * d_[i] + (3.0 * t2 - 2.0 * t) * d_[i + 1];
        double next = dy > 0.0 ? x - r / dy : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        x = next;
    }
    return x;
}

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) {
        throw Error(ErrorCode::InvalidInput, "natural spline needs >= 3 nodes");
    }
    m_.assign(n, 0.0);
    // Thomas algorithm on the interior second derivatives
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), r(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        a[i] = h0 / 6.0;
        b[i] = (h0 + h1) / 3.0;
        c[i] = h1 / 6.0;
        r[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        r[i] -= w * r[i - 1];
    }
    m_[n - 1] = r[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        m_[i] = (r[i] - c[i] * m_[i + 1]) / b[i];
    }
}

double NaturalCubicSpline::operator()(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) {
        const double h = x_[1] - x_[0];
        const double slope = (y_[1] - y_[0]) / h - h * (2.0 * m_[0] + m_[1]) / 6.0;
        return y_[0] + slope * (x - x_[0]);
    }
    if (x >= x_.back()) {
        const double h = x_[n - 1] - x_[n - 2];
        const double slope = (y_[n - 1] - y_[n - 2]) / h + h * (m_[n - 2] + 2.0 * m_[n - 1]) / 6.0;
        return y_[n - 1] + slope * (x - x_[n - 1]);
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - x) / h;
    const double B = (x - x_[i]) / h;
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

} // namespace basslv::interp
