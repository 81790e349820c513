#include "basslv/marginal.hpp"

#include "basslv/error.hpp"
#include "basslv/math.hpp"

#include <cmath>

namespace basslv::density {

LognormalMarginal::LognormalMarginal(double spot, double sigma, double maturity, int smoothness)
    : spot_(spot), m_(smoothness) {
    if (!(spot > 0.0) || !(sigma > 0.0) || !(maturity > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "lognormal marginal needs positive inputs");
    }
    s_ = sigma * std::sqrt(maturity);
    mu_ = std::log(spot) - 0.5 * s_ * s_;
}

double LognormalMarginal::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    return math::norm_cdf((std::log(x) - mu_) / s_);
}

double LognormalMarginal::quantile(double p) const {
    return std::exp(mu_ + s_ * math::norm_quantile(p));
}

double LognormalMarginal::pdf(double x) const {
    if (x <= 0.0) return 0.0;
    return math::norm_pdf((std::log(x) - mu_) / s_) / (x * s_);
}

double LognormalMarginal::call(double K) const {
    if (K <= 0.0) return spot_ - K;
    const double d1 = (std::log(spot_ / K) + 0.5 * s_ * s_) / s_;
    return spot_ * math::norm_cdf(d1) - K * math::norm_cdf(d1 - s_);
}

} // namespace basslv::density
