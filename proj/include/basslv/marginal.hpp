#pragma once

#include <memory>

namespace basslv::density {

/// Law of the spot at one maturity: CDF, quantile and call prices.
class MarginalDistribution {
public:
    virtual ~MarginalDistribution() = default;

    virtual double cdf(double x) const = 0;
    /// Inverse CDF on (0, 1).
    virtual double quantile(double p) const = 0;
    virtual double pdf(double x) const = 0;
    /// Undiscounted call value E[(X - K)_+].
    virtual double call(double K) const = 0;
    virtual double mean() const = 0;
    /// Smoothness order m used to size the trapezoid rule.
    virtual int smoothness() const = 0;
};

using MarginalPtr = std::shared_ptr<const MarginalDistribution>;

/// Exact lognormal law with mean S0 and log-variance sigma^2 T.
class LognormalMarginal final : public MarginalDistribution {
public:
    LognormalMarginal(double spot, double sigma, double maturity, int smoothness = 2);

    double cdf(double x) const override;
    double quantile(double p) const override;
    double pdf(double x) const override;
    double call(double K) const override;
    double mean() const override { return spot_; }
    int smoothness() const override { return m_; }

    double log_mean() const { return mu_; }
    double log_sd() const { return s_; }

private:
    double spot_;
    double mu_;
    double s_;
    int m_;
};

} // namespace basslv::density
