#pragma once

#include <cstddef>
#include <vector>

namespace basslv::interp {

/// How a grid function is continued beyond its end nodes.
enum class Extrapolation {
    Constant, // CDF-like: hold the end value
    Linear,   // map-like: continue with the end slope
};

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
/// slopes). Monotone data gives a monotone interpolant.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(std::vector<double> grid, std::vector<double> values,
                 Extrapolation extrap = Extrapolation::Constant);
    /// Hermite interpolant with caller-supplied node derivatives.
    GridFunction(std::vector<double> grid, std::vector<double> values, std::vector<double> slopes,
                 Extrapolation extrap);

    double operator()(double x) const;
    double derivative(double x) const;

    /// Solves f(x) = y for a non-decreasing interpolant. The result is clamped
    /// to the grid range when y lies outside the node values.
    double inverse(double y) const;

    const std::vector<double>& grid() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& slopes() const { return d_; }
    Extrapolation extrapolation() const { return extrap_; }
    std::size_t size() const { return x_.size(); }
    bool empty() const { return x_.empty(); }
    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    void validate_and_index();
    std::size_t segment(double x) const;
    double eval_segment(std::size_t i, double x) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> d_;
    Extrapolation extrap_ = Extrapolation::Constant;
    bool uniform_ = false;
    double inv_step_ = 0.0;
};

/// Fritsch-Carlson derivative estimates for shape-preserving interpolation.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y);

/// Natural cubic spline through (x, y).
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_; // second derivatives at nodes
};

} // namespace basslv::interp
