#pragma once

// Reference computations kept independent of the library: closed forms and
// brute-force quadrature written from scratch.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Black-Scholes call written out directly.
inline double bs_call(double S, double K, double r, double tau, double sigma) {
    const double sd = sigma * std::sqrt(tau);
    const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * tau) / sd;
    return S * Phi(d1) - K * std::exp(-r * tau) * Phi(d1 - sd);
}

// Density of S0 exp(-s^2/2 + s Z), s = sigma sqrt(T).
inline double lognormal_pdf(double x, double S0, double sigma, double T) {
    const double s = sigma * std::sqrt(T);
    const double z = (std::log(x / S0) + 0.5 * s * s) / s;
    return phi(z) / (x * s);
}

// E[(X - K)_+] for the lognormal above, by quadrature in the Gaussian variable.
inline double lognormal_call_quadrature(double K, double S0, double sigma, double T) {
    const double s = sigma * std::sqrt(T);
    return simpson(
        [&](double z) { return std::max(S0 * std::exp(-0.5 * s * s + s * z) - K, 0.0) * phi(z); },
        -12.0, 12.0, 200000);
}

// E[Z^k], Z ~ N(0, t).
inline double gaussian_moment(int k, double t) {
    if (k % 2) return 0.0;
    double m = 1.0;
    for (int j = k - 1; j > 0; j -= 2) m *= j;
    return m * std::pow(t, k / 2);
}

// Probabilists' Hermite polynomial from its explicit sum.
inline double hermite_he(int n, double x) {
    double s = 0.0;
    for (int m = 0; 2 * m <= n; ++m) {
        const double c = std::tgamma(n + 1.0) /
                         (std::tgamma(m + 1.0) * std::tgamma(n - 2.0 * m + 1.0) * std::pow(2.0, m));
        s += (m % 2 ? -1.0 : 1.0) * c * std::pow(x, n - 2 * m);
    }
    return s;
}

// Heston-like SSVI implied vol coded from the total-variance formula.
inline double ssvi_vol(double K, double t, double S0 = 100.0, double rho = 0.3) {
    const double lam = (1.0 + std::abs(rho)) / 4.0 + 1.0;
    const double theta = 0.4 * t;
    const double lt = lam * theta;
    const double ph = (1.0 - (1.0 - std::exp(-lt)) / lt) / lt;
    const double k = std::log(K / S0);
    const double w = 0.5 * theta *
                     (1.0 + rho * ph * k + std::sqrt((ph * k + rho) * (ph * k + rho) + 1.0 - rho * rho));
    return std::sqrt(w / t);
}

// Density as the second strike derivative of the Black-Scholes call on the SSVI smile.
inline double ssvi_density_fd(double K, double t, double h = 1e-3) {
    auto c = [&](double k) { return bs_call(100.0, k, 0.0, t, ssvi_vol(k, t)); };
    return (c(K + h) - 2.0 * c(K) + c(K - h)) / (h * h);
}

inline std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
    return out;
}

} // namespace oracle
