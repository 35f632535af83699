#pragma once

// Adaptive Gauss-Kronrod quadrature wrappers.

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

template <class F>
double integrate(F&& f, double lo, double hi) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
}

/// Non-adaptive 61-point Gauss-Kronrod rule on equal panels, for smooth
/// oscillatory integrands whose integral may be close to zero.
template <class F>
double integrate_panels(F&& f, double lo, double hi, int panels) {
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + (hi - lo) * p / panels, b = lo + (hi - lo) * (p + 1) / panels;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 0);
    }
    return total;
}

/// E[exp(i u Y)] for Y ~ N(mean, var), by quadrature over +-12 standard deviations.
inline std::complex<double> gaussian_cf(double u, double mean, double var) {
    const double sd = std::sqrt(var);
    auto pdf = [&](double y) {
        const double z = (y - mean) / sd;
        return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    };
    // Split into unit-sd panels so the oscillatory integrand is resolved.
    double re = 0.0, im = 0.0;
    for (int k = -12; k < 12; ++k) {
        const double lo = mean + k * sd, hi = lo + sd;
        re += integrate([&](double y) { return std::cos(u * y) * pdf(y); }, lo, hi);
        im += integrate([&](double y) { return std::sin(u * y) * pdf(y); }, lo, hi);
    }
    return {re, im};
}

}  // namespace oracle
