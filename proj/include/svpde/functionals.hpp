#pragma once

// Example functionals with exact derivatives.

#include <cmath>
#include <numbers>

#include "svpde/funcalc.hpp"

namespace svpde {

// U(t, eta) = sin(a_1) + a_2^2 / 2 + t a_1 with a_j = \int phi_j(x + T) d^-eta(x),
// phi_1(s) = cos(pi s / T), phi_2(s) = (s/T)^2 (3 - 2 s/T).
inline CylindricalFunctional cylindrical_test_functional(double T) {
    using std::numbers::pi;
    CylindricalFunctional fn;
    fn.integrands.push_back({[T](double s) { return std::cos(pi * s / T); },
                             [T](double s) { return -pi / T * std::sin(pi * s / T); },
                             [T](double s) { return -pi * pi / (T * T) * std::cos(pi * s / T); }});
    fn.integrands.push_back({[T](double s) { return (s / T) * (s / T) * (3.0 - 2.0 * s / T); },
                             [T](double s) { return 6.0 * s / (T * T) * (1.0 - s / T); },
                             [T](double s) { return 6.0 / (T * T) * (1.0 - 2.0 * s / T); }});
    fn.base = [](double t, std::span<const double> a) { return std::sin(a[0]) + 0.5 * a[1] * a[1] + t * a[0]; };
    fn.base_dt = [](double, std::span<const double> a) { return a[0]; };
    fn.base_grad = [](double t, std::span<const double> a, std::span<double> g) {
        g[0] = std::cos(a[0]) + t;
        g[1] = a[1];
    };
    fn.base_hess = [](double, std::span<const double> a, std::span<double> h) {
        h[0] = -std::sin(a[0]);
        h[1] = h[2] = 0.0;
        h[3] = 1.0;
    };
    return fn;
}

// U(t, eta) = eta(0)^2 with exact derivatives.
inline FunctionalSpec present_square() {
    FunctionalSpec U;
    U.U = [](double, const Path& eta) { return eta.present() * eta.present(); };
    U.time_derivative = [](double, const Path&) { return 0.0; };
    U.horizontal = [](double, const Path&) { return 0.0; };
    U.vertical = [](double, const Path& eta) { return 2.0 * eta.present(); };
    U.vertical2 = [](double, const Path&) { return 2.0; };
    return U;
}

// U(t, eta) = eta(0).
inline FunctionalSpec present_value() {
    FunctionalSpec U;
    U.U = [](double, const Path& eta) { return eta.present(); };
    U.time_derivative = [](double, const Path&) { return 0.0; };
    U.horizontal = [](double, const Path&) { return 0.0; };
    U.vertical = [](double, const Path&) { return 1.0; };
    U.vertical2 = [](double, const Path&) { return 0.0; };
    return U;
}

}  // namespace svpde
