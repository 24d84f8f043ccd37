#pragma once

#include <functional>
#include <span>
#include <vector>

#include "svpde/paths.hpp"

namespace svpde {

/// Integrand phi on [0, T] with its first two derivatives.
struct SmoothIntegrand {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;  // only needed for the horizontal derivative
};

/// Values of a functional and of its time, horizontal and vertical derivatives at one point.
struct FunctionalDerivatives {
    double value = 0.0;
    double dt = 0.0;
    double dh = 0.0;
    double dv = 0.0;
    double dvv = 0.0;
};

/// U(t, eta) = u(t, a_1(eta), ..., a_N(eta)) with a_j(eta) = \int phi_j(x + T) d^-eta(x).
struct CylindricalFunctional {
    std::vector<SmoothIntegrand> integrands;
    std::function<double(double t, std::span<const double> a)> base;
    // Optional derivatives of the base, required by CylindricalEvaluator::derivatives.
    std::function<double(double t, std::span<const double> a)> base_dt;
    std::function<void(double t, std::span<const double> a, std::span<double> grad)> base_grad;
    std::function<void(double t, std::span<const double> a, std::span<double> hess)> base_hess;

    int size() const noexcept { return static_cast<int>(integrands.size()); }
};

/// A CylindricalFunctional bound to one node layout: the forward integrals become dot products
/// with precomputed weights.
class CylindricalEvaluator {
public:
    CylindricalEvaluator(CylindricalFunctional functional, double horizon, int n_nodes);

    const CylindricalFunctional& functional() const noexcept { return fn_; }
    bool matches(const Path& eta) const noexcept;

    void coordinates(const Path& eta, std::span<double> a) const;
    double value(double t, const Path& eta) const;
    /// Closed-form derivatives from the chain rule:
    ///   D^V a_j = phi_j(T),
    ///   D^H a_j = -phi_j'(T) eta(0) + phi_j'(0) eta(-T) + \int phi_j''(x+T) eta(x) dx.
    FunctionalDerivatives derivatives(double t, const Path& eta) const;

private:
    CylindricalFunctional fn_;
    double horizon_;
    int n_nodes_;
    std::vector<std::vector<double>> weights_;     // forward-integral weights per integrand
    std::vector<std::vector<double>> d2_weights_;  // trapezoid weights of phi_j''(x+T)
    std::vector<double> phi_T_, dphi_T_, dphi_0_;
};

}  // namespace svpde
