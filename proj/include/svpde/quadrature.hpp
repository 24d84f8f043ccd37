#pragma once

#include <span>
#include <vector>

namespace svpde {

/// Gauss–Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n_nodes);
    int size() const noexcept { return static_cast<int>(nodes.size()); }

    /// Integral of f over [a, b].
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(mid + half * nodes[i]);
        return half * acc;
    }
};

/// Composite trapezoid rule for samples on a uniform grid with spacing h.
double trapezoid(std::span<const double> samples, double h);

}  // namespace svpde
