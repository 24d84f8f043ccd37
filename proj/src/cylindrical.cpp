#include "svpde/cylindrical.hpp"

#include "svpde/error.hpp"

namespace svpde {

CylindricalEvaluator::CylindricalEvaluator(CylindricalFunctional functional, double horizon, int n_nodes)
    : fn_(std::move(functional)), horizon_(horizon), n_nodes_(n_nodes) {
    if (!fn_.base) throw ConfigError("CylindricalFunctional: base function missing");
    const double T = horizon;
    const double h = T / (n_nodes - 1);
    for (const auto& phi : fn_.integrands) {
        if (!phi.f || !phi.df) throw ConfigError("CylindricalFunctional: integrand needs f and df");
        const Integrand psi{[&phi, T](double x) { return phi.f(x + T); },
                            [&phi, T](double x) { return phi.df(x + T); }};
        weights_.push_back(forward_integral_weights(psi, T, n_nodes));
        std::vector<double> w2(n_nodes, 0.0);
        if (phi.d2f) {
            for (int k = 0; k < n_nodes; ++k) {
                const double x = k == n_nodes - 1 ? 0.0 : -T + k * h;
                w2[k] = ((k == 0 || k == n_nodes - 1) ? 0.5 : 1.0) * h * phi.d2f(x + T);
            }
        }
        d2_weights_.push_back(std::move(w2));
        phi_T_.push_back(phi.f(T));
        dphi_T_.push_back(phi.df(T));
        dphi_0_.push_back(phi.df(0.0));
    }
}

bool CylindricalEvaluator::matches(const Path& eta) const noexcept {
    return eta.size() == n_nodes_ && eta.horizon() == horizon_;
}

void CylindricalEvaluator::coordinates(const Path& eta, std::span<double> a) const {
    if (!matches(eta)) throw ShapeError("CylindricalEvaluator: path layout mismatch");
    for (std::size_t j = 0; j < weights_.size(); ++j) a[j] = dot(weights_[j], eta.values());
}

double CylindricalEvaluator::value(double t, const Path& eta) const {
    std::vector<double> a(weights_.size());
    coordinates(eta, a);
    return fn_.base(t, a);
}

FunctionalDerivatives CylindricalEvaluator::derivatives(double t, const Path& eta) const {
    if (!fn_.base_dt || !fn_.base_grad || !fn_.base_hess)
        throw ConfigError("CylindricalFunctional: derivative callables missing");
    const std::size_t N = weights_.size();
    thread_local std::vector<double> a, grad, hess;
    a.assign(N, 0.0);
    grad.assign(N, 0.0);
    hess.assign(N * N, 0.0);
    coordinates(eta, a);
    fn_.base_grad(t, a, grad);
    fn_.base_hess(t, a, hess);

    FunctionalDerivatives d;
    d.value = fn_.base(t, a);
    d.dt = fn_.base_dt(t, a);
    for (std::size_t j = 0; j < N; ++j) {
        const double dh_a = -dphi_T_[j] * eta.present() + dphi_0_[j] * eta.oldest() + dot(d2_weights_[j], eta.values());
        d.dh += grad[j] * dh_a;
        d.dv += grad[j] * phi_T_[j];
        for (std::size_t l = 0; l < N; ++l) d.dvv += hess[j * N + l] * phi_T_[j] * phi_T_[l];
    }
    return d;
}

}  // namespace svpde
