#include "svpde/funcalc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>

#include "svpde/error.hpp"

namespace svpde {

bool FunctionalSpec::has_derivatives() const noexcept {
    return static_cast<bool>(joint) || (U && time_derivative && horizontal && vertical && vertical2);
}

FunctionalDerivatives FunctionalSpec::evaluate(double t, const Path& eta) const {
    if (joint) return joint(t, eta);
    if (!has_derivatives()) throw ConfigError("FunctionalSpec: derivative callables missing");
    return {U(t, eta), time_derivative(t, eta), horizontal(t, eta), vertical(t, eta), vertical2(t, eta)};
}

namespace {

class EvaluatorCache {
public:
    EvaluatorCache(CylindricalFunctional fn, double horizon) : fn_(std::move(fn)), horizon_(horizon) {}

    std::shared_ptr<const CylindricalEvaluator> get(const Path& eta) {
        if (eta.horizon() != horizon_) throw ShapeError("cylindrical functional: path horizon differs");
        std::lock_guard lock(mutex_);
        auto& slot = by_nodes_[eta.size()];
        if (!slot) slot = std::make_shared<const CylindricalEvaluator>(fn_, horizon_, eta.size());
        return slot;
    }

private:
    CylindricalFunctional fn_;
    double horizon_;
    std::mutex mutex_;
    std::map<int, std::shared_ptr<const CylindricalEvaluator>> by_nodes_;
};

}  // namespace

FunctionalSpec FunctionalSpec::cylindrical(CylindricalFunctional fn, double horizon) {
    const bool with_derivatives = fn.base_dt && fn.base_grad && fn.base_hess;
    auto cache = std::make_shared<EvaluatorCache>(std::move(fn), horizon);
    FunctionalSpec spec;
    spec.smoothness = Smoothness::Cylindrical;
    spec.U = [cache](double t, const Path& eta) { return cache->get(eta)->value(t, eta); };
    if (with_derivatives) {
        spec.joint = [cache](double t, const Path& eta) { return cache->get(eta)->derivatives(t, eta); };
        spec.time_derivative = [cache](double t, const Path& eta) { return cache->get(eta)->derivatives(t, eta).dt; };
        spec.horizontal = [cache](double t, const Path& eta) { return cache->get(eta)->derivatives(t, eta).dh; };
        spec.vertical = [cache](double t, const Path& eta) { return cache->get(eta)->derivatives(t, eta).dv; };
        spec.vertical2 = [cache](double t, const Path& eta) { return cache->get(eta)->derivatives(t, eta).dvv; };
    }
    return spec;
}

Path shift_past(const Path& eta, double eps) {
    std::vector<double> v(static_cast<std::size_t>(eta.size()));
    for (int k = 0; k + 1 < eta.size(); ++k) v[k] = eta(eta.node(k) - eps);
    v.back() = eta.present();
    return Path(eta.horizon(), std::move(v));
}

double default_horizontal_step(const Path& eta) { return eta.spacing(); }

double default_vertical_step(const Path& eta) { return 1e-4 * std::max(1.0, sup_norm(eta)); }

HorizontalDerivative horizontal_derivative(const FunctionalSpec& U, double t, const Path& eta, double eps,
                                           bool richardson) {
    if (!U.U) throw ConfigError("horizontal_derivative: functional missing");
    if (!(eps > 0.0)) throw DomainError("horizontal_derivative: eps must be positive");
    const double base = U.U(t, eta);
    auto quotient = [&](double e) { return (base - U.U(t, shift_past(eta, e))) / e; };
    HorizontalDerivative out;
    out.below_resolution = eps < eta.spacing() * (1.0 - 1e-12);
    out.value = richardson ? 2.0 * quotient(0.5 * eps) - quotient(eps) : quotient(eps);
    return out;
}

double vertical_derivative(const FunctionalSpec& U, double t, const Path& eta, double eps, int order) {
    if (!U.U) throw ConfigError("vertical_derivative: functional missing");
    if (!(eps > 0.0)) throw DomainError("vertical_derivative: eps must be positive");
    if (order != 1 && order != 2) throw ConfigError("vertical_derivative: order must be 1 or 2");
    Path up = eta, down = eta;
    up.mutable_values().back() += eps;
    down.mutable_values().back() -= eps;
    const double fu = U.U(t, up), fd = U.U(t, down);
    if (order == 1) return (fu - fd) / (2.0 * eps);
    return (fu - 2.0 * U.U(t, eta) + fd) / (eps * eps);
}

int ito_window_nodes(const Grid& grid, double horizon, int max_nodes) {
    if (max_nodes < 2) throw ConfigError("ito_residual: max_window_nodes must be at least 2");
    const double ratio = horizon / grid.dt;
    const long steps = std::lround(ratio);
    if (steps < 1 || std::abs(ratio - steps) > 1e-9 * ratio) return max_nodes;
    long stride = (steps + max_nodes - 2) / (max_nodes - 1);
    while (steps % stride != 0) ++stride;
    return static_cast<int>(steps / stride) + 1;
}

ItoResidual ito_residual(const FunctionalSpec& U, const PathTrajectories& paths, const ItoOptions& options) {
    if (!U.has_derivatives()) throw ConfigError("ito_residual: functional has no derivative callables");
    const Grid& grid = paths.grid;
    const double horizon = paths.prefix.horizon();
    const int nodes = options.window_nodes > 0 ? options.window_nodes
                                               : ito_window_nodes(grid, horizon, options.max_window_nodes);
    if (nodes < 2) throw ConfigError("ito_residual: windows need at least two nodes");

    // when node spacing is a whole number of steps, windows are plain gathers of grid values
    const double ratio = horizon / (nodes - 1) / grid.dt;
    const long stride = std::lround(ratio);
    const bool aligned = stride >= 1 && std::abs(ratio - stride) <= 1e-9 * ratio;
    std::vector<double> history;  // prefix at offsets -reach..-1 steps
    const long reach = aligned ? static_cast<long>(nodes - 1) * stride : 0;
    if (aligned) {
        history.resize(static_cast<std::size_t>(reach));
        for (long j = -reach; j < 0; ++j) history[j + reach] = paths.prefix(static_cast<double>(j) * grid.dt);
    }
    auto fill = [&](std::span<const double> body, int step, std::span<double> out) {
        if (!aligned) {
            fill_window(paths.prefix, body, grid, step, out);
            return;
        }
        for (int i = 0; i < nodes; ++i) {
            const long j = step - static_cast<long>(nodes - 1 - i) * stride;
            out[i] = j >= 0 ? body[j] : history[j + reach];
        }
    };

    ItoResidual out;
    out.window_nodes = nodes;
    out.per_path.assign(static_cast<std::size_t>(paths.n_paths), 0.0);
    int failed = std::numeric_limits<int>::max();
    std::exception_ptr error;

#pragma omp parallel for schedule(static)
    for (int p = 0; p < paths.n_paths; ++p) {
        try {
            const std::vector<double> body = paths.body(p);
            Path win = Path::constant(horizon, nodes, 0.0);
            fill(body, 0, win.mutable_values());
            FunctionalDerivatives d = U.evaluate(grid.time(0), win);
            double acc = 0.0;
            for (int k = 0; k < grid.n_steps; ++k) {
                fill(body, k + 1, win.mutable_values());
                const FunctionalDerivatives next = U.evaluate(grid.time(k + 1), win);
                const double dx = body[k + 1] - body[k];
                double qv;
                if (options.qv == QuadraticVariation::Realized) {
                    qv = dx * dx;
                } else {
                    qv = (options.bracket_rate ? options.bracket_rate(grid.time(k), body[k]) : 1.0) * grid.dt;
                }
                acc += (next.value - d.value) - ((d.dt + d.dh) * grid.dt + d.dv * dx + 0.5 * d.dvv * qv);
                d = next;
            }
            out.per_path[p] = std::abs(acc);
        } catch (...) {
#pragma omp critical(svpde_ito_failure)
            if (p < failed) {
                failed = p;
                error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);

    out.mean = mean_and_se(out.per_path);
    if (!out.per_path.empty()) out.max = *std::max_element(out.per_path.begin(), out.per_path.end());
    return out;
}

}  // namespace svpde
