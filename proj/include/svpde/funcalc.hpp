#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "svpde/cylindrical.hpp"
#include "svpde/paths.hpp"
#include "svpde/sde.hpp"
#include "svpde/stats.hpp"

namespace svpde {

/// A non-anticipative functional U(t, eta) with optional exact derivatives.
struct FunctionalSpec {
    enum class Smoothness { Cylindrical, Generic };

    std::function<double(double t, const Path& eta)> U;
    Smoothness smoothness = Smoothness::Generic;

    std::function<double(double t, const Path& eta)> time_derivative;
    std::function<double(double t, const Path& eta)> horizontal;
    std::function<double(double t, const Path& eta)> vertical;
    std::function<double(double t, const Path& eta)> vertical2;
    /// Value and all derivatives in one call; preferred over the separate callables when set.
    std::function<FunctionalDerivatives(double t, const Path& eta)> joint;

    bool has_derivatives() const noexcept;
    /// Throws ConfigError when a derivative is missing.
    FunctionalDerivatives evaluate(double t, const Path& eta) const;

    /// Cylindrical functional with closed-form derivatives. Evaluators are built per node layout
    /// on first use.
    static FunctionalSpec cylindrical(CylindricalFunctional fn, double horizon);
};

struct HorizontalDerivative {
    double value = 0.0;
    /// eps is smaller than the node spacing; the shifted path was obtained by interpolation.
    bool below_resolution = false;
};

/// [U(t, eta) - U(t, eta_eps)] / eps with eta_eps(x) = eta(x - eps) for x < 0 (left fill by
/// eta(-T)) and eta_eps(0) = eta(0). With `richardson`, 2 D(eps/2) - D(eps).
HorizontalDerivative horizontal_derivative(const FunctionalSpec& U, double t, const Path& eta, double eps,
                                           bool richardson = false);

/// Central differences bumping only the present node: order 1 or 2.
double vertical_derivative(const FunctionalSpec& U, double t, const Path& eta, double eps, int order);

/// One node spacing.
double default_horizontal_step(const Path& eta);
/// 1e-4 * max(1, sup |eta|).
double default_vertical_step(const Path& eta);

/// The path shifted back by eps with the present held fixed.
Path shift_past(const Path& eta, double eps);

enum class QuadraticVariation {
    Bracket,   // d[X] = rate(t, X_t) dt
    Realized,  // d[X] = (Delta X)^2
};

struct ItoOptions {
    QuadraticVariation qv = QuadraticVariation::Bracket;
    /// d[X]/dt for the bracket mode; empty means Brownian (rate 1).
    std::function<double(double t, double x)> bracket_rate;
    /// Window node count; 0 picks a layout whose spacing is a multiple of the time step, with at
    /// most max_window_nodes nodes.
    int window_nodes = 0;
    int max_window_nodes = 257;
};

struct ItoResidual {
    Estimate mean;                  // over paths
    double max = 0.0;
    std::vector<double> per_path;   // |sum_k residual_k|
    int window_nodes = 0;
};

/// Per path: |sum_k [U(t_{k+1}, X_{k+1}) - U(t_k, X_k) - (d_t U + D^H U) dt - D^V U dX_k
/// - 1/2 D^{VV} U d[X]_k]| along the windows of the simulated paths. Path-parallel.
ItoResidual ito_residual(const FunctionalSpec& U, const PathTrajectories& paths, const ItoOptions& options = {});

/// Layout chosen by ito_residual when options.window_nodes == 0.
int ito_window_nodes(const Grid& grid, double horizon, int max_nodes);

}  // namespace svpde
