#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svpde/approx.hpp"
#include "svpde/bsde.hpp"
#include "svpde/sde.hpp"
#include "svpde/stats.hpp"

namespace svpde {

/// Semilinear parabolic problem on [0, T] x R^d with terminal h.
struct MarkovProblem {
    MarkovSde sde;
    DriverSpec driver;
    VectorFunction terminal;
    double horizon = 1.0;
};

/// Path-dependent problem on windows of length T with terminal H.
struct PathProblem {
    PathSde sde;
    DriverSpec driver;
    PathFunctional terminal;
    /// Optional terminal computed from the prefix eta, the start time t and the bridge-corrected
    /// maximum of the simulated segment. When set it replaces `terminal` inside simulations.
    std::function<double(const Path& eta, double t, double simulated_max)> terminal_from_max;
    double horizon = 1.0;

    /// b = 0, sigma = 1, F = 0, H(eta) = sup eta.
    static PathProblem lookback(double horizon);
};

struct SolverConfig {
    int n_paths = 100000;
    int n_steps = 100;
    std::uint64_t seed = 1;
    RegressionBasisSpec markov_basis;
    RegressionBasisSpec path_basis = RegressionBasisSpec::path_features();
    ZEstimator z_estimator = ZEstimator::Plain;
    /// Window node count for path-dependent coefficients and terminals (0: layout of eta).
    int window_nodes = 0;
    /// Use terminal_from_max with Brownian-bridge maxima when the problem provides it.
    bool bridge_max = true;

    /// Stable text of every field, used for provenance hashes.
    std::string describe() const;
};

/// u(t, x) = Y_t^{t,x}. At t == T the terminal is returned without simulation. `samples`
/// receives the per-path realised values behind the estimate.
Estimate evaluate_markov(const MarkovProblem& problem, double t, std::span<const double> x, const SolverConfig& config,
                         std::vector<double>* samples = nullptr);

/// U(t, eta) = Y_t^{t,eta}; eta must have horizon T.
Estimate evaluate_ppde(const PathProblem& problem, double t, const Path& eta, const SolverConfig& config,
                       std::vector<double>* samples = nullptr);

/// sup of eta over [-s, 0] (piecewise-linear path, s in [0, T]).
double past_sup(const Path& eta, double s);

/// E[max(sup_{[-t,0]} eta, eta(0) + sup_{[0, T-t]} W)] in closed form.
double lookback_oracle(double t, const Path& eta, double horizon);

// ---------------------------------------------------------------------------------------------
// Approximating sequences

/// Coefficients replaced by their mollification phi_n * g in the state variable.
struct MollifyMask {
    bool drift = false;
    bool diffusion = false;
    bool driver = false;
    bool terminal = true;
};

MarkovProblem mollified_problem(const MarkovProblem& problem, int index, const MollifyMask& mask = {},
                                int quadrature_nodes = 32);

/// Terminal replaced by its smoothing H_n; the bridge-max terminal is dropped.
PathProblem smoothed_problem(const PathProblem& problem, int index, int n_nodes,
                             TerminalForm form = TerminalForm::Auto);

struct MarkovProbe {
    double t = 0.0;
    std::vector<double> x;
};

struct PathProbe {
    double t = 0.0;
    Path eta;
};

struct Schedule {
    std::vector<int> indices{4, 8, 16, 32};
    SolverConfig config;
};

struct ProbeSeries {
    std::vector<int> indices;
    std::vector<Estimate> values;
    /// |u_{n_{j+1}} - u_{n_j}| with the paired standard error (common random numbers).
    std::vector<Estimate> gaps;
    bool cauchy_decreasing = false;
    bool monotone = false;
    /// Gaps stopped decreasing while more than 3 standard errors away from zero.
    bool stalled = false;
};

struct Provenance {
    std::vector<int> indices;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

struct PipelineReport {
    std::vector<ProbeSeries> probes;
    bool converged = true;
    Provenance provenance;
};

struct MarkovPipelineResult {
    PipelineReport report;
    /// u_n for the last index of the schedule.
    std::function<Estimate(double t, std::span<const double> x)> field;
};

struct PathPipelineResult {
    PipelineReport report;
    std::function<Estimate(double t, const Path& eta)> field;
};

/// Solves the approximating problems for every index of the schedule on common random numbers
/// and reports the per-probe sequences.
MarkovPipelineResult strong_viscosity_pipeline(const MarkovProblem& problem, std::span<const MarkovProbe> probes,
                                               const Schedule& schedule, const MollifyMask& mask = {});
PathPipelineResult strong_viscosity_pipeline(const PathProblem& problem, std::span<const PathProbe> probes,
                                             const Schedule& schedule, int n_nodes = 0);

ProbeSeries probe_series(std::span<const int> indices, const std::vector<std::vector<double>>& samples);

// ---------------------------------------------------------------------------------------------
// Comparison

struct ComparisonOutcome {
    ComparisonReport ordering;
    double tolerance = 0.0;
    /// Fraction of steps whose path-averaged K increment has the expected sign: >= 0 for the
    /// supersolution, <= 0 for the subsolution.
    double super_sign_fraction = 0.0;
    double sub_sign_fraction = 0.0;
    /// The same count over individual (path, step) increments.
    double super_pathwise_fraction = 0.0;
    double sub_pathwise_fraction = 0.0;
    Estimate base;

    bool passed(double max_violation = 1e-3, double min_sign = 0.999) const noexcept {
        return ordering.violation_fraction <= max_violation && super_sign_fraction >= min_sign &&
               sub_sign_fraction >= min_sign;
    }
};

/// Solves the problem from x0, builds Y +- slack (T - s) and checks ordering and the sign of the
/// K increments. `reversed` swaps the tilts (negative control).
ComparisonOutcome comparison_experiment(const MarkovProblem& problem, std::span<const double> x0, double slack,
                                        const SolverConfig& config, bool reversed = false);

}  // namespace svpde
