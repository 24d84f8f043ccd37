#include "svpde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "svpde/error.hpp"
#include "svpde/hash.hpp"

namespace svpde {

namespace {

bool at_horizon(double t, double T) { return std::abs(t - T) <= 1e-12 * std::max(1.0, std::abs(T)); }

void check_time(double t, double T, const char* who) {
    if (!(t >= 0.0) || (t > T && !at_horizon(t, T)))
        throw DomainError(std::string(who) + ": time " + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
}

void check_config(const SolverConfig& c) {
    if (c.n_paths < 1 || c.n_steps < 1) throw ConfigError("solver: n_paths and n_steps must be positive");
    if (c.window_nodes < 0 || c.window_nodes == 1) throw ConfigError("solver: window_nodes must be 0 or at least 2");
}

void describe_basis(std::ostream& os, const RegressionBasisSpec& b) {
    os << "kind=" << static_cast<int>(b.kind) << ";degree=" << b.degree << ";max=" << b.running_max
       << ";integral=" << b.running_integral << ";fourier=" << b.fourier_pairs << ";feature_nodes=" << b.feature_nodes
       << ";ridge=" << b.least_squares.ridge << ";subsample=" << b.least_squares.subsample;
}

}  // namespace

std::string SolverConfig::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "paths=" << n_paths << ";steps=" << n_steps << ";seed=" << seed << ";markov_basis{";
    describe_basis(os, markov_basis);
    os << "};path_basis{";
    describe_basis(os, path_basis);
    os << "};z=" << static_cast<int>(z_estimator) << ";window_nodes=" << window_nodes << ";bridge_max=" << bridge_max;
    return os.str();
}

PathProblem PathProblem::lookback(double horizon) {
    PathProblem p;
    p.sde = {PathCoefficient::constant(0.0), PathCoefficient::constant(1.0), {1.0, 1.0}};
    p.terminal = [](const Path& eta) { return *std::max_element(eta.values().begin(), eta.values().end()); };
    p.terminal_from_max = [](const Path& eta, double t, double m) { return std::max(past_sup(eta, t), m); };
    p.horizon = horizon;
    return p;
}

Estimate evaluate_markov(const MarkovProblem& problem, double t, std::span<const double> x, const SolverConfig& config,
                         std::vector<double>* samples) {
    check_time(t, problem.horizon, "evaluate_markov");
    check_config(config);
    if (static_cast<int>(x.size()) != problem.sde.dim) throw ShapeError("evaluate_markov: state has wrong dimension");
    if (!problem.terminal) throw ConfigError("evaluate_markov: terminal missing");
    if (at_horizon(t, problem.horizon)) {
        const double v = problem.terminal(x);
        if (samples) samples->assign(1, v);
        return {v, 0.0};
    }
    const Grid grid(t, problem.horizon, config.n_steps);
    const NoiseBundle noise(config.n_paths, config.n_steps, problem.sde.dim, grid.dt, config.seed);
    const MarkovPaths paths = euler_markov(problem.sde, x, grid, noise);

    std::vector<double> xi(static_cast<std::size_t>(config.n_paths));
    const int d = problem.sde.dim;
    const auto last = paths.slice(grid.n_steps);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < config.n_paths; ++p)
        xi[p] = problem.terminal(last.subspan(static_cast<std::size_t>(p) * d, static_cast<std::size_t>(d)));

    BsdeOptions options{config.markov_basis, config.z_estimator, false};
    BsdeSolution sol = solve_bsde(problem.driver, xi, paths, noise, options);
    if (samples) *samples = std::move(sol.realized0);
    return sol.y0;
}

Estimate evaluate_ppde(const PathProblem& problem, double t, const Path& eta, const SolverConfig& config,
                       std::vector<double>* samples) {
    check_time(t, problem.horizon, "evaluate_ppde");
    check_config(config);
    if (std::abs(eta.horizon() - problem.horizon) > 1e-12 * problem.horizon)
        throw ShapeError("evaluate_ppde: path horizon differs from the problem horizon");
    if (!problem.terminal) throw ConfigError("evaluate_ppde: terminal missing");
    if (at_horizon(t, problem.horizon)) {
        const double v = problem.terminal(eta);
        if (samples) samples->assign(1, v);
        return {v, 0.0};
    }
    const Grid grid(t, problem.horizon, config.n_steps);
    const NoiseBundle noise(config.n_paths, config.n_steps, 1, grid.dt, config.seed);
    const bool use_max = config.bridge_max && static_cast<bool>(problem.terminal_from_max);
    EulerOptions euler;
    euler.track_max = use_max;
    euler.window_nodes = config.window_nodes;
    const PathTrajectories paths = euler_path_dependent(problem.sde, eta, grid, noise, euler);

    const int nodes = config.window_nodes > 0 ? config.window_nodes : eta.size();
    const int N = grid.n_steps;
    std::vector<double> xi(static_cast<std::size_t>(config.n_paths));
#pragma omp parallel for schedule(static)
    for (int p = 0; p < config.n_paths; ++p) {
        if (use_max) {
            xi[p] = problem.terminal_from_max(eta, t, paths.running_max[static_cast<std::size_t>(N) * config.n_paths + p]);
        } else {
            xi[p] = problem.terminal(paths.window(p, N, nodes));
        }
    }

    BsdeOptions options{config.path_basis, config.z_estimator, false};
    BsdeSolution sol = solve_bsde(problem.driver, xi, paths, noise, options);
    if (samples) *samples = std::move(sol.realized0);
    return sol.y0;
}

double past_sup(const Path& eta, double s) {
    if (s < 0.0 || s > eta.horizon() * (1.0 + 1e-12)) throw DomainError("past_sup: window outside [-T, 0]");
    double m = eta(-s);
    for (int k = 0; k < eta.size(); ++k)
        if (eta.node(k) >= -s) m = std::max(m, eta[k]);
    return m;
}

double lookback_oracle(double t, const Path& eta, double horizon) {
    check_time(t, horizon, "lookback_oracle");
    if (std::abs(eta.horizon() - horizon) > 1e-12 * horizon)
        throw ShapeError("lookback_oracle: path horizon differs from the problem horizon");
    const double tau = horizon - t;
    if (at_horizon(t, horizon)) return past_sup(eta, horizon);
    const double m = std::max(0.0, past_sup(eta, t) - eta.present());
    const double sq = std::sqrt(tau);
    const double cdf = 0.5 * std::erfc(-m / sq / std::numbers::sqrt2);
    return eta.present() + m * (2.0 * cdf - 1.0) + std::sqrt(2.0 * tau / std::numbers::pi) * std::exp(-m * m / (2.0 * tau));
}

// ---------------------------------------------------------------------------------------------

MarkovProblem mollified_problem(const MarkovProblem& problem, int index, const MollifyMask& mask, int quadrature_nodes) {
    const int d = problem.sde.dim;
    auto moll = std::make_shared<const Mollifier>(d, index, quadrature_nodes);
    MarkovProblem out = problem;
    if (mask.drift) {
        auto b = problem.sde.drift;
        out.sde.drift = [b, moll, d](double t, std::span<const double> x, std::span<double> res) {
            std::vector<double> buf(d);
            for (int i = 0; i < d; ++i)
                res[i] = moll->apply([&](std::span<const double> y) { b(t, y, buf); return buf[i]; }, x);
        };
    }
    if (mask.diffusion) {
        auto s = problem.sde.diffusion;
        out.sde.diffusion = [s, moll, d](double t, std::span<const double> x, std::span<double> res) {
            std::vector<double> buf(static_cast<std::size_t>(d) * d);
            for (int i = 0; i < d * d; ++i)
                res[i] = moll->apply([&](std::span<const double> y) { s(t, y, buf); return buf[i]; }, x);
        };
    }
    if (mask.driver && problem.driver.f) {
        auto f = problem.driver.f;
        out.driver.f = [f, moll](double t, std::span<const double> x, double y, std::span<const double> z) {
            return moll->apply([&](std::span<const double> w) { return f(t, w, y, z); }, x);
        };
    }
    if (mask.terminal) {
        auto h = problem.terminal;
        out.terminal = [h, moll](std::span<const double> x) { return moll->apply(h, x); };
    }
    return out;
}

PathProblem smoothed_problem(const PathProblem& problem, int index, int n_nodes, TerminalForm form) {
    auto smoothed = std::make_shared<const SmoothedTerminal>(problem.terminal, index, problem.horizon, n_nodes, form);
    PathProblem out = problem;
    out.terminal = [smoothed](const Path& eta) { return (*smoothed)(eta); };
    out.terminal_from_max = nullptr;
    return out;
}

ProbeSeries probe_series(std::span<const int> indices, const std::vector<std::vector<double>>& samples) {
    if (indices.size() != samples.size()) throw ShapeError("probe_series: one sample vector per index expected");
    ProbeSeries s;
    s.indices.assign(indices.begin(), indices.end());
    for (const auto& v : samples) s.values.push_back(mean_and_se(v));
    for (std::size_t j = 0; j + 1 < samples.size(); ++j) {
        if (samples[j].size() != samples[j + 1].size()) throw ShapeError("probe_series: rungs differ in sample count");
        std::vector<double> diff(samples[j].size());
        for (std::size_t p = 0; p < diff.size(); ++p) diff[p] = samples[j + 1][p] - samples[j][p];
        const Estimate e = mean_and_se(diff);
        s.gaps.push_back({std::abs(e.value), e.se});
    }
    s.cauchy_decreasing = !s.gaps.empty();
    for (std::size_t j = 0; j + 1 < s.gaps.size(); ++j) {
        if (!(s.gaps[j + 1].value < s.gaps[j].value)) {
            s.cauchy_decreasing = false;
            if (s.gaps[j + 1].value > 3.0 * s.gaps[j + 1].se) s.stalled = true;
        }
    }
    bool up = true, down = true;
    for (std::size_t j = 0; j + 1 < s.values.size(); ++j) {
        up = up && s.values[j + 1].value >= s.values[j].value;
        down = down && s.values[j + 1].value <= s.values[j].value;
    }
    s.monotone = up || down;
    return s;
}

namespace {

Provenance provenance(const Schedule& schedule) {
    std::string text = schedule.config.describe() + ";indices=";
    for (int n : schedule.indices) text += std::to_string(n) + ",";
    return {schedule.indices, schedule.config.seed, fnv1a(text)};
}

void check_schedule(const Schedule& schedule) {
    if (schedule.indices.empty()) throw ConfigError("pipeline: empty schedule");
    for (std::size_t j = 0; j < schedule.indices.size(); ++j) {
        if (schedule.indices[j] < 1) throw ConfigError("pipeline: indices must be positive");
        if (j > 0 && schedule.indices[j] <= schedule.indices[j - 1])
            throw ConfigError("pipeline: indices must be strictly increasing");
    }
}

template <class Probe, class Evaluate>
PipelineReport run_pipeline(std::span<const Probe> probes, const Schedule& schedule, Evaluate&& evaluate) {
    check_schedule(schedule);
    PipelineReport report;
    report.provenance = provenance(schedule);
    std::vector<std::vector<std::vector<double>>> samples(probes.size());
    for (int n : schedule.indices) {
        for (std::size_t i = 0; i < probes.size(); ++i) {
            std::vector<double> s;
            evaluate(n, probes[i], s);
            samples[i].push_back(std::move(s));
        }
    }
    for (std::size_t i = 0; i < probes.size(); ++i) {
        report.probes.push_back(probe_series(schedule.indices, samples[i]));
        if (report.probes.back().stalled) report.converged = false;
    }
    return report;
}

}  // namespace

MarkovPipelineResult strong_viscosity_pipeline(const MarkovProblem& problem, std::span<const MarkovProbe> probes,
                                               const Schedule& schedule, const MollifyMask& mask) {
    MarkovPipelineResult out;
    out.report = run_pipeline(probes, schedule, [&](int n, const MarkovProbe& probe, std::vector<double>& s) {
        evaluate_markov(mollified_problem(problem, n, mask), probe.t, probe.x, schedule.config, &s);
    });
    auto last = std::make_shared<const MarkovProblem>(mollified_problem(problem, schedule.indices.back(), mask));
    const SolverConfig config = schedule.config;
    out.field = [last, config](double t, std::span<const double> x) { return evaluate_markov(*last, t, x, config); };
    return out;
}

PathPipelineResult strong_viscosity_pipeline(const PathProblem& problem, std::span<const PathProbe> probes,
                                             const Schedule& schedule, int n_nodes) {
    int nodes = n_nodes > 0 ? n_nodes : schedule.config.window_nodes;
    if (nodes <= 0) {
        if (probes.empty()) throw ConfigError("pipeline: node layout unknown without probes");
        nodes = probes.front().eta.size();
    }
    SolverConfig config = schedule.config;
    config.window_nodes = nodes;
    Schedule sched{schedule.indices, config};

    PathPipelineResult out;
    out.report = run_pipeline(probes, sched, [&](int n, const PathProbe& probe, std::vector<double>& s) {
        evaluate_ppde(smoothed_problem(problem, n, nodes), probe.t, probe.eta, config, &s);
    });
    auto last = std::make_shared<const PathProblem>(smoothed_problem(problem, schedule.indices.back(), nodes));
    out.field = [last, config](double t, const Path& eta) { return evaluate_ppde(*last, t, eta, config); };
    return out;
}

// ---------------------------------------------------------------------------------------------

ComparisonOutcome comparison_experiment(const MarkovProblem& problem, std::span<const double> x0, double slack,
                                        const SolverConfig& config, bool reversed) {
    check_config(config);
    if (!(slack >= 0.0)) throw DomainError("comparison_experiment: slack must be non-negative");
    if (static_cast<int>(x0.size()) != problem.sde.dim) throw ShapeError("comparison_experiment: state has wrong dimension");
    const double T = problem.horizon;
    const Grid grid(0.0, T, config.n_steps);
    const NoiseBundle noise(config.n_paths, config.n_steps, problem.sde.dim, grid.dt, config.seed);
    const MarkovPaths paths = euler_markov(problem.sde, x0, grid, noise);
    const int d = problem.sde.dim, n = config.n_paths, N = grid.n_steps;
    std::vector<double> xi(static_cast<std::size_t>(n));
    const auto last = paths.slice(N);
    for (int p = 0; p < n; ++p) xi[p] = problem.terminal(last.subspan(static_cast<std::size_t>(p) * d, d));

    const BsdeSolution base = solve_bsde(problem.driver, xi, paths, noise, {config.markov_basis, config.z_estimator, true});
    BsdeSolution super = base, sub = base;
    const double sign = reversed ? -1.0 : 1.0;
    for (int k = 0; k <= N; ++k) {
        const double tilt = sign * slack * (T - grid.time(k));
        for (int p = 0; p < n; ++p) {
            const std::size_t i = static_cast<std::size_t>(k) * n + p;
            super.Y[i] += tilt;
            sub.Y[i] -= tilt;
        }
    }

    ComparisonOutcome out;
    out.base = base.y0;
    out.tolerance = 3.0 * base.y0.se;
    out.ordering = comparison_check(sub, super, out.tolerance);
    const auto k_super = extract_K_residual(super, problem.driver, paths, noise);
    const auto k_sub = extract_K_residual(sub, problem.driver, paths, noise);
    long long up = 0, down = 0, up_steps = 0, down_steps = 0;
    for (int k = 0; k < N; ++k) {
        double mean_super = 0.0, mean_sub = 0.0;
        for (int p = 0; p < n; ++p) {
            const std::size_t i = static_cast<std::size_t>(k) * n + p, j = i + n;
            const double a = k_super[j] - k_super[i], b = k_sub[j] - k_sub[i];
            up += a >= 0.0;
            down += b <= 0.0;
            mean_super += a;
            mean_sub += b;
        }
        up_steps += mean_super >= 0.0;
        down_steps += mean_sub <= 0.0;
    }
    const double total = static_cast<double>(N) * n;
    out.super_pathwise_fraction = up / total;
    out.sub_pathwise_fraction = down / total;
    out.super_sign_fraction = static_cast<double>(up_steps) / N;
    out.sub_sign_fraction = static_cast<double>(down_steps) / N;
    return out;
}

}  // namespace svpde
