#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "svpde/approx.hpp"
#include "svpde/bsde.hpp"
#include "svpde/funcalc.hpp"
#include "svpde/functionals.hpp"
#include "svpde/quadrature.hpp"
#include "svpde/rng.hpp"
#include "svpde/sde.hpp"
#include "svpde/solver.hpp"
#include "svpde/version.hpp"

namespace svpde::cli {

namespace {

using Row = std::vector<std::string>;

std::string num(double v) { return format_number(v); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

const char* check_name(Check c) {
    switch (c) {
        case Check::Within: return "within";
        case Check::AtMost: return "at_most";
        case Check::AtLeast: return "at_least";
        case Check::Equal: return "equal";
    }
    return "";
}

std::string probe_label(const char* fn, double t, double x) {
    return std::string(fn) + "(t=" + num(t) + ",x=" + num(x) + ")";
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

SolverConfig read_solver(ExperimentConfig& c, int paths, int steps) {
    SolverConfig s;
    s.n_paths = c.integer("solver", "paths", paths, 2);
    s.n_steps = c.integer("solver", "steps", steps);
    s.markov_basis.degree = c.integer("solver", "degree", 2, 0);
    s.z_estimator = c.choice("solver", "z_estimator", "plain", {"plain", "centered"}) == "plain" ? ZEstimator::Plain
                                                                                                 : ZEstimator::Centered;
    s.seed = c.seed();
    return s;
}

MarkovProblem brownian_problem(double horizon, VectorFunction terminal, DriverSpec driver = {}) {
    MarkovProblem p;
    p.sde = MarkovSde::scalar([](double, double) { return 0.0; }, [](double, double) { return 1.0; });
    p.driver = std::move(driver);
    p.terminal = std::move(terminal);
    p.horizon = horizon;
    return p;
}

void check_times(const std::vector<double>& ts, double horizon) {
    for (double t : ts)
        if (t < 0.0 || t > horizon) throw ConfigError("problem.t = " + num(t) + " lies outside [0, " + num(horizon) + "]");
}

// ---- Markovian benchmarks ----------------------------------------------------------------------

struct Closed {
    const char* name;
    MarkovProblem problem;
    std::function<double(double t, double x)> exact;
};

RunSummary markov_closed_form(ExperimentConfig& c, const std::function<Closed(ExperimentConfig&, double)>& make,
                              double default_se_multiple, std::vector<double> default_t,
                              std::vector<double> default_x) {
    const double T = c.positive("problem", "horizon", 1.0);
    const auto bench = make(c, T);
    const auto ts = c.numbers("problem", "t", std::move(default_t));
    const auto xs = c.numbers("problem", "x", std::move(default_x));
    const SolverConfig solver = read_solver(c, 100000, 100);
    const double rel = c.positive("tolerance", "rel", 0.01);
    const double se_multiple = c.number("tolerance", "se_multiple", default_se_multiple);
    c.check_unused();
    check_times(ts, T);

    RunSummary out;
    Table table{c.experiment(), {"t", "x", "value", "se", "exact", "error"}, {}};
    for (double t : ts)
        for (double x : xs) {
            const Estimate e = evaluate_markov(bench.problem, t, std::span(&x, 1), solver);
            const double exact = bench.exact(t, x);
            table.rows.push_back({num(t), num(x), num(e.value), num(e.se), num(exact), num(e.value - exact)});
            out.metrics.push_back(within(probe_label(bench.name, t, x), e.value, e.se, exact,
                                         std::max(rel * std::abs(exact), se_multiple * e.se)));
        }
    out.tables.push_back(std::move(table));
    return out;
}

RunSummary markov_heat(ExperimentConfig& c) {
    return markov_closed_form(
        c,
        [](ExperimentConfig&, double T) {
            return Closed{"u",
                          brownian_problem(T, [](std::span<const double> x) { return x[0] * x[0]; }),
                          [T](double t, double x) { return x * x + (T - t); }};
        },
        0.0, {0.0}, {0.0});
}

RunSummary markov_linear_driver(ExperimentConfig& c) {
    return markov_closed_form(
        c,
        [](ExperimentConfig& cfg, double T) {
            const double a = cfg.number("problem", "a", -0.1);
            return Closed{"u",
                          brownian_problem(T, [](std::span<const double> x) { return x[0]; }, DriverSpec::linear(a)),
                          [T, a](double t, double x) { return x * std::exp(a * (T - t)); }};
        },
        3.0, {0.0, 0.5}, {-1.0, 0.0, 1.0});
}

RunSummary markov_kinked_terminal(ExperimentConfig& c) {
    const double T = c.positive("problem", "horizon", 1.0);
    const double t = c.number("problem", "t", 0.0);
    const double x = c.number("problem", "x", 0.0);
    Schedule schedule;
    schedule.indices = c.integers("schedule", "indices", {4, 8, 16, 32});
    schedule.config = read_solver(c, 100000, 100);
    const double rel = c.positive("tolerance", "rel", 0.02);
    c.check_unused();
    check_times({t}, T);

    const auto problem = brownian_problem(T, [](std::span<const double> v) { return std::abs(v[0]); });
    const MarkovProbe probe{t, {x}};
    const auto result = strong_viscosity_pipeline(problem, std::span(&probe, 1), schedule);
    const ProbeSeries& series = result.report.probes.front();

    // E|x + W_tau|
    const double tau = T - t;
    const double exact = tau > 0.0 ? std::sqrt(tau) * std::sqrt(2.0 / std::numbers::pi) * std::exp(-x * x / (2 * tau)) +
                                         x * (1.0 - 2.0 * normal_cdf(-x / std::sqrt(tau)))
                                   : std::abs(x);

    RunSummary out;
    Table table{c.experiment(), {"t", "x", "n", "value", "se", "gap", "gap_se"}, {}};
    for (std::size_t j = 0; j < series.indices.size(); ++j) {
        Row row{num(t), num(x), std::to_string(series.indices[j]), num(series.values[j].value), num(series.values[j].se)};
        if (j == 0) {
            row.insert(row.end(), {"", ""});
        } else {
            row.push_back(num(series.gaps[j - 1].value));
            row.push_back(num(series.gaps[j - 1].se));
        }
        table.rows.push_back(std::move(row));
    }
    out.metrics.push_back(equal("cauchy_decreasing", series.cauchy_decreasing ? 1.0 : 0.0, 1.0));
    const Estimate& last = series.values.back();
    out.metrics.push_back(within(probe_label("u_final", t, x), last.value, last.se, exact, rel * std::abs(exact)));
    out.tables.push_back(std::move(table));
    return out;
}

// ---- lookback PPDE -------------------------------------------------------------------------------

RunSummary ppde_lookback(ExperimentConfig& c) {
    const double T = c.positive("problem", "horizon", 1.0);
    const double t = c.number("problem", "t", 0.0);
    const std::string shape = c.choice("problem", "path", "zero", {"zero", "sine", "ramp"});
    const double amplitude = c.number("problem", "amplitude", 1.0);
    const int nodes = c.integer("problem", "nodes", 201, 2);
    const int checks = c.integer("problem", "terminal_checks", 10, 0);
    SolverConfig solver = read_solver(c, 200000, 200);
    solver.bridge_max = c.flag("solver", "bridge_max", true);
    const double rel = c.positive("tolerance", "rel", 0.015);
    c.check_unused();
    check_times({t}, T);

    const Path eta = Path::from_function(T, nodes, [&](double s) {
        if (shape == "sine") return amplitude * std::sin(2.0 * std::numbers::pi * s / T);
        if (shape == "ramp") return amplitude * (s + T) / T;
        return 0.0;
    });
    const auto problem = PathProblem::lookback(T);
    const Estimate e = evaluate_ppde(problem, t, eta, solver);
    const double oracle = lookback_oracle(t, eta, T);

    RunSummary out;
    out.tables.push_back({c.experiment(), {"t", "path", "value", "se", "oracle", "error"},
                          {{num(t), shape, num(e.value), num(e.se), num(oracle), num(e.value - oracle)}}});
    out.metrics.push_back(within("U(t=" + num(t) + "," + shape + ")", e.value, e.se, oracle, rel * oracle));

    // U(T, eta) = sup eta on scaled random walks
    const KeyedNormal rng(c.seed() ^ 0x5bd1e995u);
    Table terminal{c.experiment() + "-terminal", {"path_id", "sup", "value"}, {}};
    double worst = 0.0;
    for (int i = 0; i < checks; ++i) {
        std::vector<double> v(nodes);
        double x = 0.0;
        for (int k = 0; k < nodes; ++k) v[k] = (x += rng.normal(i, k, 0, 1) / std::sqrt(nodes));
        const Path walk(T, v);
        const double sup = *std::max_element(v.begin(), v.end());
        const double value = evaluate_ppde(problem, T, walk, solver).value;
        worst = std::max(worst, std::abs(value - sup));
        terminal.rows.push_back({std::to_string(i), num(sup), num(value)});
    }
    if (checks > 0) {
        out.metrics.push_back(equal("terminal_max_error", worst, 0.0));
        out.tables.push_back(std::move(terminal));
    }
    return out;
}

// ---- comparison ---------------------------------------------------------------------------------

RunSummary comparison(ExperimentConfig& c) {
    const double T = c.positive("problem", "horizon", 1.0);
    const double x = c.number("problem", "x", 0.0);
    const double a = c.number("problem", "a", -0.1);
    const double slack = c.number("problem", "slack", 0.5);
    const bool control = c.flag("problem", "negative_control", true);
    const SolverConfig solver = read_solver(c, 100000, 100);
    const double max_violation = c.number("tolerance", "max_violation", 1e-3);
    const double min_sign = c.number("tolerance", "min_sign_fraction", 0.999);
    c.check_unused();

    const auto problem = brownian_problem(T, [](std::span<const double> v) { return v[0]; }, DriverSpec::linear(a));
    RunSummary out;
    Table table{c.experiment(),
                {"variant", "slack", "violation_fraction", "worst_violation", "tolerance", "super_sign_fraction",
                 "sub_sign_fraction", "super_pathwise_fraction", "sub_pathwise_fraction"},
                {}};
    const auto add_row = [&](const char* variant, const ComparisonOutcome& o) {
        table.rows.push_back({variant, num(slack), num(o.ordering.violation_fraction), num(o.ordering.worst_violation),
                              num(o.tolerance), num(o.super_sign_fraction), num(o.sub_sign_fraction),
                              num(o.super_pathwise_fraction), num(o.sub_pathwise_fraction)});
    };
    const auto o = comparison_experiment(problem, std::span(&x, 1), slack, solver);
    add_row("tilted", o);
    out.metrics.push_back(at_most("violation_fraction", o.ordering.violation_fraction, max_violation));
    out.metrics.push_back(at_least("super_sign_fraction", o.super_sign_fraction, min_sign));
    out.metrics.push_back(at_least("sub_sign_fraction", o.sub_sign_fraction, min_sign));
    if (control) {
        const auto r = comparison_experiment(problem, std::span(&x, 1), slack, solver, true);
        add_row("reversed", r);
        out.metrics.push_back(equal("reversed_tilt_rejected", r.passed(max_violation, min_sign) ? 0.0 : 1.0, 1.0));
    }
    out.tables.push_back(std::move(table));
    return out;
}

// ---- SDE convergence ----------------------------------------------------------------------------

RunSummary sde_convergence(ExperimentConfig& c) {
    const double T = c.positive("problem", "horizon", 1.0);
    const double x = c.number("problem", "x", 0.0);
    const double p = c.positive("problem", "power", 2.0);
    const auto indices = c.integers("schedule", "indices", {2, 8, 32});
    const int paths = c.integer("solver", "paths", 2000);
    const int steps = c.integer("solver", "steps", 50);
    c.check_unused();

    const auto b = [](double, double v) { return -2.0 * std::abs(v - 0.1); };
    const auto s = [](double, double v) { return 0.5 + 0.3 * std::abs(v); };
    const PathSde exact{PathCoefficient::lift(b), PathCoefficient::lift(s), {}};
    const Grid grid(0.0, T, steps);
    const NoiseBundle noise(paths, steps, 1, grid.dt, c.seed());
    const Path eta = Path::constant(T, steps + 1, x);

    RunSummary out;
    Table table{c.experiment(), {"n", "sup_error", "se"}, {}};
    std::vector<double> errors;
    for (int n : indices) {
        const Estimate e = coupled_sup_error(mollified_lift(b, s, n), exact, eta, grid, noise, p);
        errors.push_back(e.value);
        table.rows.push_back({std::to_string(n), num(e.value), num(e.se)});
    }
    out.metrics.push_back(equal("sup_error_decreasing", strictly_decreasing(errors) ? 1.0 : 0.0, 1.0));
    const auto same = mollified_lift(b, s, indices.back());
    out.metrics.push_back(equal("identical_spec_error", coupled_sup_error(same, same, eta, grid, noise, p).value, 0.0));
    out.tables.push_back(std::move(table));
    return out;
}

// ---- BSDE limit -----------------------------------------------------------------------------------

RunSummary bsde_limit(ExperimentConfig& c) {
    const double T = c.positive("problem", "horizon", 1.0);
    const double x = c.number("problem", "x", 1.0);
    const double a = c.number("problem", "a", -0.1);
    const double q = c.positive("problem", "q", 1.0);
    const auto indices = c.integers("schedule", "indices", {1, 4, 16, 64});
    const SolverConfig solver = read_solver(c, 20000, 40);
    const int subsample = c.integer("control", "subsample", 2, 2);
    const double floor_multiple = c.positive("tolerance", "floor_multiple", 2.0);
    c.check_unused();

    const Grid grid(0.0, T, solver.n_steps);
    const NoiseBundle noise(solver.n_paths, solver.n_steps, 1, grid.dt, c.seed());
    const auto sde = MarkovSde::scalar([](double, double) { return 0.0; }, [](double, double) { return 1.0; });
    const std::vector<double> x0{x};
    const auto paths = euler_markov(sde, x0, grid, noise);
    const auto last = paths.slice(solver.n_steps);
    const std::vector<double> xi(last.begin(), last.end());

    const auto solve = [&](const DriverSpec& driver, int stride) {
        BsdeOptions options;
        options.basis = solver.markov_basis;
        options.basis.least_squares.subsample = stride;
        options.z_estimator = solver.z_estimator;
        auto sol = solve_bsde(driver, xi, paths, noise, options);
        auto K = extract_K_residual(sol, driver, paths, noise);
        return std::make_pair(std::move(sol), std::move(K));
    };
    const auto limit = solve(DriverSpec::linear(a), 1);
    const auto rows = limit_experiment([&](int n) { return solve(DriverSpec::linear(a, 1.0 / n), 1); }, limit, indices, q);
    // same problem, regression fitted on every subsample-th path: the solver noise floor
    const auto control = solve(DriverSpec::linear(a), subsample);
    const LimitRow floor = limit_row(0, control.first, control.second, limit.first, limit.second, q);

    RunSummary out;
    Table table{c.experiment(),
                {"n", "z_gap_q", "y_gap_sup2", "k_gap_max", "se_z_gap_q", "se_y_gap_sup2", "se_k_gap_max"},
                {}};
    const auto add = [&](std::string label, const LimitRow& r) {
        table.rows.push_back({std::move(label), num(r.z_gap.value), num(r.y_gap.value), num(r.k_gap.value),
                              num(r.z_gap.se), num(r.y_gap.se), num(r.k_gap.se)});
    };
    std::vector<double> z;
    for (const auto& r : rows) {
        add(std::to_string(r.n), r);
        z.push_back(r.z_gap.value);
    }
    add("control", floor);
    out.metrics.push_back(equal("z_gap_strictly_decreasing", strictly_decreasing(z) ? 1.0 : 0.0, 1.0));
    out.metrics.push_back(at_most("z_gap(n=" + std::to_string(rows.back().n) + ")", rows.back().z_gap.value,
                                  floor_multiple * floor.z_gap.value, rows.back().z_gap.se));
    out.tables.push_back(std::move(table));
    return out;
}

// ---- functional Itô residual -----------------------------------------------------------------------

RunSummary ito_residual_sweep(ExperimentConfig& c) {
    const double T = c.positive("problem", "horizon", 1.0);
    const auto functionals =
        c.choices("problem", "functionals", {"present", "quadratic", "cylindrical"}, {"present", "quadratic", "cylindrical"});
    const int nodes = c.integer("problem", "nodes", 101, 2);
    const double drift = c.number("problem", "drift", 0.0);
    const double vol = c.positive("problem", "volatility", 1.0);
    const auto steps = c.integers("solver", "steps", {100, 1000, 10000});
    const int paths = c.integer("solver", "paths", 1000);
    const bool realized = c.choice("solver", "qv", "bracket", {"bracket", "realized"}) == "realized";
    const int max_nodes = c.integer("solver", "max_window_nodes", 257, 2);
    const double min_slope = c.number("tolerance", "min_slope", 0.4);
    c.check_unused();

    const Path eta = Path::from_function(T, nodes, [](double s) { return 0.5 * std::sin(3.0 * s); });
    const PathSde sde{PathCoefficient::constant(drift), PathCoefficient::constant(vol), {}};
    ItoOptions options;
    options.qv = realized ? QuadraticVariation::Realized : QuadraticVariation::Bracket;
    options.bracket_rate = [vol](double, double) { return vol * vol; };
    options.max_window_nodes = max_nodes;

    RunSummary out;
    Table table{c.experiment(), {"functional", "steps", "dt", "window_nodes", "mean", "se", "max"}, {}};
    for (const auto& name : functionals) {
        const FunctionalSpec U = name == "present"     ? present_value()
                                 : name == "quadratic" ? present_square()
                                                       : FunctionalSpec::cylindrical(cylindrical_test_functional(T), T);
        std::vector<double> dts, means;
        double worst = 0.0;
        for (int n : steps) {
            const Grid grid(0.0, T, n);
            const auto sim = euler_path_dependent(sde, eta, grid, NoiseBundle(paths, n, 1, grid.dt, c.seed()));
            const auto r = ito_residual(U, sim, options);
            dts.push_back(grid.dt);
            means.push_back(r.mean.value);
            worst = std::max(worst, r.max);
            table.rows.push_back({name, std::to_string(n), num(grid.dt), std::to_string(r.window_nodes),
                                  num(r.mean.value), num(r.mean.se), num(r.max)});
        }
        if (name == "present")
            out.metrics.push_back(equal("present:max_residual", worst, 0.0));
        else
            out.metrics.push_back(at_least(name + ":slope", steps.size() > 1 ? loglog_slope(dts, means) : NAN, min_slope));
    }
    out.tables.push_back(std::move(table));
    return out;
}

// ---- Fejér sweep -----------------------------------------------------------------------------------

RunSummary fejer_sweep(ExperimentConfig& c) {
    const double T = c.positive("problem", "horizon", 1.0);
    const int smooth_paths = c.integer("corpus", "smooth_paths", 10);
    const int smooth_nodes = c.integer("corpus", "smooth_nodes", 2049, 2);
    const int rough_paths = c.integer("corpus", "rough_paths", 100, 0);
    const int rough_nodes = c.integer("corpus", "rough_nodes", 257, 2);
    const auto orders = c.integers("schedule", "orders", {4, 16, 64, 256});
    const auto contraction_orders = c.integers("schedule", "contraction_orders", {3, 16, 64});
    const int gram_order = c.integer("gram", "order", 20, 0);
    const int gram_nodes = c.integer("gram", "quadrature_nodes", 200);
    const double gram_tol = c.positive("tolerance", "gram", 1e-6);
    const double sup_tol = c.positive("tolerance", "sup_error", 1e-2);
    c.check_unused();

    RunSummary out;
    const FourierBasis gram_basis(T, gram_order);
    const GaussLegendre gl(gram_nodes);
    double gram_err = 0.0;
    for (int i = 0; i <= gram_order; ++i)
        for (int j = 0; j <= gram_order; ++j) {
            const double g = gl.integrate([&](double x) { return gram_basis.e(i, x) * gram_basis.e(j, x); }, -T, 0.0);
            gram_err = std::max(gram_err, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    out.metrics.push_back(at_most("gram_max_error", gram_err, gram_tol));

    const int max_order = std::max(*std::max_element(orders.begin(), orders.end()),
                                   *std::max_element(contraction_orders.begin(), contraction_orders.end()));
    const FourierBasis basis(T, max_order);
    const KeyedNormal rng(c.seed());

    // smooth corpus: a + b sin(d x + c) + c x^2 / 2, a, b, c ~ U[-1, 1], d ~ U[-2, 2]
    std::vector<double> worst(orders.size(), 0.0), total(orders.size(), 0.0);
    for (int i = 0; i < smooth_paths; ++i) {
        const auto u = [&](int k) { return 2.0 * rng.uniform(i, k, 0, 2) - 1.0; };
        const double a = u(0), b = u(1), cc = u(2), d = 2.0 * u(3);
        const Path eta = Path::from_function(T, smooth_nodes, [=](double x) { return a + b * std::sin(d * x + cc) + 0.5 * cc * x * x; });
        for (std::size_t j = 0; j < orders.size(); ++j) {
            const double err = sup_norm(fejer_project(eta, orders[j], basis) - eta);
            worst[j] = std::max(worst[j], err);
            total[j] += err;
        }
    }
    Table table{c.experiment(), {"order", "max_sup_error", "mean_sup_error"}, {}};
    for (std::size_t j = 0; j < orders.size(); ++j)
        table.rows.push_back({std::to_string(orders[j]), num(worst[j]), num(total[j] / std::max(1, smooth_paths))});
    out.metrics.push_back(equal("sup_error_decreasing", strictly_decreasing(worst) ? 1.0 : 0.0, 1.0));
    out.metrics.push_back(at_most("sup_error(n=" + std::to_string(orders.back()) + ")", worst.back(), sup_tol));

    // contraction: |T_n part| <= |eta - Lambda eta| on scaled random walks
    long violations = 0;
    std::vector<FejerOperator> ops;
    for (int n : contraction_orders) ops.emplace_back(basis, n, T, rough_nodes);
    for (int i = 0; i < rough_paths; ++i) {
        std::vector<double> v(rough_nodes);
        double x = 0.0;
        for (int k = 0; k < rough_nodes; ++k) v[k] = (x += rng.normal(i, k, 0, 3) / std::sqrt(rough_nodes));
        const Path eta(T, v);
        const double bound = sup_norm(eta - lambda_op(eta)) * (1.0 + 1e-12);
        for (const auto& op : ops)
            if (sup_norm(op.fejer_part(eta)) > bound) ++violations;
    }
    out.metrics.push_back(equal("contraction_violations", static_cast<double>(violations), 0.0));
    out.tables.push_back(std::move(table));
    return out;
}

using Runner = RunSummary (*)(ExperimentConfig&);

Runner runner(const std::string& name) {
    if (name == "markov-heat") return markov_heat;
    if (name == "markov-linear-driver") return markov_linear_driver;
    if (name == "markov-kinked-terminal") return markov_kinked_terminal;
    if (name == "ppde-lookback") return ppde_lookback;
    if (name == "comparison") return comparison;
    if (name == "sde-convergence") return sde_convergence;
    if (name == "bsde-limit") return bsde_limit;
    if (name == "ito-residual") return ito_residual_sweep;
    if (name == "fejer-sweep") return fejer_sweep;
    throw ConfigError("unknown experiment '" + name + "'");
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

}  // namespace

std::string Metric::describe() const {
    std::string s = "observed " + num(observed);
    if (se > 0.0) s += " (se " + num(se) + ")";
    switch (check) {
        case Check::Within: return s + ", expected " + num(expected) + " +/- " + num(tolerance);
        case Check::AtMost: return s + ", expected <= " + num(expected);
        case Check::AtLeast: return s + ", expected >= " + num(expected);
        case Check::Equal: return s + ", expected exactly " + num(expected);
    }
    return s;
}

Metric within(std::string name, double observed, double se, double expected, double tolerance) {
    return {std::move(name), Check::Within, observed, se, expected, tolerance, std::abs(observed - expected) <= tolerance};
}

Metric at_most(std::string name, double observed, double bound, double se) {
    return {std::move(name), Check::AtMost, observed, se, bound, 0.0, observed <= bound};
}

Metric at_least(std::string name, double observed, double bound, double se) {
    return {std::move(name), Check::AtLeast, observed, se, bound, 0.0, observed >= bound};
}

Metric equal(std::string name, double observed, double expected) {
    return {std::move(name), Check::Equal, observed, 0.0, expected, 0.0, observed == expected};
}

bool RunSummary::passed() const { return failures().empty(); }

std::vector<const Metric*> RunSummary::failures() const {
    std::vector<const Metric*> out;
    for (const auto& m : metrics)
        if (!m.pass) out.push_back(&m);
    return out;
}

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries{
        {"markov-heat", "u(t, x) for h(x) = x^2, b = 0, sigma = 1 against x^2 + (T - t)",
         "Feynman-Kac representation of the heat equation"},
        {"markov-linear-driver", "f(y) = a y, h(x) = x against x exp(a (T - t))",
         "semilinear Feynman-Kac representation"},
        {"markov-kinked-terminal", "mollified |x| terminal over n = 4..32 with Cauchy gaps",
         "strong-viscosity approximating sequence"},
        {"ppde-lookback", "U(t, eta) for H = sup eta with bridge-corrected maxima against the closed form",
         "lookback path-dependent benchmark"},
        {"comparison", "tilted super/sub solutions: ordering and K-increment signs", "comparison principle"},
        {"sde-convergence", "coupled sup-error of mollified coefficients", "stability of path-dependent SDEs"},
        {"bsde-limit", "Z/Y/K gaps for F + 1/n with a split-sample noise-floor row", "BSDE limit theorem"},
        {"ito-residual", "functional Ito residual against dt", "functional Ito formula"},
        {"fejer-sweep", "Fejer projection: Gram matrix, contraction, uniform convergence",
         "Fejer approximation of paths"},
    };
    return entries;
}

std::string catalog_text() {
    std::size_t width = 0, dwidth = 0;
    for (const auto& e : catalog()) {
        width = std::max(width, e.name.size());
        dwidth = std::max(dwidth, e.description.size());
    }
    std::string out;
    for (const auto& e : catalog()) {
        out += e.name + std::string(width + 2 - e.name.size(), ' ');
        out += e.description + std::string(dwidth + 2 - e.description.size(), ' ');
        out += "[" + e.anchor + "]\n";
    }
    return out;
}

std::string catalog_json() {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& e : catalog()) j.push_back({{"name", e.name}, {"description", e.description}, {"anchor", e.anchor}});
    return j.dump(2) + "\n";
}

RunSummary run_experiment(ExperimentConfig& config) {
    RunSummary out = runner(config.experiment())(config);
    out.experiment = config.experiment();
    out.seed = config.seed();
    out.config_hash = config.hash();
    out.parameters = config.resolved();
    return out;
}

std::string table_csv(const Table& table) {
    std::string out;
    const auto line = [&](const Row& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_cell(cells[i]);
        }
        out += '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
    return out;
}

std::string summary_json(const RunSummary& s) {
    using nlohmann::ordered_json;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(s.config_hash));
    ordered_json j;
    j["experiment"] = s.experiment;
    j["library_version"] = kVersion;
    j["config_hash"] = std::string("fnv1a64:") + hash;
    j["seed"] = s.seed;
    j["parameters"] = ordered_json::object();
    for (const auto& [k, v] : s.parameters) j["parameters"][k] = v;
    j["metrics"] = ordered_json::array();
    for (const auto& m : s.metrics)
        j["metrics"].push_back({{"name", m.name},
                                {"check", check_name(m.check)},
                                {"observed", m.observed},
                                {"se", m.se},
                                {"expected", m.expected},
                                {"tolerance", m.tolerance},
                                {"pass", m.pass}});
    j["tables"] = ordered_json::array();
    for (const auto& t : s.tables) j["tables"].push_back(t.name + ".csv");
    j["failures"] = s.failures().size();
    j["pass"] = s.passed();
    return j.dump(2) + "\n";
}

void write_artifacts(const RunSummary& summary, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream os(path, std::ios::binary);
        os << text;
        if (!os) throw Error("cannot write " + path.string());
    };
    for (const auto& t : summary.tables) write(dir / (t.name + ".csv"), table_csv(t));
    write(dir / "summary.json", summary_json(summary));
}

}  // namespace svpde::cli
