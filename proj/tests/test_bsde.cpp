#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "svpde/bsde.hpp"
#include "svpde/error.hpp"
#include "svpde/parallel.hpp"

using namespace svpde;

namespace {

MarkovSde brownian() {
    return MarkovSde::scalar([](double, double) { return 0.0; }, [](double, double) { return 1.0; });
}

struct Benchmark {
    Grid grid;
    NoiseBundle noise;
    MarkovPaths paths;
    std::vector<double> terminal;
};

// b = 0, sigma = 1 from x on [t, 1], terminal xi = X_T
Benchmark martingale(int n_paths, int n_steps, double x, double t = 0.0, std::uint64_t seed = 1) {
    const Grid grid(t, 1.0, n_steps);
    NoiseBundle noise(n_paths, n_steps, 1, grid.dt, seed);
    const std::vector<double> x0{x};
    auto paths = euler_markov(brownian(), x0, grid, noise);
    const auto last = paths.slice(n_steps);
    return {grid, noise, std::move(paths), std::vector<double>(last.begin(), last.end())};
}

double mean_abs_k(std::span<const double> K, int n_paths, int k) {
    double acc = 0.0;
    for (int p = 0; p < n_paths; ++p) acc += std::abs(K[static_cast<std::size_t>(k) * n_paths + p]);
    return acc / n_paths;
}

struct ThreadGuard {
    ~ThreadGuard() { set_threads(0); }
};

}  // namespace

// ---- least squares ----------------------------------------------------------------------------

TEST(LeastSquares, ReproducesPolynomialData) {
    const int n = 500;
    Eigen::MatrixXd x(n, 2), y(n, 2);
    for (int i = 0; i < n; ++i) {
        const double s = -1.0 + 2.0 * i / (n - 1);
        x(i, 0) = s;
        x(i, 1) = s * s;
        y(i, 0) = 3.0 - 2.0 * s + 0.5 * s * s;
        y(i, 1) = 7.0;
    }
    const LeastSquares fit(x, y, {.ridge = 0.0});
    EXPECT_LT((fit.fitted() - y).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(fit.active_columns(), 2);
}

TEST(LeastSquares, DropsConstantColumnsAndFlagsRankDeficiency) {
    const int n = 100;
    Eigen::MatrixXd x(n, 3), y(n, 1);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = i;
        x(i, 1) = 4.0;
        x(i, 2) = 2.0 * i;
        y(i, 0) = i;
    }
    EXPECT_THROW(LeastSquares(x, y, {.ridge = 0.0}), NumericalError);
    const LeastSquares ridged(x, y);
    EXPECT_EQ(ridged.active_columns(), 2);
    EXPECT_LT((ridged.fitted() - y).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(LeastSquares, SubsampleFitsEvenRowsOnly) {
    const int n = 10;
    Eigen::MatrixXd x(n, 1), y(n, 1);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = i;
        y(i, 0) = i % 2 ? 100.0 : 2.0 * i;  // odd rows are outliers
    }
    const LeastSquares fit(x, y, {.ridge = 0.0, .subsample = 2});
    for (int i = 0; i < n; ++i) EXPECT_NEAR(fit.fitted()(i, 0), 2.0 * i, 1e-10);
}

// ---- solve_bsde -------------------------------------------------------------------------------

TEST(SolveBsde, ConstantTerminalZeroDriver) {
    auto b = martingale(2000, 20, 0.5);
    std::fill(b.terminal.begin(), b.terminal.end(), 1.75);
    for (auto est : {ZEstimator::Plain, ZEstimator::Centered}) {
        const auto sol = solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise, {.z_estimator = est});
        for (double y : sol.Y) EXPECT_NEAR(y, 1.75, 1e-12);
        EXPECT_EQ(sol.y0.value, 1.75);
        if (est == ZEstimator::Centered) {
            for (double z : sol.Z) EXPECT_NEAR(z, 0.0, 1e-12);
        } else {
            // Z = 1.75 E[dW | X_k] / dt is regression noise around 0
            double acc = 0.0;
            for (double z : sol.Z) acc += z;
            EXPECT_LT(std::abs(acc / sol.Z.size()), 0.1);
        }
    }
}

TEST(SolveBsde, TerminalIsPinned) {
    auto b = martingale(1000, 10, 0.0);
    for (double& v : b.terminal) v = std::max(v, 0.0);
    const auto sol = solve_bsde(DriverSpec::linear(-0.3, 0.1), b.terminal, b.paths, b.noise);
    for (int p = 0; p < 1000; ++p) EXPECT_EQ(sol.y(p, 10), b.terminal[p]);
}

TEST(SolveBsde, BrownianMartingaleRepresentation) {
    const auto b = martingale(100000, 50, 0.3);
    const auto sol = solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise);
    EXPECT_NEAR(sol.y0.value, 0.3, 3.0 * sol.y0.se);
    double acc = 0.0;
    for (double z : sol.Z) acc += z;
    EXPECT_LE(std::abs(acc / sol.Z.size() - 1.0), 0.02);
}

TEST(SolveBsde, LinearDriverClosedForm) {
    // Y_s = e^{-r(T-s)} X_s
    const auto b = martingale(100000, 100, 1.0);
    const auto sol = solve_bsde(DriverSpec::linear(-0.1), b.terminal, b.paths, b.noise);
    EXPECT_NEAR(sol.y0.value, std::exp(-0.1), 0.01 * std::exp(-0.1));
    const int k = 50;
    double err = 0.0;
    for (int p = 0; p < 100000; ++p) err += std::abs(sol.y(p, k) - std::exp(-0.1 * 0.5) * b.paths.at(p, k));
    EXPECT_LT(err / 100000, 0.01);
}

TEST(SolveBsde, ZeroDriverIncrementsHaveMeanZero) {
    auto b = martingale(20000, 20, -0.2);
    for (double& v : b.terminal) v = v * v;
    const auto sol = solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise);
    std::vector<double> inc(20000);
    for (int k = 0; k < 20; ++k) {
        for (int p = 0; p < 20000; ++p) inc[p] = sol.y(p, k + 1) - sol.y(p, k);
        const Estimate e = mean_and_se(inc);
        EXPECT_LE(std::abs(e.value), 4.0 * e.se + 1e-14) << "step " << k;
    }
}

TEST(SolveBsde, LinearityInDriverAndTerminal) {
    const auto b = martingale(20000, 40, 1.0);
    const auto base = solve_bsde(DriverSpec::linear(-0.1), b.terminal, b.paths, b.noise);
    std::vector<double> scaled = b.terminal;
    for (double& v : scaled) v *= 3.0;
    // F linear in y: alpha F(y / alpha) = F(y), so the same generator applies
    const auto big = solve_bsde(DriverSpec::linear(-0.1), scaled, b.paths, b.noise);
    EXPECT_NEAR(big.y0.value, 3.0 * base.y0.value, 0.01 * std::abs(3.0 * base.y0.value));
    for (std::size_t i = 0; i < base.Y.size(); i += 997) EXPECT_NEAR(big.Y[i], 3.0 * base.Y[i], 1e-9);
}

TEST(SolveBsde, GuardsAndShapeErrors) {
    const auto b = martingale(29, 5, 0.0);
    EXPECT_THROW(solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise), ConfigError);  // 3 columns > 29 / 10
    RegressionBasisSpec cubic;
    cubic.degree = 4;
    EXPECT_THROW(solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise, {.basis = cubic}), ConfigError);
    const auto ok = martingale(30, 5, 0.0);
    EXPECT_NO_THROW(solve_bsde(DriverSpec::zero(), ok.terminal, ok.paths, ok.noise));
    const auto big = martingale(200, 5, 0.0);
    EXPECT_THROW(solve_bsde(DriverSpec::zero(), std::vector<double>(10, 0.0), big.paths, big.noise), ShapeError);
}

TEST(SolveBsde, DeterministicAcrossWorkerCounts) {
    ThreadGuard guard;
    const auto b = martingale(10000, 20, 0.5);
    std::vector<double> xi = b.terminal;
    for (double& v : xi) v = std::max(v - 0.4, 0.0);
    set_threads(1);
    const auto one = solve_bsde(DriverSpec::linear(-0.2, 0.05), xi, b.paths, b.noise);
    set_threads(4);
    const auto four = solve_bsde(DriverSpec::linear(-0.2, 0.05), xi, b.paths, b.noise);
    EXPECT_EQ(one.Y, four.Y);
    EXPECT_EQ(one.Z, four.Z);
    EXPECT_EQ(one.y0.value, four.y0.value);
}

TEST(SolveBsde, MultidimensionalState) {
    // X = (W1, W2), xi = X1 + 2 X2, Y_s = X1_s + 2 X2_s, Z = (1, 2)
    MarkovSde sde;
    sde.dim = 2;
    sde.drift = [](double, std::span<const double>, std::span<double> o) { o[0] = o[1] = 0.0; };
    sde.diffusion = [](double, std::span<const double>, std::span<double> s) { s[0] = s[3] = 1.0, s[1] = s[2] = 0.0; };
    const Grid grid(0.0, 1.0, 20);
    const NoiseBundle noise(20000, 20, 2, grid.dt, 3);
    const auto paths = euler_markov(sde, std::vector<double>{0.1, -0.2}, grid, noise);
    std::vector<double> xi(20000);
    for (int p = 0; p < 20000; ++p) xi[p] = paths.at(p, 20, 0) + 2.0 * paths.at(p, 20, 1);
    const auto sol = solve_bsde(DriverSpec::zero(), xi, paths, noise, {.z_estimator = ZEstimator::Centered});
    EXPECT_NEAR(sol.y0.value, -0.3, 3.0 * sol.y0.se);
    double z1 = 0.0, z2 = 0.0;
    for (int k = 0; k < 20; ++k)
        for (int p = 0; p < 20000; ++p) z1 += sol.z(p, k, 0), z2 += sol.z(p, k, 1);
    EXPECT_NEAR(z1 / 400000, 1.0, 0.02);
    EXPECT_NEAR(z2 / 400000, 2.0, 0.04);
}

// ---- K residual --------------------------------------------------------------------------------

TEST(KResidual, PlainSolveHasSmallResidual) {
    // linear-driver benchmark: 10^5 paths, 100 steps
    const int n = 100000;
    const auto b = martingale(n, 100, 1.0);
    const auto driver = DriverSpec::linear(-0.1);
    for (auto est : {ZEstimator::Plain, ZEstimator::Centered}) {
        const auto sol = solve_bsde(driver, b.terminal, b.paths, b.noise, {.z_estimator = est});
        const auto K = extract_K_residual(sol, driver, b.paths, b.noise);
        for (int p = 0; p < n; ++p) ASSERT_EQ(K[p], 0.0);
        double worst_mean = 0.0, worst_abs = 0.0;
        for (int k = 0; k <= 100; ++k) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p) acc += K[static_cast<std::size_t>(k) * n + p];
            worst_mean = std::max(worst_mean, std::abs(acc / n));
            worst_abs = std::max(worst_abs, mean_abs_k(K, n, k));
        }
        EXPECT_LE(worst_mean, 5e-2);
        if (est == ZEstimator::Centered) EXPECT_LE(worst_abs, 5e-2);
        std::printf("K floor (%s): max_k |E K_k| = %.4f, max_k E|K_k| = %.4f\n",
                    est == ZEstimator::Plain ? "plain" : "centered", worst_mean, worst_abs);
    }
}

TEST(KResidual, TiltedSolutionsHaveLinearResidual) {
    const auto b = martingale(20000, 50, 1.0);
    const auto driver = DriverSpec::linear(-0.1);
    const auto sol = solve_bsde(driver, b.terminal, b.paths, b.noise);
    const auto K0 = extract_K_residual(sol, driver, b.paths, b.noise);
    for (double c : {-1.0, 0.5, 2.0}) {
        // Y' = Y - c (s - t); linear F adds -0.1 * (-c (s - t)) dt per step as well
        BsdeSolution tilted = sol;
        for (int k = 0; k <= 50; ++k)
            for (int p = 0; p < 20000; ++p) tilted.Y[static_cast<std::size_t>(k) * 20000 + p] -= c * b.grid.time(k);
        const auto K = extract_K_residual(tilted, driver, b.paths, b.noise);
        for (int k = 0; k <= 50; k += 10) {
            double mean = 0.0;
            for (int p = 0; p < 20000; ++p)
                mean += K[static_cast<std::size_t>(k) * 20000 + p] - K0[static_cast<std::size_t>(k) * 20000 + p];
            mean /= 20000;
            double expected = 0.0;
            for (int j = 0; j < k; ++j) expected += c * b.grid.dt - 0.1 * c * b.grid.time(j) * b.grid.dt;
            EXPECT_NEAR(mean, expected, 1e-10);
        }
    }
}

TEST(KResidual, NoiseFloorShrinksWithPaths) {
    const auto driver = DriverSpec::linear(-0.1);
    std::vector<double> floors;
    for (int n : {2500, 10000, 40000}) {
        const auto b = martingale(n, 25, 1.0, 0.0, 5);
        std::vector<double> xi = b.terminal;
        for (double& v : xi) v = std::max(v, 1.0);
        const auto sol = solve_bsde(driver, xi, b.paths, b.noise);
        const auto K = extract_K_residual(sol, driver, b.paths, b.noise);
        double acc = 0.0;
        for (int k = 0; k <= 25; ++k) acc += mean_abs_k(K, n, k);
        floors.push_back(acc / 26);
    }
    EXPECT_LT(floors[1], floors[0]);
    EXPECT_LT(floors[2], floors[1]);
}

// ---- comparison and norms -------------------------------------------------------------------------

TEST(ComparisonCheck, Examples) {
    const auto b = martingale(5000, 20, 0.0);
    const auto sol = solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise);
    EXPECT_EQ(comparison_check(sol, sol, 0.0).violations, 0);

    BsdeSolution super = sol;
    for (int k = 0; k <= 20; ++k)
        for (int p = 0; p < 5000; ++p) super.Y[static_cast<std::size_t>(k) * 5000 + p] += 0.3 * (1.0 - b.grid.time(k));
    const auto ok = comparison_check(sol, super, 2.0 * sol.y0.se);
    EXPECT_EQ(ok.violations, 0);
    const auto swapped = comparison_check(super, sol, 2.0 * sol.y0.se);
    EXPECT_GT(swapped.violation_fraction, 0.9);
}

TEST(BsdeNorms, ConstantSolution) {
    auto b = martingale(500, 10, 0.0);
    std::fill(b.terminal.begin(), b.terminal.end(), -2.0);
    const auto sol = solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise, {.z_estimator = ZEstimator::Centered});
    const auto K = extract_K_residual(sol, DriverSpec::zero(), b.paths, b.noise);
    const auto norms = bsde_norms(sol, 3.0, K);
    EXPECT_NEAR(norms.sp_y.value, 8.0, 1e-10);
    EXPECT_NEAR(norms.h2_z.value, 0.0, 1e-20);
    EXPECT_NEAR(norms.s2_k.value, 0.0, 1e-20);
}

TEST(BsdeNorms, BrownianH2Norm) {
    const auto b = martingale(50000, 40, 0.0, 0.25);
    const auto sol = solve_bsde(DriverSpec::zero(), b.terminal, b.paths, b.noise, {.z_estimator = ZEstimator::Centered});
    const auto norms = bsde_norms(sol, 2.0);
    EXPECT_NEAR(norms.h2_z.value, 0.75, std::max(3.0 * norms.h2_z.se, 0.01));
}

TEST(BsdeNorms, AprioriEstimateRatioIsBounded) {
    const auto b = martingale(20000, 40, 0.5);
    const auto driver = DriverSpec::linear(-0.5, 0.2);
    std::vector<double> ratios;
    for (double lambda : {1.0, 2.0, 4.0}) {
        std::vector<double> xi = b.terminal;
        for (double& v : xi) v = lambda * std::abs(v);
        const auto sol = solve_bsde(driver, xi, b.paths, b.noise);
        const auto K = extract_K_residual(sol, driver, b.paths, b.noise);
        const auto n = bsde_norms(sol, 2.0, K);
        ratios.push_back((n.h2_z.value + n.s2_k.value) / (n.sp_y.value + 0.2 * 0.2));
    }
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    EXPECT_LT(hi, 2.0 * lo);
    EXPECT_LT(hi, 10.0);
}

// ---- limit experiment ----------------------------------------------------------------------------

TEST(LimitExperiment, IdenticalProblemsHaveZeroGaps) {
    const auto b = martingale(5000, 20, 1.0);
    const auto driver = DriverSpec::linear(-0.1);
    const auto solve = [&](int) {
        auto sol = solve_bsde(driver, b.terminal, b.paths, b.noise);
        auto K = extract_K_residual(sol, driver, b.paths, b.noise);
        return std::make_pair(std::move(sol), std::move(K));
    };
    const auto limit = solve(0);
    const std::vector<int> schedule{1, 4};
    for (const auto& row : limit_experiment(solve, limit, schedule, 1.0)) {
        EXPECT_EQ(row.z_gap.value, 0.0);
        EXPECT_EQ(row.y_gap.value, 0.0);
        EXPECT_EQ(row.k_gap.value, 0.0);
    }
}

TEST(LimitExperiment, VanishingDriverPerturbation) {
    const auto b = martingale(20000, 40, 1.0);
    const auto solve_with = [&](const DriverSpec& d) {
        auto sol = solve_bsde(d, b.terminal, b.paths, b.noise);
        auto K = extract_K_residual(sol, d, b.paths, b.noise);
        return std::make_pair(std::move(sol), std::move(K));
    };
    const auto limit = solve_with(DriverSpec::linear(-0.1));
    const std::vector<int> schedule{1, 4, 16, 64};
    const auto rows = limit_experiment([&](int n) { return solve_with(DriverSpec::linear(-0.1, 1.0 / n)); }, limit,
                                       schedule, 1.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].z_gap.value, rows[i - 1].z_gap.value);
        EXPECT_LT(rows[i].y_gap.value, rows[i - 1].y_gap.value);
    }
    std::ostringstream os;
    write_limit_csv(os, rows);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
              "n,z_gap_q,y_gap_sup2,k_gap_max,se_z_gap_q,se_y_gap_sup2,se_k_gap_max");
}

TEST(LimitExperiment, MollifiedKinkedTerminal) {
    const auto b = martingale(20000, 40, 0.0);
    const auto solve_terminal = [&](const std::function<double(double)>& h) {
        std::vector<double> xi(b.terminal.size());
        for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = h(b.terminal[p]);
        auto sol = solve_bsde(DriverSpec::zero(), xi, b.paths, b.noise);
        auto K = extract_K_residual(sol, DriverSpec::zero(), b.paths, b.noise);
        return std::make_pair(std::move(sol), std::move(K));
    };
    const auto relu = [](double x) { return std::max(x, 0.0); };
    const auto limit = solve_terminal(relu);
    const std::vector<int> schedule{1, 4, 16};
    const auto rows = limit_experiment(
        [&](int n) {
            const Mollifier m(1, n);
            return solve_terminal([&](double x) { return m.apply(relu, x); });
        },
        limit, schedule, 1.5);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].y_gap.value, rows[i - 1].y_gap.value);
}

// ---- path-dependent problems -----------------------------------------------------------------------

TEST(PathFeatures, ColumnsMatchDirectComputation) {
    const Path eta = Path::from_function(1.0, 21, [](double x) { return std::sin(4 * x); });
    const Grid grid(0.0, 0.5, 10);
    const NoiseBundle noise(40, 10, 1, grid.dt, 2);
    const PathSde sde{PathCoefficient::constant(0.1), PathCoefficient::constant(0.7), {}};
    const auto paths = euler_path_dependent(sde, eta, grid, noise);
    RegressionBasisSpec basis;
    basis.kind = RegressionBasisSpec::Kind::PathFeatures;
    basis.degree = 2;
    basis.fourier_pairs = 1;
    basis.feature_nodes = 41;
    const int k = 6;
    const auto phi = regression_features(basis, paths, k);
    ASSERT_EQ(phi.cols(), 6);
    const FourierBasis fb(1.0, 1);
    for (int p = 0; p < 40; ++p) {
        const auto body = paths.body(p);
        double mx = -INFINITY, integral = 0.0;
        for (int j = 0; j <= k; ++j) mx = std::max(mx, body[j]);
        for (int j = 1; j <= k; ++j) integral += 0.5 * grid.dt * (body[j - 1] + body[j]);
        EXPECT_EQ(phi(p, 0), body[k]);
        EXPECT_EQ(phi(p, 1), body[k] * body[k]);
        EXPECT_EQ(phi(p, 2), mx);
        EXPECT_NEAR(phi(p, 3), integral, 1e-14);
        // window Fourier coefficients via the forward-integral route
        const Path w = paths.window(p, k, 41);
        EXPECT_NEAR(phi(p, 4), fourier_coeff(w, 0, fb), 1e-12);
        EXPECT_NEAR(phi(p, 5), fourier_coeff(w, 1, fb), 1e-12);
    }
}

TEST(PathFeatures, ZeroDriverLookbackMatchesSampleMean) {
    const Path eta = Path::constant(1.0, 41, 0.0);
    const Grid grid(0.0, 1.0, 40);
    const NoiseBundle noise(5000, 40, 1, grid.dt, 8);
    const PathSde sde{PathCoefficient::constant(0.0), PathCoefficient::constant(1.0), {}};
    const auto paths = euler_path_dependent(sde, eta, grid, noise, {.track_max = true});
    std::vector<double> xi(5000);
    for (int p = 0; p < 5000; ++p) xi[p] = paths.running_max[static_cast<std::size_t>(40) * 5000 + p];
    RegressionBasisSpec basis;
    basis.kind = RegressionBasisSpec::Kind::PathFeatures;
    const auto full = solve_bsde(DriverSpec::zero(), xi, paths, noise, {.basis = basis});
    const auto lean = solve_bsde(DriverSpec::zero(), xi, paths, noise, {.basis = basis, .store_fields = false});
    EXPECT_EQ(lean.y0.value, mean_and_se(xi).value);
    EXPECT_NEAR(full.y0.value, lean.y0.value, 1e-12);
    EXPECT_FALSE(lean.has_fields());
}

TEST(PathFeatures, WindowDriver) {
    // F(t, X, y, z) = -(window mean); Y_0 = E[xi] - E \int mean(X_s window) ds
    const Path eta = Path::constant(1.0, 11, 1.0);
    const Grid grid(0.0, 1.0, 10);
    const NoiseBundle noise(2000, 10, 1, grid.dt, 4);
    const PathSde sde{PathCoefficient::constant(0.0), PathCoefficient::constant(0.0), {}};
    const auto paths = euler_path_dependent(sde, eta, grid, noise);
    DriverSpec d;
    d.window_f = [](double, const Path& w, double, double) {
        double acc = 0.0;
        for (double v : w.values()) acc += v;
        return -acc / w.size();
    };
    RegressionBasisSpec basis;
    basis.kind = RegressionBasisSpec::Kind::PathFeatures;
    const auto sol = solve_bsde(d, std::vector<double>(2000, 2.0), paths, noise, {.basis = basis});
    EXPECT_NEAR(sol.y0.value, 1.0, 1e-12);
}
