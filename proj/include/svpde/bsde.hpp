#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "svpde/approx.hpp"
#include "svpde/regression.hpp"
#include "svpde/sde.hpp"
#include "svpde/stats.hpp"

namespace svpde {

/// Generator F(t, state, y, z). For path-dependent problems the state is the present value; a
/// driver that needs the whole window sets `window_f` instead.
struct DriverSpec {
    std::function<double(double t, std::span<const double> x, double y, std::span<const double> z)> f;
    std::function<double(double t, const Path& window, double y, double z)> window_f;
    double lipschitz = 0.0;
    GrowthBudget growth;

    bool is_zero() const noexcept { return !f && !window_f; }

    static DriverSpec zero() { return {}; }
    /// F = a y + <c, z> + b.
    static DriverSpec linear(double a, double b = 0.0, std::vector<double> c = {});
};

struct RegressionBasisSpec {
    enum class Kind { Polynomial, PathFeatures };
    Kind kind = Kind::Polynomial;
    /// Total degree of the polynomial basis in the state (<= 3); for path features, the degree in
    /// the present value.
    int degree = 2;
    /// Path features: running max, running time integral and 2 * fourier_pairs Fourier
    /// coefficients of the window.
    bool running_max = true;
    bool running_integral = true;
    int fourier_pairs = 2;
    /// Node count of the resampled windows used for the Fourier features.
    int feature_nodes = 65;
    LeastSquaresOptions least_squares;

    int size(int dim) const;

    static RegressionBasisSpec path_features() {
        RegressionBasisSpec b;
        b.kind = Kind::PathFeatures;
        return b;
    }
};

enum class ZEstimator {
    Plain,     // Z_k = E[R_{k+1} dW_k | F_k] / dt
    Centered,  // Z_k = E[(R_{k+1} - Y^{(0)}_k) dW_k | F_k] / dt, lower variance
};

struct BsdeOptions {
    RegressionBasisSpec basis;
    ZEstimator z_estimator = ZEstimator::Plain;
    /// Keep the Y and Z fields; without them only the initial estimate is returned.
    bool store_fields = true;
};

/// Y is step-major (n_points x n_paths), Z is (n_steps x n_paths x dim).
struct BsdeSolution {
    Grid grid;
    int n_paths = 0;
    int dim = 1;
    std::vector<double> Y;
    std::vector<double> Z;
    /// Y at the initial time: mean and standard error of the realised values
    /// xi + sum_k F(t_k, X_k, Y_k, Z_k) dt.
    Estimate y0;
    /// The per-path realised values behind y0.
    std::vector<double> realized0;
    std::vector<double> z0;

    double y(int p, int k) const noexcept { return Y[static_cast<std::size_t>(k) * n_paths + p]; }
    double z(int p, int k, int c = 0) const noexcept { return Z[(static_cast<std::size_t>(k) * n_paths + p) * dim + c]; }
    bool has_fields() const noexcept { return !Y.empty(); }
};

/// Least-squares Monte Carlo for Y_s = xi + \int F ds - \int Z dW: explicit backward recursion with
/// one Picard substitution, Y^{(0)}_k = E[R_{k+1} | F_k],
/// Y_k = Y^{(0)}_k + F(t_k, X_k, Y^{(0)}_k, Z_k) dt, where R_{k+1} is the realised value at k+1.
BsdeSolution solve_bsde(const DriverSpec& driver, std::span<const double> terminal, const MarkovPaths& paths,
                        const NoiseBundle& noise, const BsdeOptions& options = {});
BsdeSolution solve_bsde(const DriverSpec& driver, std::span<const double> terminal, const PathTrajectories& paths,
                        const NoiseBundle& noise, const BsdeOptions& options = {});

/// Raw feature matrix (n_paths x B, no intercept) at grid index k.
Eigen::MatrixXd regression_features(const RegressionBasisSpec& basis, const MarkovPaths& paths, int k);
Eigen::MatrixXd regression_features(const RegressionBasisSpec& basis, const PathTrajectories& paths, int k);

/// K_{k+1} = K_k + Y_k - Y_{k+1} - F(t_k, X_k, Y_k, Z_k) dt + Z_k dW_k, K_0 = 0 (step-major).
std::vector<double> extract_K_residual(const BsdeSolution& solution, const DriverSpec& driver,
                                       const MarkovPaths& paths, const NoiseBundle& noise);
std::vector<double> extract_K_residual(const BsdeSolution& solution, const DriverSpec& driver,
                                       const PathTrajectories& paths, const NoiseBundle& noise);

struct ComparisonReport {
    double violation_fraction = 0.0;
    double worst_violation = 0.0;  // max of Y_sub - Y_super (may be negative)
    long long violations = 0;
    long long pairs = 0;
};

/// Counts (path, step) pairs with Y_sub > Y_super + tolerance.
ComparisonReport comparison_check(const BsdeSolution& sub, const BsdeSolution& super, double tolerance);

struct BsdeNorms {
    Estimate sp_y;   // E[sup_k |Y_k|^p]
    Estimate h2_z;   // E[sum_k |Z_k|^2 dt]
    Estimate s2_k;   // E[K_T^2]
};

BsdeNorms bsde_norms(const BsdeSolution& solution, double p, std::span<const double> K = {});

struct LimitRow {
    int n = 0;
    Estimate z_gap;  // E[sum_k |Z^n_k - Z_k|^q dt]
    Estimate y_gap;  // E[sup_k |Y^n_k - Y_k|^2]
    Estimate k_gap;  // max_k E|K^n_k - K_k|
};

/// One row of the limit table for a coupled pair of solutions.
LimitRow limit_row(int n, const BsdeSolution& approx, std::span<const double> K_approx, const BsdeSolution& limit,
                   std::span<const double> K_limit, double q);

/// Full table over a schedule: `solve(n)` returns (solution, K) for the n-th problem on the common
/// noise; `limit` is the limit problem.
std::vector<LimitRow> limit_experiment(
    const std::function<std::pair<BsdeSolution, std::vector<double>>(int n)>& solve,
    const std::pair<BsdeSolution, std::vector<double>>& limit, std::span<const int> schedule, double q);

/// Header "n,z_gap_q,y_gap_sup2,k_gap_max,se_z_gap_q,se_y_gap_sup2,se_k_gap_max".
void write_limit_csv(std::ostream& os, std::span<const LimitRow> rows);

}  // namespace svpde
