#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "svpde/approx.hpp"
#include "svpde/cylindrical.hpp"
#include "svpde/paths.hpp"
#include "svpde/rng.hpp"
#include "svpde/stats.hpp"

namespace svpde {

/// Brownian increments keyed by (seed, path, step, component). A bundle with refine = r reads a
/// fine bundle of r * n_steps steps and sums consecutive blocks, so coarse and fine simulations
/// share the same Brownian path.
class NoiseBundle {
public:
    NoiseBundle(int n_paths, int n_steps, int dim, double dt, std::uint64_t seed, int refine = 1);

    int n_paths() const noexcept { return n_paths_; }
    int n_steps() const noexcept { return n_steps_; }
    int dim() const noexcept { return dim_; }
    double dt() const noexcept { return dt_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int refine() const noexcept { return refine_; }

    /// Delta W ~ N(0, dt).
    double increment(int path, int step, int component) const noexcept;
    /// Uniform(0,1) attached to a step, used for the Brownian-bridge maximum.
    double bridge_uniform(int path, int step) const noexcept;

    /// The same Brownian motion observed on a grid `factor` times coarser.
    NoiseBundle coarsened(int factor) const;

    void check_shape(int n_paths, int n_steps, int dim) const;

private:
    int n_paths_, n_steps_, dim_;
    double dt_;
    std::uint64_t seed_;
    int refine_;
    KeyedNormal gen_;
};

// ---------------------------------------------------------------------------------------------
// Coefficients

/// d-dimensional Markovian SDE dX = b(t,X)dt + sigma(t,X)dW with sigma a d x d matrix (row-major).
struct MarkovSde {
    int dim = 1;
    std::function<void(double t, std::span<const double> x, std::span<double> out)> drift;
    std::function<void(double t, std::span<const double> x, std::span<double> out)> diffusion;
    GrowthBudget growth;

    static MarkovSde scalar(std::function<double(double, double)> b, std::function<double(double, double)> sigma);
};

/// A scalar coefficient of a path-dependent SDE. Exactly one representation is set: a Markovian
/// lift (t, present value), a general window functional, or a cylindrical functional of the window.
struct PathCoefficient {
    std::function<double(double, double)> markov;
    std::function<double(double, const Path&)> functional;
    std::shared_ptr<const CylindricalEvaluator> cylindrical;

    static PathCoefficient constant(double c);
    static PathCoefficient lift(std::function<double(double, double)> f);
    static PathCoefficient of_window(std::function<double(double, const Path&)> f);
    static PathCoefficient of_cylinder(CylindricalFunctional fn, double horizon, int n_nodes);

    bool needs_window() const noexcept { return !markov; }
    double operator()(double t, double present, const Path* window) const;
};

/// One-dimensional path-dependent SDE dX = b(t, X_t)dt + sigma(t, X_t)dW driven by the window X_t.
struct PathSde {
    PathCoefficient drift;
    PathCoefficient diffusion;
    GrowthBudget growth;
};

/// Mollified Markovian lift: (b, sigma) -> (phi_n * b, phi_n * sigma) in the state variable.
PathSde mollified_lift(std::function<double(double, double)> b, std::function<double(double, double)> sigma,
                       int index);

// ---------------------------------------------------------------------------------------------
// Simulated paths

struct EulerOptions {
    /// Track the running maximum of a 1-D solution with the Brownian-bridge correction per step.
    bool track_max = false;
    /// Node count of the windows handed to path-dependent coefficients (0: prefix layout).
    int window_nodes = 0;
    double divergence_bound = 1e12;
};

/// Markovian paths, stored step-major: x[(k * n_paths + p) * dim + c].
struct MarkovPaths {
    Grid grid;
    int n_paths = 0;
    int dim = 1;
    std::vector<double> x;
    std::vector<double> running_max;  // (k * n_paths + p), only when tracked and dim == 1

    double at(int p, int k, int c = 0) const noexcept { return x[(static_cast<std::size_t>(k) * n_paths + p) * dim + c]; }
    std::span<const double> slice(int k) const noexcept {
        return {x.data() + static_cast<std::size_t>(k) * n_paths * dim, static_cast<std::size_t>(n_paths) * dim};
    }
};

/// Path-dependent 1-D paths after a prefix eta, step-major: values[k * n_paths + p].
struct PathTrajectories {
    Grid grid;
    Path prefix;
    int n_paths = 0;
    std::vector<double> values;
    std::vector<double> running_max;

    double at(int p, int k) const noexcept { return values[static_cast<std::size_t>(k) * n_paths + p]; }
    std::span<const double> slice(int k) const noexcept {
        return {values.data() + static_cast<std::size_t>(k) * n_paths, static_cast<std::size_t>(n_paths)};
    }
    std::vector<double> body(int p) const;
    Trajectory trajectory(int p) const;
    Path window(int p, int k, int n_nodes = 0) const;
};

/// OpenMP path-parallel Euler–Maruyama; results do not depend on the worker count.
MarkovPaths euler_markov(const MarkovSde& sde, std::span<const double> x0, const Grid& grid,
                         const NoiseBundle& noise, const EulerOptions& options = {});
PathTrajectories euler_path_dependent(const PathSde& sde, const Path& eta, const Grid& grid,
                                      const NoiseBundle& noise, const EulerOptions& options = {});

/// Single-threaded reference versions. The path-dependent one rebuilds every window through
/// Trajectory/window() instead of the rolling buffer.
MarkovPaths euler_markov_reference(const MarkovSde& sde, std::span<const double> x0, const Grid& grid,
                                   const NoiseBundle& noise, const EulerOptions& options = {});
PathTrajectories euler_path_dependent_reference(const PathSde& sde, const Path& eta, const Grid& grid,
                                                const NoiseBundle& noise, const EulerOptions& options = {});

/// Brownian-bridge maximum of a step from a to b with local volatility sigma over dt, given U(0,1).
double bridge_max(double a, double b, double sigma, double dt, double u) noexcept;

/// E[sup_{s in [t,T]} |X^n_s - X_s|^p] under common random numbers.
Estimate coupled_sup_error(const PathSde& spec_n, const PathSde& spec, const Path& eta, const Grid& grid,
                           const NoiseBundle& noise, double p);
Estimate coupled_sup_error(const MarkovSde& spec_n, const MarkovSde& spec, std::span<const double> x0,
                           const Grid& grid, const NoiseBundle& noise, double p);
/// Same statistic from two already simulated families (sample-wise on a common grid).
Estimate coupled_sup_error(const PathTrajectories& a, const PathTrajectories& b, double p);

/// E[sup_s |X_s|^p] over the whole observed path, history included.
Estimate moment_check(const PathTrajectories& paths, double p);
Estimate moment_check(const MarkovPaths& paths, double p);

// ---------------------------------------------------------------------------------------------
// Dumps

/// CSV with header "path_id,step,time,value" (component columns value_0.. when dim > 1).
void write_trajectories_csv(std::ostream& os, const MarkovPaths& paths, int max_paths = -1);
void write_trajectories_csv(std::ostream& os, const PathTrajectories& paths, int max_paths = -1);

/// Little-endian binary: "SVTR", uint32 version (1), uint32 n_paths, uint32 n_points, uint32 dim,
/// float64 t_start, float64 t_end, then float64 values in path-major order.
void write_trajectories_binary(std::ostream& os, const MarkovPaths& paths);
MarkovPaths read_trajectories_binary(std::istream& is);

}  // namespace svpde
