#include "svpde/sde.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "svpde/error.hpp"

namespace svpde {

NoiseBundle::NoiseBundle(int n_paths, int n_steps, int dim, double dt, std::uint64_t seed, int refine)
    : n_paths_(n_paths), n_steps_(n_steps), dim_(dim), dt_(dt), seed_(seed), refine_(refine), gen_(seed) {
    if (n_paths < 1 || n_steps < 1 || dim < 1) throw ConfigError("NoiseBundle: sizes must be positive");
    if (!(dt > 0.0)) throw ConfigError("NoiseBundle: dt must be positive");
    if (refine < 1) throw ConfigError("NoiseBundle: refine must be positive");
}

double NoiseBundle::increment(int path, int step, int component) const noexcept {
    const auto p = static_cast<std::uint32_t>(path), c = static_cast<std::uint32_t>(component);
    if (refine_ == 1) return std::sqrt(dt_) * gen_.normal(p, static_cast<std::uint32_t>(step), c);
    const double fine_sd = std::sqrt(dt_ / refine_);
    double acc = 0.0;
    for (int j = 0; j < refine_; ++j)
        acc += gen_.normal(p, static_cast<std::uint32_t>(step * refine_ + j), c);
    return fine_sd * acc;
}

double NoiseBundle::bridge_uniform(int path, int step) const noexcept {
    // keyed on the coarse step so that coarsened bundles draw their own bridge uniforms
    return gen_.uniform(static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(step),
                        static_cast<std::uint32_t>(refine_), 1);
}

NoiseBundle NoiseBundle::coarsened(int factor) const {
    if (factor < 1 || n_steps_ % factor != 0)
        throw ConfigError("NoiseBundle: coarsening factor must divide the step count");
    return NoiseBundle(n_paths_, n_steps_ / factor, dim_, dt_ * factor, seed_, refine_ * factor);
}

void NoiseBundle::check_shape(int n_paths, int n_steps, int dim) const {
    if (n_paths != n_paths_ || n_steps != n_steps_ || dim != dim_)
        throw ShapeError("NoiseBundle: expected " + std::to_string(n_paths) + " paths x " + std::to_string(n_steps) +
                         " steps x " + std::to_string(dim) + " components, have " + std::to_string(n_paths_) + " x " +
                         std::to_string(n_steps_) + " x " + std::to_string(dim_));
}

// ---------------------------------------------------------------------------------------------

MarkovSde MarkovSde::scalar(std::function<double(double, double)> b, std::function<double(double, double)> sigma) {
    MarkovSde sde;
    sde.dim = 1;
    sde.drift = [b = std::move(b)](double t, std::span<const double> x, std::span<double> out) { out[0] = b(t, x[0]); };
    sde.diffusion = [s = std::move(sigma)](double t, std::span<const double> x, std::span<double> out) {
        out[0] = s(t, x[0]);
    };
    return sde;
}

PathCoefficient PathCoefficient::constant(double c) {
    return lift([c](double, double) { return c; });
}

PathCoefficient PathCoefficient::lift(std::function<double(double, double)> f) {
    PathCoefficient out;
    out.markov = std::move(f);
    return out;
}

PathCoefficient PathCoefficient::of_window(std::function<double(double, const Path&)> f) {
    PathCoefficient out;
    out.functional = std::move(f);
    return out;
}

PathCoefficient PathCoefficient::of_cylinder(CylindricalFunctional fn, double horizon, int n_nodes) {
    PathCoefficient out;
    out.cylindrical = std::make_shared<const CylindricalEvaluator>(std::move(fn), horizon, n_nodes);
    return out;
}

double PathCoefficient::operator()(double t, double present, const Path* window) const {
    if (markov) return markov(t, present);
    if (!window) throw ConfigError("PathCoefficient: window functional evaluated without a window");
    if (functional) return functional(t, *window);
    if (cylindrical) return cylindrical->value(t, *window);
    throw ConfigError("PathCoefficient: no representation set");
}

PathSde mollified_lift(std::function<double(double, double)> b, std::function<double(double, double)> sigma,
                       int index) {
    auto m = std::make_shared<const Mollifier>(1, index);
    auto smooth = [m](std::function<double(double, double)> f) {
        return [m, f = std::move(f)](double t, double x) {
            return m->apply([&](double y) { return f(t, y); }, x);
        };
    };
    return {PathCoefficient::lift(smooth(std::move(b))), PathCoefficient::lift(smooth(std::move(sigma))), {}};
}

double bridge_max(double a, double b, double sigma, double dt, double u) noexcept {
    const double d = b - a;
    return 0.5 * (a + b + std::sqrt(d * d - 2.0 * sigma * sigma * dt * std::log(u)));
}

// ---------------------------------------------------------------------------------------------

namespace {

void check_grid(const Grid& grid, const NoiseBundle& noise) {
    if (std::abs(grid.dt - noise.dt()) > 1e-12 * std::max(1.0, grid.dt))
        throw ShapeError("Euler: grid step does not match the noise bundle");
}

bool diverged(double x, double bound) noexcept { return !(std::abs(x) <= bound); }

[[noreturn]] void throw_divergence(int path, int step, double value) {
    throw DivergenceError("Euler: state left the divergence bound (value " + std::to_string(value) + ") at path " +
                              std::to_string(path) + ", step " + std::to_string(step),
                          path, step);
}

// Per-path failure records reduced to the lowest path index so the reported error is
// independent of scheduling.
struct Failure {
    int path = std::numeric_limits<int>::max();
    int step = 0;
    double value = 0.0;
};

template <class Body>
void for_paths(int n_paths, bool parallel, Body&& body) {
    Failure first;
    if (parallel) {
#pragma omp parallel
        {
            Failure local;
#pragma omp for schedule(static)
            for (int p = 0; p < n_paths; ++p) {
                if (local.path < p) continue;
                body(p, local);
            }
#pragma omp critical(svpde_euler_failure)
            if (local.path < first.path) first = local;
        }
    } else {
        for (int p = 0; p < n_paths && first.path == std::numeric_limits<int>::max(); ++p) body(p, first);
    }
    if (first.path != std::numeric_limits<int>::max()) throw_divergence(first.path, first.step, first.value);
}

MarkovPaths markov_kernel(const MarkovSde& sde, std::span<const double> x0, const Grid& grid,
                          const NoiseBundle& noise, const EulerOptions& options, bool parallel) {
    const int d = sde.dim;
    if (static_cast<int>(x0.size()) != d) throw ShapeError("euler_markov: initial state has wrong dimension");
    if (!sde.drift || !sde.diffusion) throw ConfigError("euler_markov: drift and diffusion are required");
    noise.check_shape(noise.n_paths(), grid.n_steps, d);
    check_grid(grid, noise);
    const bool track = options.track_max && d == 1;

    MarkovPaths out;
    out.grid = grid;
    out.n_paths = noise.n_paths();
    out.dim = d;
    const std::size_t np = static_cast<std::size_t>(out.n_paths);
    out.x.resize(np * grid.n_points() * d);
    if (track) out.running_max.resize(np * grid.n_points());

    for_paths(out.n_paths, parallel, [&](int p, Failure& fail) {
        std::vector<double> x(x0.begin(), x0.end()), b(d), s(static_cast<std::size_t>(d) * d), dw(d);
        double running = x[0];
        for (int c = 0; c < d; ++c) out.x[p * d + c] = x[c];
        if (track) out.running_max[p] = running;
        for (int k = 0; k < grid.n_steps; ++k) {
            const double t = grid.time(k);
            sde.drift(t, x, b);
            sde.diffusion(t, x, s);
            for (int c = 0; c < d; ++c) dw[c] = noise.increment(p, k, c);
            const double before = x[0];
            for (int i = 0; i < d; ++i) {
                double acc = x[i] + b[i] * grid.dt;
                for (int j = 0; j < d; ++j) acc += s[i * d + j] * dw[j];
                x[i] = acc;
            }
            double* slot = &out.x[((k + 1) * np + p) * d];
            for (int c = 0; c < d; ++c) {
                if (diverged(x[c], options.divergence_bound)) {
                    fail = {p, k + 1, x[c]};
                    return;
                }
                slot[c] = x[c];
            }
            if (track) {
                running = std::max(running, bridge_max(before, x[0], s[0], grid.dt, noise.bridge_uniform(p, k)));
                out.running_max[(k + 1) * np + p] = running;
            }
        }
    });
    return out;
}

PathTrajectories path_kernel(const PathSde& sde, const Path& eta, const Grid& grid, const NoiseBundle& noise,
                             const EulerOptions& options, bool parallel, bool reference) {
    noise.check_shape(noise.n_paths(), grid.n_steps, 1);
    check_grid(grid, noise);
    const bool windowed = sde.drift.needs_window() || sde.diffusion.needs_window();
    const int nodes = options.window_nodes > 0 ? options.window_nodes : eta.size();
    for (const auto* c : {&sde.drift, &sde.diffusion})
        if (c->cylindrical && !c->cylindrical->matches(Path::constant(eta.horizon(), nodes, 0.0)))
            throw ConfigError("euler_path_dependent: cylindrical coefficient layout differs from the window layout");

    PathTrajectories out;
    out.grid = grid;
    out.prefix = eta;
    out.n_paths = noise.n_paths();
    const std::size_t np = static_cast<std::size_t>(out.n_paths);
    out.values.resize(np * grid.n_points());
    if (options.track_max) out.running_max.resize(np * grid.n_points());

    for_paths(out.n_paths, parallel, [&](int p, Failure& fail) {
        std::vector<double> body(grid.n_points(), 0.0);
        Path win = Path::constant(eta.horizon(), nodes, eta.present());
        body[0] = eta.present();
        out.values[p] = body[0];
        double running = body[0];
        if (options.track_max) out.running_max[p] = running;
        for (int k = 0; k < grid.n_steps; ++k) {
            const double t = grid.time(k);
            const Path* w = nullptr;
            if (windowed) {
                if (reference) {
                    std::vector<double> so_far(body.begin(), body.begin() + k + 1);
                    so_far.resize(grid.n_points(), body[k]);
                    win = svpde::window(Trajectory(grid, eta, std::move(so_far)), grid.time(k), nodes);
                } else {
                    fill_window(eta, body, grid, k, win.mutable_values());
                }
                w = &win;
            }
            const double b = sde.drift(t, body[k], w);
            const double s = sde.diffusion(t, body[k], w);
            const double next = body[k] + b * grid.dt + s * noise.increment(p, k, 0);
            if (diverged(next, options.divergence_bound)) {
                fail = {p, k + 1, next};
                return;
            }
            body[k + 1] = next;
            out.values[(k + 1) * np + p] = next;
            if (options.track_max) {
                running = std::max(running, bridge_max(body[k], next, s, grid.dt, noise.bridge_uniform(p, k)));
                out.running_max[(k + 1) * np + p] = running;
            }
        }
    });
    return out;
}

}  // namespace

MarkovPaths euler_markov(const MarkovSde& sde, std::span<const double> x0, const Grid& grid, const NoiseBundle& noise,
                         const EulerOptions& options) {
    return markov_kernel(sde, x0, grid, noise, options, true);
}

MarkovPaths euler_markov_reference(const MarkovSde& sde, std::span<const double> x0, const Grid& grid,
                                   const NoiseBundle& noise, const EulerOptions& options) {
    return markov_kernel(sde, x0, grid, noise, options, false);
}

PathTrajectories euler_path_dependent(const PathSde& sde, const Path& eta, const Grid& grid, const NoiseBundle& noise,
                                      const EulerOptions& options) {
    return path_kernel(sde, eta, grid, noise, options, true, false);
}

PathTrajectories euler_path_dependent_reference(const PathSde& sde, const Path& eta, const Grid& grid,
                                                const NoiseBundle& noise, const EulerOptions& options) {
    return path_kernel(sde, eta, grid, noise, options, false, true);
}

// ---------------------------------------------------------------------------------------------

std::vector<double> PathTrajectories::body(int p) const {
    std::vector<double> v(grid.n_points());
    for (int k = 0; k < grid.n_points(); ++k) v[k] = at(p, k);
    return v;
}

Trajectory PathTrajectories::trajectory(int p) const { return Trajectory(grid, prefix, body(p)); }

Path PathTrajectories::window(int p, int k, int n_nodes) const {
    std::vector<double> out(static_cast<std::size_t>(n_nodes > 0 ? n_nodes : prefix.size()));
    if (out.size() < 2) throw ConfigError("PathTrajectories::window: need at least two nodes");
    fill_window(prefix, body(p), grid, k, out);
    return Path(prefix.horizon(), std::move(out));
}

Estimate coupled_sup_error(const PathTrajectories& a, const PathTrajectories& b, double p) {
    if (a.n_paths != b.n_paths || a.grid.n_steps != b.grid.n_steps)
        throw ShapeError("coupled_sup_error: path families differ in shape");
    std::vector<double> per_path(a.n_paths);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.n_paths; ++i) {
        double sup = 0.0;
        for (int k = 0; k < a.grid.n_points(); ++k) sup = std::max(sup, std::abs(a.at(i, k) - b.at(i, k)));
        per_path[i] = std::pow(sup, p);
    }
    return mean_and_se(per_path);
}

Estimate coupled_sup_error(const PathSde& spec_n, const PathSde& spec, const Path& eta, const Grid& grid,
                           const NoiseBundle& noise, double p) {
    return coupled_sup_error(euler_path_dependent(spec_n, eta, grid, noise), euler_path_dependent(spec, eta, grid, noise),
                             p);
}

Estimate coupled_sup_error(const MarkovSde& spec_n, const MarkovSde& spec, std::span<const double> x0,
                           const Grid& grid, const NoiseBundle& noise, double p) {
    const MarkovPaths a = euler_markov(spec_n, x0, grid, noise);
    const MarkovPaths b = euler_markov(spec, x0, grid, noise);
    std::vector<double> per_path(a.n_paths);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.n_paths; ++i) {
        double sup = 0.0;
        for (int k = 0; k < grid.n_points(); ++k) {
            double r2 = 0.0;
            for (int c = 0; c < a.dim; ++c) r2 += (a.at(i, k, c) - b.at(i, k, c)) * (a.at(i, k, c) - b.at(i, k, c));
            sup = std::max(sup, std::sqrt(r2));
        }
        per_path[i] = std::pow(sup, p);
    }
    return mean_and_se(per_path);
}

Estimate moment_check(const PathTrajectories& paths, double p) {
    if (!(p >= 1.0)) throw ConfigError("moment_check: p must be at least 1");
    double prefix_sup = 0.0;
    for (double v : paths.prefix.values()) prefix_sup = std::max(prefix_sup, std::abs(v));
    std::vector<double> per_path(paths.n_paths);
    for (int i = 0; i < paths.n_paths; ++i) {
        double sup = prefix_sup;
        for (int k = 0; k < paths.grid.n_points(); ++k) sup = std::max(sup, std::abs(paths.at(i, k)));
        per_path[i] = std::pow(sup, p);
    }
    return mean_and_se(per_path);
}

Estimate moment_check(const MarkovPaths& paths, double p) {
    if (!(p >= 1.0)) throw ConfigError("moment_check: p must be at least 1");
    std::vector<double> per_path(paths.n_paths);
    for (int i = 0; i < paths.n_paths; ++i) {
        double sup = 0.0;
        for (int k = 0; k < paths.grid.n_points(); ++k) {
            double r2 = 0.0;
            for (int c = 0; c < paths.dim; ++c) r2 += paths.at(i, k, c) * paths.at(i, k, c);
            sup = std::max(sup, std::sqrt(r2));
        }
        per_path[i] = std::pow(sup, p);
    }
    return mean_and_se(per_path);
}

// ---------------------------------------------------------------------------------------------

void write_trajectories_csv(std::ostream& os, const MarkovPaths& paths, int max_paths) {
    const int n = max_paths < 0 ? paths.n_paths : std::min(max_paths, paths.n_paths);
    os << "path_id,step,time";
    if (paths.dim == 1) {
        os << ",value";
    } else {
        for (int c = 0; c < paths.dim; ++c) os << ",value_" << c;
    }
    os << '\n';
    os.precision(17);
    for (int p = 0; p < n; ++p)
        for (int k = 0; k < paths.grid.n_points(); ++k) {
            os << p << ',' << k << ',' << paths.grid.time(k);
            for (int c = 0; c < paths.dim; ++c) os << ',' << paths.at(p, k, c);
            os << '\n';
        }
}

void write_trajectories_csv(std::ostream& os, const PathTrajectories& paths, int max_paths) {
    const int n = max_paths < 0 ? paths.n_paths : std::min(max_paths, paths.n_paths);
    os << "path_id,step,time,value\n";
    os.precision(17);
    for (int p = 0; p < n; ++p)
        for (int k = 0; k < paths.grid.n_points(); ++k)
            os << p << ',' << k << ',' << paths.grid.time(k) << ',' << paths.at(p, k) << '\n';
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ConfigError("trajectory dump: truncated input");
    return v;
}

}  // namespace

void write_trajectories_binary(std::ostream& os, const MarkovPaths& paths) {
    os.write("SVTR", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(paths.n_paths));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(paths.grid.n_points()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(paths.dim));
    put<double>(os, paths.grid.t_start);
    put<double>(os, paths.grid.t_end);
    for (int p = 0; p < paths.n_paths; ++p)
        for (int k = 0; k < paths.grid.n_points(); ++k)
            for (int c = 0; c < paths.dim; ++c) put<double>(os, paths.at(p, k, c));
}

MarkovPaths read_trajectories_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "SVTR", 4) != 0) throw ConfigError("trajectory dump: bad magic");
    if (get<std::uint32_t>(is) != 1) throw ConfigError("trajectory dump: unsupported version");
    MarkovPaths out;
    out.n_paths = static_cast<int>(get<std::uint32_t>(is));
    const int n_points = static_cast<int>(get<std::uint32_t>(is));
    out.dim = static_cast<int>(get<std::uint32_t>(is));
    const double t0 = get<double>(is), t1 = get<double>(is);
    if (n_points < 2 || out.dim < 1) throw ConfigError("trajectory dump: bad dimensions");
    out.grid = Grid(t0, t1, n_points - 1);
    out.x.resize(static_cast<std::size_t>(out.n_paths) * n_points * out.dim);
    for (int p = 0; p < out.n_paths; ++p)
        for (int k = 0; k < n_points; ++k)
            for (int c = 0; c < out.dim; ++c)
                out.x[(static_cast<std::size_t>(k) * out.n_paths + p) * out.dim + c] = get<double>(is);
    return out;
}

}  // namespace svpde
