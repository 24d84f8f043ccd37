#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace svpde {

/// Uniform time grid t_start + k*dt, k = 0..n_steps.
struct Grid {
    double t_start = 0.0;
    double t_end = 1.0;
    int n_steps = 1;
    double dt = 1.0;

    Grid() = default;
    Grid(double t_start, double t_end, int n_steps);

    double time(int k) const noexcept { return t_start + k * dt; }
    int n_points() const noexcept { return n_steps + 1; }
    /// Nearest grid index to s (s must lie in [t_start, t_end] up to half a step).
    int nearest_index(double s) const;
};

/// A continuous path on [-T, 0] sampled at x_k = -T + k*T/(n-1); linear interpolation between nodes.
class Path {
public:
    Path() = default;
    Path(double horizon, std::vector<double> values);

    template <class F>
    static Path from_function(double horizon, int n_nodes, F&& f) {
        std::vector<double> v(static_cast<std::size_t>(n_nodes > 0 ? n_nodes : 0));
        const double h = n_nodes > 1 ? horizon / (n_nodes - 1) : 0.0;
        for (int k = 0; k < n_nodes; ++k) v[k] = f(k == n_nodes - 1 ? 0.0 : -horizon + k * h);
        return Path(horizon, std::move(v));
    }
    static Path constant(double horizon, int n_nodes, double c);

    double horizon() const noexcept { return horizon_; }
    int size() const noexcept { return static_cast<int>(values_.size()); }
    double spacing() const noexcept { return horizon_ / (size() - 1); }
    double node(int k) const noexcept { return k == size() - 1 ? 0.0 : -horizon_ + k * spacing(); }
    double operator[](int k) const noexcept { return values_[k]; }
    std::span<const double> values() const noexcept { return values_; }
    /// Direct node access for in-place refills inside simulation loops (layout is fixed).
    std::span<double> mutable_values() noexcept { return values_; }
    double present() const noexcept { return values_.back(); }
    double oldest() const noexcept { return values_.front(); }

    /// Linear interpolation; x is clamped to [-T, 0].
    double operator()(double x) const noexcept;

    bool same_layout(const Path& other) const noexcept;

    Path& operator+=(const Path& other);
    Path& operator-=(const Path& other);
    Path& operator*=(double a);

private:
    double horizon_ = 1.0;
    std::vector<double> values_;
};

Path operator+(Path a, const Path& b);
Path operator-(Path a, const Path& b);
Path operator*(double a, Path p);

double sup_norm(const Path& eta);

/// One realisation on [t, T] together with its history on [t - T, t].
struct Trajectory {
    Grid grid;
    Path prefix;
    std::vector<double> values;

    Trajectory(Grid grid, Path prefix, std::vector<double> values);
};

/// Window {X_{s+u}, u in [-T, 0]} on the prefix node layout. s snaps to the nearest grid node.
Path window(const Trajectory& traj, double s);
Path window(const Trajectory& traj, double s, int n_nodes);

/// Low-level window assembly used inside simulation loops: writes the window at grid index
/// `step` onto out.size() nodes. body[0..step] must be filled.
void fill_window(const Path& prefix, std::span<const double> body, const Grid& grid, int step,
                 std::span<double> out);

/// Value of a process known on a grid, extended by X_0 before the grid and X_T after it.
double extend_canonical(std::span<const double> values, const Grid& grid, double s);

/// A smooth integrand together with its derivative.
struct Integrand {
    std::function<double(double)> f;
    std::function<double(double)> df;
};

/// Forward integral of psi against d^-eta on [-T, 0], realised by integration by parts with the
/// initial point mass at -T: psi(0) eta(0) - \int psi'(x) eta(x) dx (composite trapezoid).
double forward_integral(const Integrand& psi, const Path& eta);

/// Weights w such that forward_integral(psi, eta) == sum_k w_k eta_k on the given layout.
std::vector<double> forward_integral_weights(const Integrand& psi, double horizon, int n_nodes);

double dot(std::span<const double> a, std::span<const double> b);

// CSV with header "x,value", x ascending from -T to 0.
void write_path_csv(std::ostream& os, const Path& eta);
Path read_path_csv(std::istream& is);

}  // namespace svpde
