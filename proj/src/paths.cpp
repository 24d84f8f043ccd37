#include "svpde/paths.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "svpde/error.hpp"

namespace svpde {

Grid::Grid(double t_start_, double t_end_, int n_steps_)
    : t_start(t_start_), t_end(t_end_), n_steps(n_steps_) {
    if (n_steps <= 0) throw ConfigError("Grid: n_steps must be positive");
    if (!(t_end > t_start)) throw ConfigError("Grid: t_end must exceed t_start");
    dt = (t_end - t_start) / n_steps;
}

int Grid::nearest_index(double s) const {
    const double slack = 0.5 * dt;
    if (!(s >= t_start - slack && s <= t_end + slack))
        throw DomainError("time " + std::to_string(s) + " outside grid [" + std::to_string(t_start) +
                          ", " + std::to_string(t_end) + "]");
    const long k = std::lround((s - t_start) / dt);
    return static_cast<int>(std::clamp<long>(k, 0, n_steps));
}

Path::Path(double horizon, std::vector<double> values) : horizon_(horizon), values_(std::move(values)) {
    if (!(horizon_ > 0.0)) throw ConfigError("Path: horizon must be positive");
    if (values_.size() < 2) throw ConfigError("Path: need at least two nodes");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("Path: non-finite value");
}

Path Path::constant(double horizon, int n_nodes, double c) {
    return Path(horizon, std::vector<double>(static_cast<std::size_t>(std::max(n_nodes, 0)), c));
}

double Path::operator()(double x) const noexcept {
    const int n = size();
    const double pos = (std::clamp(x, -horizon_, 0.0) + horizon_) / spacing();
    int j = static_cast<int>(std::floor(pos));
    if (j >= n - 1) return values_.back();
    if (j < 0) return values_.front();
    const double w = pos - j;
    return values_[j] + w * (values_[j + 1] - values_[j]);
}

bool Path::same_layout(const Path& other) const noexcept {
    return size() == other.size() && horizon_ == other.horizon_;
}

Path& Path::operator+=(const Path& other) {
    if (!same_layout(other)) throw ShapeError("Path: layouts differ");
    for (int k = 0; k < size(); ++k) values_[k] += other.values_[k];
    return *this;
}

Path& Path::operator-=(const Path& other) {
    if (!same_layout(other)) throw ShapeError("Path: layouts differ");
    for (int k = 0; k < size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

Path& Path::operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
}

Path operator+(Path a, const Path& b) { return a += b; }
Path operator-(Path a, const Path& b) { return a -= b; }
Path operator*(double a, Path p) { return p *= a; }

double sup_norm(const Path& eta) {
    double m = 0.0;
    for (double v : eta.values()) m = std::max(m, std::abs(v));
    return m;
}

Trajectory::Trajectory(Grid grid_, Path prefix_, std::vector<double> values_)
    : grid(grid_), prefix(std::move(prefix_)), values(std::move(values_)) {
    if (static_cast<int>(values.size()) != grid.n_points())
        throw ShapeError("Trajectory: values must cover every grid node");
    if (prefix.present() != values.front())
        throw DomainError("Trajectory: prefix must end at the initial value");
}

void fill_window(const Path& prefix, std::span<const double> body, const Grid& grid, int step,
                 std::span<double> out) {
    const int n = static_cast<int>(out.size());
    const double T = prefix.horizon();
    if (step == 0 && n == prefix.size()) {
        std::copy(prefix.values().begin(), prefix.values().end(), out.begin());
        return;
    }
    const double h = T / (n - 1);
    const double elapsed = step * grid.dt;
    for (int i = 0; i + 1 < n; ++i) {
        const double u = elapsed + (-T + i * h);  // time offset from t_start
        if (u < 0.0) {
            out[i] = prefix(u);
        } else {
            const double pos = u / grid.dt;
            int j = static_cast<int>(std::floor(pos));
            if (j >= step) {
                out[i] = body[step];
                continue;
            }
            const double w = std::clamp(pos - j, 0.0, 1.0);
            out[i] = body[j] + w * (body[j + 1] - body[j]);
        }
    }
    out[n - 1] = body[step];
}

Path window(const Trajectory& traj, double s) { return window(traj, s, traj.prefix.size()); }

Path window(const Trajectory& traj, double s, int n_nodes) {
    if (n_nodes < 2) throw ConfigError("window: need at least two nodes");
    if (s < traj.grid.t_start - 1e-12 || s > traj.grid.t_end + 1e-12)
        throw DomainError("window: time outside [t, T]");
    const int step = traj.grid.nearest_index(s);
    std::vector<double> out(static_cast<std::size_t>(n_nodes));
    fill_window(traj.prefix, traj.values, traj.grid, step, out);
    return Path(traj.prefix.horizon(), std::move(out));
}

double extend_canonical(std::span<const double> values, const Grid& grid, double s) {
    if (static_cast<int>(values.size()) != grid.n_points())
        throw ShapeError("extend_canonical: values/grid mismatch");
    if (s <= grid.t_start) return values.front();
    if (s >= grid.t_end) return values.back();
    const double pos = (s - grid.t_start) / grid.dt;
    int j = std::min(static_cast<int>(std::floor(pos)), grid.n_steps - 1);
    const double w = pos - j;
    return values[j] + w * (values[j + 1] - values[j]);
}

std::vector<double> forward_integral_weights(const Integrand& psi, double horizon, int n_nodes) {
    if (n_nodes < 2) throw ConfigError("forward_integral_weights: need at least two nodes");
    const double h = horizon / (n_nodes - 1);
    std::vector<double> w(static_cast<std::size_t>(n_nodes));
    for (int k = 0; k < n_nodes; ++k) {
        const double x = k == n_nodes - 1 ? 0.0 : -horizon + k * h;
        const double c = (k == 0 || k == n_nodes - 1) ? 0.5 : 1.0;
        w[k] = -c * h * psi.df(x);
    }
    w.back() += psi.f(0.0);
    return w;
}

double forward_integral(const Integrand& psi, const Path& eta) {
    const auto w = forward_integral_weights(psi, eta.horizon(), eta.size());
    return dot(w, eta.values());
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void write_path_csv(std::ostream& os, const Path& eta) {
    os << "x,value\n" << std::setprecision(17);
    for (int k = 0; k < eta.size(); ++k) os << eta.node(k) << ',' << eta[k] << '\n';
}

Path read_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,value", 0) != 0)
        throw ConfigError("path csv: missing 'x,value' header");
    std::vector<double> xs, vs;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        double x = 0.0, v = 0.0;
        char comma = 0;
        if (!(row >> x >> comma >> v) || comma != ',')
            throw ConfigError("path csv: malformed row at line " + std::to_string(lineno));
        if (!xs.empty() && !(x > xs.back()))
            throw ConfigError("path csv: x must be ascending (line " + std::to_string(lineno) + ")");
        xs.push_back(x);
        vs.push_back(v);
    }
    if (xs.size() < 2) throw ConfigError("path csv: need at least two rows");
    if (std::abs(xs.back()) > 1e-12) throw ConfigError("path csv: last x must be 0");
    return Path(-xs.front(), std::move(vs));
}

}  // namespace svpde
