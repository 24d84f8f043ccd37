#include "svpde/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "svpde/error.hpp"

namespace svpde {

DriverSpec DriverSpec::linear(double a, double b, std::vector<double> c) {
    DriverSpec d;
    d.f = [a, b, c = std::move(c)](double, std::span<const double>, double y, std::span<const double> z) {
        double acc = a * y + b;
        for (std::size_t i = 0; i < c.size() && i < z.size(); ++i) acc += c[i] * z[i];
        return acc;
    };
    d.lipschitz = std::abs(a);
    return d;
}

int RegressionBasisSpec::size(int dim) const {
    if (degree < 0 || degree > 3) throw ConfigError("regression basis: degree must lie in [0, 3]");
    if (kind == Kind::Polynomial) {
        // monomials of total degree 1..degree in dim variables
        long long count = 1;
        for (int i = 1; i <= degree; ++i) count = count * (dim + i) / i;
        return static_cast<int>(count - 1);
    }
    if (fourier_pairs < 0) throw ConfigError("regression basis: fourier_pairs must be non-negative");
    return degree + (running_max ? 1 : 0) + (running_integral ? 1 : 0) + 2 * fourier_pairs;
}

namespace {

using Eigen::MatrixXd;

void monomials(int dim, int degree, std::vector<std::vector<int>>& out) {
    std::vector<int> e(dim, 0);
    // enumerate exponent vectors by total degree, then lexicographically
    for (int total = 1; total <= degree; ++total) {
        std::function<void(int, int)> rec = [&](int j, int left) {
            if (j == dim - 1) {
                e[j] = left;
                out.push_back(e);
                return;
            }
            for (int v = left; v >= 0; --v) {
                e[j] = v;
                rec(j + 1, left - v);
            }
        };
        rec(0, total);
    }
}

class MarkovAdapter {
public:
    MarkovAdapter(const MarkovPaths& paths, const RegressionBasisSpec& basis) : paths_(paths), basis_(basis) {
        if (basis.kind != RegressionBasisSpec::Kind::Polynomial)
            throw ConfigError("solve_bsde: Markovian paths need a polynomial basis");
        basis.size(paths.dim);
        monomials(paths.dim, basis.degree, exponents_);
    }

    const Grid& grid() const noexcept { return paths_.grid; }
    int n_paths() const noexcept { return paths_.n_paths; }
    int dim() const noexcept { return paths_.dim; }

    MatrixXd features(int k) const {
        MatrixXd phi(paths_.n_paths, static_cast<Eigen::Index>(exponents_.size()));
#pragma omp parallel for schedule(static)
        for (int p = 0; p < paths_.n_paths; ++p)
            for (std::size_t j = 0; j < exponents_.size(); ++j) {
                double v = 1.0;
                for (int c = 0; c < paths_.dim; ++c)
                    for (int e = 0; e < exponents_[j][c]; ++e) v *= paths_.at(p, k, c);
                phi(p, static_cast<Eigen::Index>(j)) = v;
            }
        return phi;
    }

    double driver(const DriverSpec& d, int p, int k, double y, std::span<const double> z) const {
        const std::span<const double> x(&paths_.x[(static_cast<std::size_t>(k) * paths_.n_paths + p) * paths_.dim],
                                        static_cast<std::size_t>(paths_.dim));
        if (!d.f) throw ConfigError("driver: Markovian problems need the state form F(t, x, y, z)");
        return d.f(paths_.grid.time(k), x, y, z);
    }

private:
    const MarkovPaths& paths_;
    const RegressionBasisSpec& basis_;
    std::vector<std::vector<int>> exponents_;
};

class PathAdapter {
public:
    PathAdapter(const PathTrajectories& paths, const RegressionBasisSpec& basis, bool need_features)
        : paths_(paths), basis_(basis), n_(paths.n_paths), m_(paths.grid.n_points()) {
        if (basis.kind != RegressionBasisSpec::Kind::PathFeatures)
            throw ConfigError("solve_bsde: path-dependent trajectories need path features");
        basis.size(1);
        if (basis.fourier_pairs > 0 && basis.feature_nodes < 2)
            throw ConfigError("regression basis: feature_nodes must be at least 2");
        // path-major copy for window assembly
        bodies_.resize(static_cast<std::size_t>(n_) * m_);
#pragma omp parallel for schedule(static)
        for (int p = 0; p < n_; ++p)
            for (int k = 0; k < m_; ++k) bodies_[static_cast<std::size_t>(p) * m_ + k] = paths.at(p, k);
        if (!need_features) return;
        if (basis.running_max && paths.running_max.empty()) {
            max_.resize(bodies_.size());
#pragma omp parallel for schedule(static)
            for (int p = 0; p < n_; ++p) {
                double run = -INFINITY;
                for (int k = 0; k < m_; ++k) max_[static_cast<std::size_t>(k) * n_ + p] = run = std::max(run, paths.at(p, k));
            }
        }
        if (basis.running_integral) {
            integral_.resize(bodies_.size());
            const double h = paths.grid.dt;
#pragma omp parallel for schedule(static)
            for (int p = 0; p < n_; ++p) {
                double acc = 0.0;
                integral_[p] = 0.0;
                for (int k = 1; k < m_; ++k)
                    integral_[static_cast<std::size_t>(k) * n_ + p] = acc += 0.5 * h * (paths.at(p, k - 1) + paths.at(p, k));
            }
        }
        const int nf = 2 * basis.fourier_pairs;
        if (nf > 0) {
            const FourierBasis fb(paths.prefix.horizon(), nf - 1);
            const int nodes = basis.feature_nodes;
            const double h = paths.prefix.horizon() / (nodes - 1);
            fourier_weights_.assign(static_cast<std::size_t>(nf) * nodes, 0.0);
            for (int i = 0; i < nf; ++i)
                for (int j = 0; j < nodes; ++j) {
                    const double x = j == nodes - 1 ? 0.0 : -paths.prefix.horizon() + j * h;
                    const double w = (j == 0 || j == nodes - 1) ? 0.5 * h : h;
                    fourier_weights_[static_cast<std::size_t>(i) * nodes + j] = w * fb.e(i, x);
                }
        }
    }

    const Grid& grid() const noexcept { return paths_.grid; }
    int n_paths() const noexcept { return n_; }
    int dim() const noexcept { return 1; }

    std::span<const double> body(int p) const noexcept {
        return {bodies_.data() + static_cast<std::size_t>(p) * m_, static_cast<std::size_t>(m_)};
    }

    MatrixXd features(int k) const {
        const int B = basis_.size(1);
        const int nf = 2 * basis_.fourier_pairs;
        const int nodes = basis_.feature_nodes;
        MatrixXd phi(n_, B);
#pragma omp parallel
        {
            std::vector<double> win(nf > 0 ? nodes : 0);
#pragma omp for schedule(static)
            for (int p = 0; p < n_; ++p) {
                const double x = paths_.at(p, k);
                int col = 0;
                double power = 1.0;
                for (int d = 1; d <= basis_.degree; ++d) phi(p, col++) = power *= x;
                if (basis_.running_max)
                    phi(p, col++) = paths_.running_max.empty() ? max_[static_cast<std::size_t>(k) * n_ + p]
                                                               : paths_.running_max[static_cast<std::size_t>(k) * n_ + p];
                if (basis_.running_integral) phi(p, col++) = integral_[static_cast<std::size_t>(k) * n_ + p];
                if (nf > 0) {
                    fill_window(paths_.prefix, body(p), paths_.grid, k, win);
                    for (int i = 0; i < nf; ++i) {
                        double acc = 0.0;
                        const double* w = &fourier_weights_[static_cast<std::size_t>(i) * nodes];
                        for (int j = 0; j < nodes; ++j) acc += w[j] * win[j];
                        phi(p, col++) = acc;
                    }
                }
            }
        }
        return phi;
    }

    double driver(const DriverSpec& d, int p, int k, double y, std::span<const double> z) const {
        if (d.window_f) {
            std::vector<double> win(static_cast<std::size_t>(paths_.prefix.size()));
            fill_window(paths_.prefix, body(p), paths_.grid, k, win);
            return d.window_f(paths_.grid.time(k), Path(paths_.prefix.horizon(), std::move(win)), y, z[0]);
        }
        const double x = paths_.at(p, k);
        return d.f(paths_.grid.time(k), std::span<const double>(&x, 1), y, z);
    }

private:
    const PathTrajectories& paths_;
    const RegressionBasisSpec& basis_;
    int n_, m_;
    std::vector<double> bodies_, max_, integral_, fourier_weights_;
};

template <class Adapter>
BsdeSolution backward(const Adapter& problem, const DriverSpec& driver, std::span<const double> terminal,
                      const NoiseBundle& noise, const BsdeOptions& options) {
    const Grid& grid = problem.grid();
    const int n = problem.n_paths(), d = problem.dim(), N = grid.n_steps;
    if (static_cast<int>(terminal.size()) != n) throw ShapeError("solve_bsde: terminal samples do not match paths");
    noise.check_shape(n, N, d);
    const int B = options.basis.size(d) + 1;
    if (static_cast<long long>(B) * 10 > n)
        throw ConfigError("solve_bsde: basis size " + std::to_string(B) + " exceeds n_paths / 10 = " +
                          std::to_string(n / 10));

    BsdeSolution sol;
    sol.grid = grid;
    sol.n_paths = n;
    sol.dim = d;
    std::vector<double> R(terminal.begin(), terminal.end());
    for (double v : R)
        if (!std::isfinite(v)) throw NumericalError("solve_bsde: non-finite terminal value");

    if (driver.is_zero() && !options.store_fields) {
        sol.y0 = mean_and_se(R);
        sol.realized0 = std::move(R);
        return sol;
    }
    if (options.store_fields) {
        sol.Y.resize(static_cast<std::size_t>(grid.n_points()) * n);
        sol.Z.resize(static_cast<std::size_t>(N) * n * d);
        std::copy(R.begin(), R.end(), sol.Y.begin() + static_cast<std::ptrdiff_t>(N) * n);
    }
    sol.z0.assign(d, 0.0);

    Eigen::MatrixXd rhs(n, 1 + d);
    std::vector<double> F(n);
    for (int k = N - 1; k >= 0; --k) {
        const Eigen::MatrixXd phi = problem.features(k);
        const double inv_dt = 1.0 / grid.dt;
        Eigen::MatrixXd yz(n, 1 + d);
        if (options.z_estimator == ZEstimator::Plain) {
            for (int p = 0; p < n; ++p) {
                rhs(p, 0) = R[p];
                for (int c = 0; c < d; ++c) rhs(p, 1 + c) = R[p] * noise.increment(p, k, c) * inv_dt;
            }
            yz = LeastSquares(phi, rhs, options.basis.least_squares).fitted();
        } else {
            const Eigen::MatrixXd y_only = LeastSquares(phi, Eigen::Map<const Eigen::VectorXd>(R.data(), n),
                                                        options.basis.least_squares)
                                               .fitted();
            Eigen::MatrixXd zr(n, d);
            for (int p = 0; p < n; ++p)
                for (int c = 0; c < d; ++c) zr(p, c) = (R[p] - y_only(p, 0)) * noise.increment(p, k, c) * inv_dt;
            yz.col(0) = y_only.col(0);
            yz.rightCols(d) = LeastSquares(phi, zr, options.basis.least_squares).fitted();
        }

        if (!driver.is_zero()) {
#pragma omp parallel for schedule(static)
            for (int p = 0; p < n; ++p) {
                double z[16];
                std::vector<double> zbig;
                double* zp = z;
                if (d > 16) {
                    zbig.resize(d);
                    zp = zbig.data();
                }
                for (int c = 0; c < d; ++c) zp[c] = yz(p, 1 + c);
                F[p] = problem.driver(driver, p, k, yz(p, 0), std::span<const double>(zp, static_cast<std::size_t>(d)));
            }
        }
        for (int p = 0; p < n; ++p) {
            const double f = driver.is_zero() ? 0.0 : F[p];
            if (!std::isfinite(f)) throw NumericalError("solve_bsde: non-finite driver value at step " + std::to_string(k));
            R[p] += f * grid.dt;
            if (options.store_fields) {
                sol.Y[static_cast<std::size_t>(k) * n + p] = yz(p, 0) + f * grid.dt;
                for (int c = 0; c < d; ++c) sol.Z[(static_cast<std::size_t>(k) * n + p) * d + c] = yz(p, 1 + c);
            }
        }
        if (k == 0)
            for (int c = 0; c < d; ++c) sol.z0[c] = yz.col(1 + c).mean();
    }
    sol.y0 = mean_and_se(R);
    sol.realized0 = std::move(R);
    return sol;
}

template <class Adapter>
std::vector<double> k_residual(const Adapter& problem, const BsdeSolution& sol, const DriverSpec& driver,
                               const NoiseBundle& noise) {
    if (!sol.has_fields()) throw ConfigError("extract_K_residual: solution was solved without fields");
    const int n = sol.n_paths, d = sol.dim, N = sol.grid.n_steps;
    if (problem.n_paths() != n || problem.grid().n_steps != N) throw ShapeError("extract_K_residual: shape mismatch");
    noise.check_shape(n, N, d);
    std::vector<double> K(static_cast<std::size_t>(N + 1) * n, 0.0);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p) {
        std::vector<double> z(d);
        double acc = 0.0;
        for (int k = 0; k < N; ++k) {
            for (int c = 0; c < d; ++c) z[c] = sol.z(p, k, c);
            const double f = driver.is_zero() ? 0.0 : problem.driver(driver, p, k, sol.y(p, k), z);
            double zdw = 0.0;
            for (int c = 0; c < d; ++c) zdw += z[c] * noise.increment(p, k, c);
            acc += sol.y(p, k) - sol.y(p, k + 1) - f * sol.grid.dt + zdw;
            K[static_cast<std::size_t>(k + 1) * n + p] = acc;
        }
    }
    return K;
}

}  // namespace

BsdeSolution solve_bsde(const DriverSpec& driver, std::span<const double> terminal, const MarkovPaths& paths,
                        const NoiseBundle& noise, const BsdeOptions& options) {
    return backward(MarkovAdapter(paths, options.basis), driver, terminal, noise, options);
}

BsdeSolution solve_bsde(const DriverSpec& driver, std::span<const double> terminal, const PathTrajectories& paths,
                        const NoiseBundle& noise, const BsdeOptions& options) {
    const bool need = !(driver.is_zero() && !options.store_fields);
    return backward(PathAdapter(paths, options.basis, need), driver, terminal, noise, options);
}

Eigen::MatrixXd regression_features(const RegressionBasisSpec& basis, const MarkovPaths& paths, int k) {
    return MarkovAdapter(paths, basis).features(k);
}

Eigen::MatrixXd regression_features(const RegressionBasisSpec& basis, const PathTrajectories& paths, int k) {
    return PathAdapter(paths, basis, true).features(k);
}

std::vector<double> extract_K_residual(const BsdeSolution& solution, const DriverSpec& driver,
                                       const MarkovPaths& paths, const NoiseBundle& noise) {
    RegressionBasisSpec basis;
    return k_residual(MarkovAdapter(paths, basis), solution, driver, noise);
}

std::vector<double> extract_K_residual(const BsdeSolution& solution, const DriverSpec& driver,
                                       const PathTrajectories& paths, const NoiseBundle& noise) {
    RegressionBasisSpec basis;
    basis.kind = RegressionBasisSpec::Kind::PathFeatures;
    return k_residual(PathAdapter(paths, basis, false), solution, driver, noise);
}

ComparisonReport comparison_check(const BsdeSolution& sub, const BsdeSolution& super, double tolerance) {
    if (!sub.has_fields() || !super.has_fields()) throw ConfigError("comparison_check: solutions need fields");
    if (sub.Y.size() != super.Y.size()) throw ShapeError("comparison_check: solutions differ in shape");
    ComparisonReport r;
    r.pairs = static_cast<long long>(sub.Y.size());
    r.worst_violation = -INFINITY;
    for (std::size_t i = 0; i < sub.Y.size(); ++i) {
        const double gap = sub.Y[i] - super.Y[i];
        r.worst_violation = std::max(r.worst_violation, gap);
        if (gap > tolerance) ++r.violations;
    }
    r.violation_fraction = static_cast<double>(r.violations) / static_cast<double>(r.pairs);
    return r;
}

BsdeNorms bsde_norms(const BsdeSolution& s, double p, std::span<const double> K) {
    if (!(p >= 1.0)) throw ConfigError("bsde_norms: p must be at least 1");
    if (!s.has_fields()) throw ConfigError("bsde_norms: solution was solved without fields");
    const int n = s.n_paths, N = s.grid.n_steps;
    std::vector<double> sup(n), h2(n), k2(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double m = 0.0, acc = 0.0;
        for (int k = 0; k <= N; ++k) m = std::max(m, std::abs(s.y(i, k)));
        for (int k = 0; k < N; ++k)
            for (int c = 0; c < s.dim; ++c) acc += s.z(i, k, c) * s.z(i, k, c) * s.grid.dt;
        sup[i] = std::pow(m, p);
        h2[i] = acc;
        if (!K.empty()) k2[i] = K[static_cast<std::size_t>(N) * n + i] * K[static_cast<std::size_t>(N) * n + i];
    }
    return {mean_and_se(sup), mean_and_se(h2), mean_and_se(k2)};
}

LimitRow limit_row(int n_index, const BsdeSolution& a, std::span<const double> Ka, const BsdeSolution& b,
                   std::span<const double> Kb, double q) {
    if (a.Y.size() != b.Y.size() || a.Z.size() != b.Z.size() || !a.has_fields())
        throw ShapeError("limit_row: solutions differ in shape or lack fields");
    if (!(q >= 1.0 && q < 2.0)) throw ConfigError("limit_row: q must lie in [1, 2)");
    const int n = a.n_paths, N = a.grid.n_steps;
    std::vector<double> zg(n), yg(n);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0, sup = 0.0;
        for (int k = 0; k < N; ++k) {
            double r2 = 0.0;
            for (int c = 0; c < a.dim; ++c) r2 += (a.z(i, k, c) - b.z(i, k, c)) * (a.z(i, k, c) - b.z(i, k, c));
            acc += std::pow(std::sqrt(r2), q) * a.grid.dt;
        }
        for (int k = 0; k <= N; ++k) sup = std::max(sup, std::abs(a.y(i, k) - b.y(i, k)));
        zg[i] = acc;
        yg[i] = sup * sup;
    }
    LimitRow row{n_index, mean_and_se(zg), mean_and_se(yg), {}};
    if (!Ka.empty() && !Kb.empty()) {
        std::vector<double> gap(n);
        for (int k = 0; k <= N; ++k) {
            for (int i = 0; i < n; ++i)
                gap[i] = std::abs(Ka[static_cast<std::size_t>(k) * n + i] - Kb[static_cast<std::size_t>(k) * n + i]);
            const Estimate e = mean_and_se(gap);
            if (k == 0 || e.value > row.k_gap.value) row.k_gap = e;
        }
    }
    return row;
}

std::vector<LimitRow> limit_experiment(
    const std::function<std::pair<BsdeSolution, std::vector<double>>(int n)>& solve,
    const std::pair<BsdeSolution, std::vector<double>>& limit, std::span<const int> schedule, double q) {
    std::vector<LimitRow> rows;
    for (int n : schedule) {
        const auto approx = solve(n);
        rows.push_back(limit_row(n, approx.first, approx.second, limit.first, limit.second, q));
    }
    return rows;
}

void write_limit_csv(std::ostream& os, std::span<const LimitRow> rows) {
    os << "n,z_gap_q,y_gap_sup2,k_gap_max,se_z_gap_q,se_y_gap_sup2,se_k_gap_max\n";
    os.precision(17);
    for (const auto& r : rows)
        os << r.n << ',' << r.z_gap.value << ',' << r.y_gap.value << ',' << r.k_gap.value << ',' << r.z_gap.se << ','
           << r.y_gap.se << ',' << r.k_gap.se << '\n';
}

}  // namespace svpde
