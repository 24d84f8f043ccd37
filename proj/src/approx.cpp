#include "svpde/approx.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "svpde/error.hpp"
#include "svpde/rng.hpp"

namespace svpde {

namespace {

double unit_bump(double r2) {
    // exp(1/(r^2 - 1)) on the open unit ball, zero outside
    return r2 < 1.0 ? std::exp(1.0 / (r2 - 1.0)) : 0.0;
}

double ball_normalization(int q) {
    static const GaussLegendre radial(400);
    const double radial_integral = radial.integrate(
        [q](double r) { return std::pow(r, q - 1) * unit_bump(r * r); }, 0.0, 1.0);
    const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * q) / std::tgamma(0.5 * q);
    return 1.0 / (sphere * radial_integral);
}

double unit_bump_1d_normalization() {
    static const double c = [] {
        const GaussLegendre gl(400);
        return 1.0 / gl.integrate([](double s) { return unit_bump(s * s); }, -1.0, 1.0);
    }();
    return c;
}

// Inverse CDF of the normalized 1-D unit bump, tabulated once.
double unit_bump_quantile(double u) {
    static const std::vector<double> table = [] {
        constexpr int n = 8192;
        std::vector<double> cdf(n + 1, 0.0);
        const double h = 2.0 / n;
        for (int i = 1; i <= n; ++i) {
            const double a = -1.0 + (i - 1) * h, b = -1.0 + i * h;
            cdf[i] = cdf[i - 1] + 0.5 * h * (unit_bump(a * a) + unit_bump(b * b));
        }
        for (double& c : cdf) c /= cdf.back();
        return cdf;
    }();
    const auto it = std::lower_bound(table.begin(), table.end(), u);
    if (it == table.begin()) return -1.0;
    if (it == table.end()) return 1.0;
    const auto i = static_cast<int>(it - table.begin());
    const double lo = table[i - 1], hi = table[i];
    const double w = hi > lo ? (u - lo) / (hi - lo) : 0.5;
    const double h = 2.0 / (static_cast<double>(table.size()) - 1.0);
    return -1.0 + (i - 1 + w) * h;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

Mollifier::Mollifier(int dimension, int index, int nodes) {
    if (dimension < 1) throw ConfigError("Mollifier: dimension must be positive");
    if (index < 1) throw ConfigError("Mollifier: index must be positive");
    if (nodes < kMinNodes)
        throw ConfigError("Mollifier: at least " + std::to_string(kMinNodes) + " quadrature nodes are required");
    spec_ = {dimension, index, ball_normalization(dimension)};
    const int q = dimension;
    const double c = spec_.normalization;

    auto add = [&](std::initializer_list<double> point, double w) {
        double r2 = 0.0;
        for (double v : point) r2 += v * v;
        if (r2 >= 1.0) return;
        offsets_.insert(offsets_.end(), point.begin(), point.end());
        weights_.push_back(w * c * unit_bump(r2));
    };

    if (q <= 3) {
        // radial Gauss–Legendre on [0, 1] times an exact-for-constants angular rule
        const GaussLegendre radial(nodes);
        std::vector<double> r(nodes), wr(nodes);
        for (int i = 0; i < nodes; ++i) {
            r[i] = 0.5 * (radial.nodes[i] + 1.0);
            wr[i] = 0.5 * radial.weights[i];
        }
        if (q == 1) {
            for (int i = 0; i < nodes; ++i) {
                add({r[i]}, wr[i]);
                add({-r[i]}, wr[i]);
            }
        } else if (q == 2) {
            const int na = nodes;
            for (int i = 0; i < nodes; ++i)
                for (int a = 0; a < na; ++a) {
                    const double th = 2.0 * std::numbers::pi * (a + 0.5) / na;
                    add({r[i] * std::cos(th), r[i] * std::sin(th)}, wr[i] * r[i] * 2.0 * std::numbers::pi / na);
                }
        } else {
            const int na = nodes;
            const GaussLegendre polar(std::max(kMinNodes / 2, nodes / 2));
            for (int i = 0; i < nodes; ++i)
                for (std::size_t b = 0; b < polar.nodes.size(); ++b) {
                    const double ct = polar.nodes[b], st = std::sqrt(1.0 - ct * ct);
                    for (int a = 0; a < na; ++a) {
                        const double ph = 2.0 * std::numbers::pi * (a + 0.5) / na;
                        add({r[i] * st * std::cos(ph), r[i] * st * std::sin(ph), r[i] * ct},
                            wr[i] * r[i] * r[i] * polar.weights[b] * 2.0 * std::numbers::pi / na);
                    }
                }
        }
        return;
    }

    const GaussLegendre gl(nodes);
    std::vector<int> idx(q, 0);
    std::vector<double> point(q);
    while (true) {
        double r2 = 0.0, w = 1.0;
        for (int j = 0; j < q; ++j) {
            point[j] = gl.nodes[idx[j]];
            r2 += point[j] * point[j];
            w *= gl.weights[idx[j]];
        }
        if (r2 < 1.0) {
            offsets_.insert(offsets_.end(), point.begin(), point.end());
            weights_.push_back(w * c * unit_bump(r2));
        }
        int j = 0;
        while (j < q && ++idx[j] == nodes) idx[j++] = 0;
        if (j == q) break;
    }
}

double Mollifier::density(std::span<const double> w) const {
    const double n = spec_.index;
    double r2 = 0.0;
    for (double v : w) r2 += (n * v) * (n * v);
    return std::pow(n, spec_.dimension) * spec_.normalization * unit_bump(r2);
}

double Mollifier::mass() const {
    double acc = 0.0;
    for (double w : weights_) acc += w;
    return acc;
}

double Mollifier::apply(const VectorFunction& g, std::span<const double> x) const {
    const int q = spec_.dimension;
    if (static_cast<int>(x.size()) != q) throw ShapeError("Mollifier: point dimension mismatch");
    const double inv_n = 1.0 / spec_.index;
    std::vector<double> shifted(q);
    double acc = 0.0;
    for (std::size_t p = 0; p < weights_.size(); ++p) {
        for (int j = 0; j < q; ++j) shifted[j] = x[j] - inv_n * offsets_[p * q + j];
        acc += weights_[p] * g(shifted);
    }
    return acc;
}

double Mollifier::apply(const std::function<double(double)>& g, double x) const {
    if (spec_.dimension != 1) throw ShapeError("Mollifier: scalar apply needs dimension 1");
    const double inv_n = 1.0 / spec_.index;
    double acc = 0.0;
    for (std::size_t p = 0; p < weights_.size(); ++p) acc += weights_[p] * g(x - inv_n * offsets_[p]);
    return acc;
}

double mollify_coefficient(const VectorFunction& g, int index, std::span<const double> x, int nodes) {
    return Mollifier(static_cast<int>(x.size()), index, nodes).apply(g, x);
}

// ---------------------------------------------------------------------------------------------

FourierBasis::FourierBasis(double horizon, int max_index) : horizon_(horizon), max_index_(max_index) {
    if (!(horizon > 0.0)) throw ConfigError("FourierBasis: horizon must be positive");
    if (max_index < 0) throw ConfigError("FourierBasis: max_index must be non-negative");
}

double FourierBasis::frequency(int i) const {
    return 2.0 * std::numbers::pi * ((i + 1) / 2) / horizon_;
}

double FourierBasis::e(int i, double x) const {
    if (i == -1) return x;
    if (i == 0) return 1.0 / std::sqrt(horizon_);
    const double amp = std::sqrt(2.0 / horizon_);
    const double arg = frequency(i) * (x + horizon_);
    return i % 2 == 1 ? amp * std::sin(arg) : amp * std::cos(arg);
}

double FourierBasis::antiderivative(int i, double x) const {
    if (i == 0) return (x + horizon_) / std::sqrt(horizon_);
    const double amp = std::sqrt(2.0 / horizon_);
    const double w = frequency(i);
    const double arg = w * (x + horizon_);
    return i % 2 == 1 ? amp * (1.0 - std::cos(arg)) / w : amp * std::sin(arg) / w;
}

double FourierBasis::x_moment(int i) const {
    if (i == 0) return -0.5 * horizon_ * std::sqrt(horizon_);
    if (i % 2 == 0) return 0.0;
    return -std::sqrt(2.0 / horizon_) * horizon_ / frequency(i);
}

double FourierBasis::a(int i) const {
    if (i == -1) return -1.0 / horizon_;
    return x_moment(i) / horizon_;
}

Path lambda_op(const Path& eta) {
    const double slope = (eta.present() - eta.oldest()) / eta.horizon();
    return Path::from_function(eta.horizon(), eta.size(), [slope](double x) { return slope * x; });
}

double fourier_coeff(const Path& eta, int i, const FourierBasis& basis) {
    if (i < 0 || i > basis.max_index()) throw DomainError("fourier_coeff: index outside the basis");
    const double at_zero = basis.antiderivative(i, 0.0);
    const Integrand psi{[&basis, i, at_zero](double x) { return at_zero - basis.antiderivative(i, x); },
                        [&basis, i](double x) { return -basis.e(i, x); }};
    return forward_integral(psi, eta);
}

FejerOperator::FejerOperator(const FourierBasis& basis, int order, double horizon, int n_nodes)
    : horizon_(horizon), order_(order), n_nodes_(n_nodes) {
    if (order < 0 || order > basis.max_index()) throw ConfigError("FejerOperator: order outside the basis");
    if (n_nodes < 2) throw ConfigError("FejerOperator: need at least two nodes");
    if (basis.horizon() != horizon) throw ConfigError("FejerOperator: basis horizon mismatch");
    table_.resize(static_cast<std::size_t>(order + 1) * n_nodes);
    const double h = horizon / (n_nodes - 1);
    for (int i = 0; i <= order; ++i)
        for (int k = 0; k < n_nodes; ++k)
            table_[static_cast<std::size_t>(i) * n_nodes + k] = basis.e(i, k == n_nodes - 1 ? 0.0 : -horizon + k * h);
}

std::vector<double> FejerOperator::residual_coefficients(const Path& eta) const {
    if (eta.size() != n_nodes_ || eta.horizon() != horizon_) throw ShapeError("FejerOperator: layout mismatch");
    const double slope = (eta.present() - eta.oldest()) / horizon_;
    std::vector<double> residual(n_nodes_);
    for (int k = 0; k < n_nodes_; ++k) residual[k] = eta[k] - slope * eta.node(k);
    const double h = horizon_ / (n_nodes_ - 1);
    std::vector<double> c(order_ + 1);
    for (int i = 0; i <= order_; ++i) {
        const double* e = &table_[static_cast<std::size_t>(i) * n_nodes_];
        double acc = 0.5 * (residual.front() * e[0] + residual.back() * e[n_nodes_ - 1]);
        for (int k = 1; k + 1 < n_nodes_; ++k) acc += residual[k] * e[k];
        c[i] = acc * h;
    }
    return c;
}

Path FejerOperator::synthesize(std::span<const double> coeffs, double slope) const {
    std::vector<double> out(n_nodes_);
    const double h = horizon_ / (n_nodes_ - 1);
    for (int k = 0; k < n_nodes_; ++k) out[k] = slope * (k == n_nodes_ - 1 ? 0.0 : -horizon_ + k * h);
    for (int i = 0; i <= order_ && i < static_cast<int>(coeffs.size()); ++i) {
        const double wc = weight(i) * coeffs[i];
        const double* e = &table_[static_cast<std::size_t>(i) * n_nodes_];
        for (int k = 0; k < n_nodes_; ++k) out[k] += wc * e[k];
    }
    return Path(horizon_, std::move(out));
}

Path FejerOperator::fejer_part(const Path& eta) const {
    return synthesize(residual_coefficients(eta), 0.0);
}

Path FejerOperator::apply(const Path& eta) const {
    const double slope = (eta.present() - eta.oldest()) / horizon_;
    return synthesize(residual_coefficients(eta), slope);
}

Path fejer_project(const Path& eta, int order, const FourierBasis& basis) {
    return FejerOperator(basis, order, eta.horizon(), eta.size()).apply(eta);
}

// ---------------------------------------------------------------------------------------------

SmoothedTerminal::SmoothedTerminal(PathFunctional terminal, int index, double horizon, int n_nodes,
                                   TerminalForm form, int inner_subintervals)
    : terminal_(std::move(terminal)),
      index_(index),
      form_(form),
      basis_(horizon, std::max(index, 0)),
      fejer_(basis_, std::max(index, 0), horizon, n_nodes) {
    if (index < 1) throw ConfigError("smooth_terminal: index must be positive");
    if (inner_subintervals < 2) throw ConfigError("smooth_terminal: need at least two subintervals");
    const double T = horizon;
    if (form_ == TerminalForm::Auto)
        form_ = std::abs(T - 1.0) > 1e-9 ? TerminalForm::Displayed : TerminalForm::RawCoefficients;
    if (form_ == TerminalForm::Displayed) {
        if (std::abs(T - 1.0) <= 1e-9)
            throw ConfigError("smooth_terminal: the displayed form is singular at T = 1");
        const Path gamma = Path::from_function(T, n_nodes, [T](double x) { return -x / (T - 1.0); });
        direction_ = fejer_.apply(gamma) +
                     Path::from_function(T, n_nodes, [T](double x) { return x / (T * (T - 1.0)); });
    } else {
        std::vector<double> a(index + 1);
        for (int i = 0; i <= index; ++i) a[i] = basis_.a(i);
        direction_ = fejer_.synthesize(a, basis_.a(-1));
    }

    // phi(y) = c exp(1/(y^2 - T^2)) on [0, T), phi_n(y) = n phi(n y), supported on [0, T/n)
    const auto raw_phi = [T](double y) {
        const double d = y * y - T * T;
        return (y >= 0.0 && d < 0.0) ? std::exp(1.0 / d) : 0.0;
    };
    const GaussLegendre gl(400);
    const double c = 1.0 / gl.integrate(raw_phi, 0.0, T);
    const double support = T / index;
    const double h = support / inner_subintervals;
    for (int j = 0; j <= inner_subintervals; ++j) {
        const double y = j * h;
        const double trap = (j == 0 || j == inner_subintervals) ? 0.5 : 1.0;
        inner_x_.push_back(-T + y);
        inner_w_.push_back(trap * h * index * c * raw_phi(index * y));
    }
}

double SmoothedTerminal::inner_integral(const Path& eta) const {
    const double base = eta.oldest();
    double acc = 0.0;
    for (std::size_t j = 0; j < inner_x_.size(); ++j) acc += inner_w_[j] * (eta(inner_x_[j]) - base);
    return acc;
}

Path SmoothedTerminal::smoothed_argument(const Path& eta) const {
    if (eta.size() != fejer_.n_nodes() || eta.horizon() != basis_.horizon()) {
        const SmoothedTerminal other(terminal_, index_, eta.horizon(), eta.size(), form_,
                                     static_cast<int>(inner_x_.size()) - 1);
        return other.smoothed_argument(eta);
    }
    Path arg = fejer_.apply(eta);
    const double inner = inner_integral(eta);
    if (inner != 0.0) arg += inner * direction_;
    return arg;
}

double SmoothedTerminal::operator()(const Path& eta) const { return terminal_(smoothed_argument(eta)); }

GrowthBudget SmoothedTerminal::growth(const GrowthBudget& terminal_budget, double uniform_bound) const {
    const double scale = uniform_bound + 2.0 * sup_norm(direction_);
    return {terminal_budget.C * std::max(1.0, std::pow(scale, terminal_budget.m)), terminal_budget.m};
}

SmoothedTerminal smooth_terminal(PathFunctional terminal, int index, double horizon, int n_nodes, TerminalForm form) {
    return SmoothedTerminal(std::move(terminal), index, horizon, n_nodes, form);
}

// ---------------------------------------------------------------------------------------------

double FiniteDimSmoother::half_width(int j) noexcept { return std::ldexp(1.0, -j); }

FiniteDimSmoother::FiniteDimSmoother(VectorFunction base, int dimension, int k, FiniteDimSmoothingOptions options)
    : base_(std::move(base)), dim_(dimension), k_(k) {
    if (dimension < 1) throw ConfigError("smooth_finite_dim: dimension must be positive");
    if (k < 1) throw ConfigError("smooth_finite_dim: k must be positive");
    if (options.n_index >= 0 && dimension != options.n_index + 2)
        throw ConfigError("smooth_finite_dim: dimension " + std::to_string(dimension) +
                          " inconsistent with index " + std::to_string(options.n_index) + " (expected n+2)");
    monte_carlo_ = dimension > options.max_tensor_dim;
    const double c1 = unit_bump_1d_normalization();

    if (!monte_carlo_) {
        if (options.gl_nodes < 2) throw ConfigError("smooth_finite_dim: need at least two nodes per dimension");
        // 1-D rule against the bump, rescaled to unit discrete mass so constants and (by symmetry)
        // affine functions are reproduced to rounding
        const GaussLegendre gl(options.gl_nodes);
        std::vector<double> w1(options.gl_nodes);
        double total = 0.0;
        for (int i = 0; i < options.gl_nodes; ++i) total += w1[i] = gl.weights[i] * c1 * unit_bump(gl.nodes[i] * gl.nodes[i]);
        for (double& w : w1) w /= total;
        std::vector<int> idx(dim_, 0);
        while (true) {
            double w = 1.0;
            for (int j = 0; j < dim_; ++j) {
                offsets_.push_back(half_width(j) * gl.nodes[idx[j]] / k_);
                w *= w1[idx[j]];
            }
            weights_.push_back(w);
            int j = 0;
            while (j < dim_ && ++idx[j] == options.gl_nodes) idx[j++] = 0;
            if (j == dim_) break;
        }
    } else {
        const int pairs = std::max(1, options.mc_samples / 2);
        const KeyedNormal draws(options.seed);
        for (int p = 0; p < pairs; ++p) {
            std::vector<double> xi(dim_);
            for (int j = 0; j < dim_; ++j)
                xi[j] = half_width(j) * unit_bump_quantile(draws.uniform(p, j, 0, 7)) / k_;
            offsets_.insert(offsets_.end(), xi.begin(), xi.end());
            for (double& v : xi) v = -v;
            offsets_.insert(offsets_.end(), xi.begin(), xi.end());
            weights_.push_back(1.0 / (2.0 * pairs));
            weights_.push_back(1.0 / (2.0 * pairs));
        }
    }
}

Estimate FiniteDimSmoother::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_) throw ShapeError("smooth_finite_dim: point dimension mismatch");
    std::vector<double> shifted(dim_);
    const auto eval_at = [&](std::size_t p) {
        for (int j = 0; j < dim_; ++j) shifted[j] = x[j] - offsets_[p * dim_ + j];
        return base_(shifted);
    };
    if (!monte_carlo_) {
        double acc = 0.0;
        for (std::size_t p = 0; p < weights_.size(); ++p) acc += weights_[p] * eval_at(p);
        return {acc, 0.0};
    }
    std::vector<double> pair_means(weights_.size() / 2);
    for (std::size_t q = 0; q < pair_means.size(); ++q) pair_means[q] = 0.5 * (eval_at(2 * q) + eval_at(2 * q + 1));
    return mean_and_se(pair_means);
}

FiniteDimSmoother smooth_finite_dim(VectorFunction base, int dimension, int k, FiniteDimSmoothingOptions options) {
    return FiniteDimSmoother(std::move(base), dimension, k, options);
}

// ---------------------------------------------------------------------------------------------

std::vector<int> select_diagonal(const std::function<double(int, int, int)>& family,
                                 const std::function<double(int, int)>& target, int n_probes, int n_max,
                                 DiagonalOptions options) {
    if (n_probes < 1) throw ConfigError("select_diagonal: need at least one probe");
    std::vector<int> ks;
    int k_prev = 0;
    for (int n = 1; n <= n_max; ++n) {
        const double tol = 1.0 / n;
        const int active = std::min(n, n_probes);
        int k = k_prev;
        int worst_probe = 0;
        while (true) {
            double worst = -1.0;
            bool ok = true;
            for (int p = 0; p < active; ++p) {
                const double gap = std::abs(family(n, k, p) - target(n, p));
                if (!(gap <= tol)) {
                    ok = false;
                    if (!(gap <= worst)) worst = gap, worst_probe = p;
                }
            }
            if (ok) break;
            if (++k > options.k_max)
                throw NonConvergenceError("select_diagonal: no k <= " + std::to_string(options.k_max) +
                                              " meets tolerance 1/" + std::to_string(n) + " at probe " +
                                              std::to_string(worst_probe),
                                          worst_probe);
        }
        if (k < k_prev) throw Error("select_diagonal: internal monotonicity violation");
        ks.push_back(k);
        k_prev = k;
    }
    return ks;
}

void write_fejer_csv(std::ostream& os, const FourierBasis& basis, int order, const Path& eta) {
    const Path projected = fejer_project(eta, order, basis);
    os << "x";
    for (int i = 0; i <= order; ++i) os << ",e_" << i;
    os << ",Tn_eta\n" << std::setprecision(17);
    for (int k = 0; k < eta.size(); ++k) {
        const double x = eta.node(k);
        os << x;
        for (int i = 0; i <= order; ++i) os << ',' << basis.e(i, x);
        os << ',' << projected[k] << '\n';
    }
}

}  // namespace svpde
