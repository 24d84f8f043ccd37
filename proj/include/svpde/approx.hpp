#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "svpde/paths.hpp"
#include "svpde/quadrature.hpp"
#include "svpde/stats.hpp"

namespace svpde {

using VectorFunction = std::function<double(std::span<const double>)>;
using PathFunctional = std::function<double(const Path&)>;

/// Polynomial growth budget |g(x)| <= C (1 + |x|^m).
struct GrowthBudget {
    double C = 1.0;
    double m = 1.0;
};

// ---------------------------------------------------------------------------------------------
// Bump mollifiers on R^q

struct MollifierSpec {
    int dimension = 1;      // q
    int index = 1;          // n
    double normalization;   // c, so that c exp(1/(|w|^2-1)) has unit mass on the unit ball
};

/// phi_{q,n}(w) = n^q phi_q(n w), phi_q(w) = c exp(1/(|w|^2 - 1)) 1{|w| < 1}.
/// For q <= 3 convolutions use a radial Gauss–Legendre rule times an angular product rule
/// (`nodes` radial nodes); higher dimensions fall back to a tensor rule on the support cube.
class Mollifier {
public:
    static constexpr int kMinNodes = 8;

    Mollifier(int dimension, int index, int nodes = 32);

    const MollifierSpec& spec() const noexcept { return spec_; }
    double density(std::span<const double> w) const;
    /// Quadrature mass of the mollifier; 1 up to quadrature error.
    double mass() const;

    /// (phi_{q,n} * g)(x).
    double apply(const VectorFunction& g, std::span<const double> x) const;
    /// Scalar convenience for q == 1.
    double apply(const std::function<double(double)>& g, double x) const;

    int quadrature_points() const noexcept { return static_cast<int>(weights_.size()); }

private:
    MollifierSpec spec_;
    std::vector<double> offsets_;  // unit-ball points, row-major (points x q)
    std::vector<double> weights_;  // quadrature weight * phi_q(point)
};

double mollify_coefficient(const VectorFunction& g, int index, std::span<const double> x,
                           int nodes = 32);

// ---------------------------------------------------------------------------------------------
// Trigonometric basis of L^2([-T, 0]) and the Fejér operator T_n

/// e_0 = 1/sqrt(T), e_{2i-1} = sqrt(2/T) sin(2 pi i (x+T)/T), e_{2i} = sqrt(2/T) cos(2 pi i (x+T)/T).
class FourierBasis {
public:
    FourierBasis(double horizon, int max_index);

    double horizon() const noexcept { return horizon_; }
    int max_index() const noexcept { return max_index_; }

    double e(int i, double x) const;
    /// \tilde e_i(x) = \int_{-T}^x e_i(y) dy.
    double antiderivative(int i, double x) const;
    /// \int_{-T}^0 x e_i(x) dx, closed form.
    double x_moment(int i) const;
    /// a_i = x_moment(i) / T;  a_{-1} = -1/T.
    double a(int i) const;

private:
    double frequency(int i) const;
    double horizon_;
    int max_index_;
};

/// (Lambda eta)(x) = (eta(0) - eta(-T)) x / T.
Path lambda_op(const Path& eta);

/// eta_i = \int (\tilde e_i(0) - \tilde e_i(x)) d^-eta(x).
double fourier_coeff(const Path& eta, int i, const FourierBasis& basis);

/// T_n restricted to one node layout; tables of e_i at the nodes are precomputed.
class FejerOperator {
public:
    FejerOperator(const FourierBasis& basis, int order, double horizon, int n_nodes);

    int order() const noexcept { return order_; }
    int n_nodes() const noexcept { return n_nodes_; }

    /// Coefficients (eta_i - (Lambda eta)_i), i = 0..order, by trapezoid on the layout.
    std::vector<double> residual_coefficients(const Path& eta) const;
    /// sigma_n(eta - Lambda eta).
    Path fejer_part(const Path& eta) const;
    /// T_n eta = sigma_n(eta - Lambda eta) + Lambda eta.
    Path apply(const Path& eta) const;
    /// sum_i w_i c_i e_i + slope * e_{-1} on the layout, for given coordinates.
    Path synthesize(std::span<const double> coeffs, double slope) const;
    double weight(int i) const noexcept { return (order_ + 1.0 - i) / (order_ + 1.0); }

private:
    double horizon_;
    int order_;
    int n_nodes_;
    std::vector<double> table_;  // (order+1) x n_nodes
};

Path fejer_project(const Path& eta, int order, const FourierBasis& basis);

// ---------------------------------------------------------------------------------------------
// Terminal smoothing H_n(eta) = H(T_n eta + D_n * I_n(eta))

enum class TerminalForm {
    Auto,             ///< Displayed form when T != 1, raw-coefficient form otherwise
    Displayed,        ///< D_n = T_n gamma + e_{-1}/(T(T-1)), gamma(x) = -x/(T-1)
    RawCoefficients,  ///< D_n = sum_i w_i a_i e_i + a_{-1} e_{-1}
};

class SmoothedTerminal {
public:
    SmoothedTerminal(PathFunctional terminal, int index, double horizon, int n_nodes,
                     TerminalForm form = TerminalForm::Auto, int inner_subintervals = 64);

    double operator()(const Path& eta) const;
    /// Argument handed to H: T_n eta + D_n I_n(eta).
    Path smoothed_argument(const Path& eta) const;
    /// I_n(eta) = \int_{-T}^0 (eta(x) - eta(-T)) phi_n(x + T) dx.
    double inner_integral(const Path& eta) const;
    const Path& direction() const noexcept { return direction_; }
    TerminalForm form() const noexcept { return form_; }
    GrowthBudget growth(const GrowthBudget& terminal_budget, double uniform_bound) const;

private:
    PathFunctional terminal_;
    int index_;
    TerminalForm form_;
    FourierBasis basis_;
    FejerOperator fejer_;
    Path direction_;
    std::vector<double> inner_x_;
    std::vector<double> inner_w_;
};

SmoothedTerminal smooth_terminal(PathFunctional terminal, int index, double horizon, int n_nodes,
                                 TerminalForm form = TerminalForm::Auto);

// ---------------------------------------------------------------------------------------------
// Finite-dimensional smoothing rho_{n,k} * base on the anisotropic box

struct FiniteDimSmoothingOptions {
    int gl_nodes = 8;
    int max_tensor_dim = 6;
    int mc_samples = 2048;  // antithetic pairs are counted as two samples
    std::uint64_t seed = 0x5eedf00dULL;
    int n_index = -1;       // when >= 0, the dimension must equal n_index + 2
};

/// rho_{n,k}(xi) = k^M rho(k xi) with rho a product of unit bumps on half-widths 2^{-j},
/// j = 0..M-1 (box |xi_i| <= 2^{-(i+1)}, i = -1..M-2). Tensor quadrature for M <= max_tensor_dim,
/// antithetic Monte Carlo beyond.
class FiniteDimSmoother {
public:
    FiniteDimSmoother(VectorFunction base, int dimension, int k, FiniteDimSmoothingOptions options = {});

    double operator()(std::span<const double> x) const { return evaluate(x).value; }
    Estimate evaluate(std::span<const double> x) const;
    bool uses_monte_carlo() const noexcept { return monte_carlo_; }
    int dimension() const noexcept { return dim_; }

    static double half_width(int j) noexcept;

private:
    VectorFunction base_;
    int dim_;
    int k_;
    bool monte_carlo_;
    std::vector<double> offsets_;  // points x dim, already scaled by half-widths / k
    std::vector<double> weights_;
};

FiniteDimSmoother smooth_finite_dim(VectorFunction base, int dimension, int k,
                                    FiniteDimSmoothingOptions options = {});

// ---------------------------------------------------------------------------------------------
// Diagonal selection

struct DiagonalOptions {
    int k_max = 1000;
};

/// For n = 1..n_max, the smallest k_n >= k_{n-1} (k_0 = 0) with
/// max_{p < min(n, n_probes)} |family(n, k_n, p) - target(n, p)| <= 1/n. Throws NonConvergenceError
/// naming the offending probe when k_max is exceeded. Element n-1 of the result is k_n.
std::vector<int> select_diagonal(const std::function<double(int n, int k, int probe)>& family,
                                 const std::function<double(int n, int probe)>& target, int n_probes,
                                 int n_max, DiagonalOptions options = {});

// ---------------------------------------------------------------------------------------------
// CSV dump of a basis and a projection: x, e_0..e_n, (T_n eta)(x)
void write_fejer_csv(std::ostream& os, const FourierBasis& basis, int order, const Path& eta);

}  // namespace svpde
