#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "svpde/approx.hpp"
#include "svpde/error.hpp"
#include "corpus.hpp"

using namespace svpde;
using svpde::testing::rough_path;
using svpde::testing::smooth_path;

namespace {

// Composite Simpson on [a, b] with n (even) intervals; test-only oracle.
template <class F>
double simpson(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(1.0 / (s * s - 1.0)) : 0.0; }

}  // namespace

// ---- mollifiers ------------------------------------------------------------------------------

TEST(Mollifier, UnitMassAcrossDimensionsAndIndices) {
    for (int q : {1, 2, 3})
        for (int n : {1, 4, 16}) EXPECT_NEAR(Mollifier(q, n).mass(), 1.0, 1e-6) << "q=" << q << " n=" << n;
}

TEST(Mollifier, ReproducesAffineFunctions) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int q : {1, 2, 3}) {
        for (int n : {1, 4, 16}) {
            const Mollifier m(q, n);
            std::vector<double> coef(q);
            for (auto& c : coef) c = u(rng);
            const double intercept = u(rng);
            const VectorFunction g = [&](std::span<const double> x) {
                double acc = intercept;
                for (int j = 0; j < q; ++j) acc += coef[j] * x[j];
                return acc;
            };
            std::vector<double> x(q);
            for (auto& v : x) v = u(rng);
            EXPECT_NEAR(m.apply(g, x), g(x), 1e-8);
        }
    }
}

TEST(Mollifier, ConstantOne) {
    const VectorFunction one = [](std::span<const double>) { return 1.0; };
    const std::vector<double> x{0.3, -0.2};
    EXPECT_NEAR(mollify_coefficient(one, 3, x), 1.0, 1e-8);
}

TEST(Mollifier, AbsoluteValueAtKinkMatchesRadialOracle) {
    // 2 \int_0^1 phi_1(w) w dw with phi_1 normalized on [-1, 1]; Simpson with 10^4 intervals.
    const double c = 1.0 / simpson(bump, -1.0, 1.0, 10000);
    const double oracle = 2.0 * c * simpson([](double w) { return bump(w) * w; }, 0.0, 1.0, 10000);
    const double value = Mollifier(1, 1, 64).apply([](double x) { return std::abs(x); }, 0.0);
    EXPECT_GT(value, 0.0);
    EXPECT_NEAR(value, oracle, 1e-8);
    EXPECT_NEAR(oracle, 0.334453997709975, 1e-12);  // frozen regression value
}

TEST(Mollifier, DensityScalesWithIndex) {
    const Mollifier m1(2, 1), m4(2, 4);
    const std::vector<double> w{0.1, 0.05};
    const std::vector<double> w4{0.4, 0.2};
    EXPECT_NEAR(m4.density(w), 16.0 * m1.density(w4), 1e-12);
    const std::vector<double> outside{0.3, 0.0};
    EXPECT_EQ(m4.density(outside), 0.0);
}

TEST(Mollifier, RejectsTooFewNodes) {
    EXPECT_THROW(Mollifier(1, 1, Mollifier::kMinNodes - 1), ConfigError);
    EXPECT_THROW(Mollifier(0, 1), ConfigError);
}

// ---- Fourier basis and Fejér operator ----------------------------------------------------------

TEST(FourierBasis, GramMatrixIsIdentity) {
    for (double T : {1.0, 2.0}) {
        const FourierBasis basis(T, 20);
        const GaussLegendre gl(200);
        for (int i = 0; i <= 20; ++i)
            for (int j = 0; j <= 20; ++j) {
                const double g = gl.integrate([&](double x) { return basis.e(i, x) * basis.e(j, x); }, -T, 0.0);
                EXPECT_NEAR(g, i == j ? 1.0 : 0.0, 1e-6);
            }
    }
}

TEST(FourierBasis, ClosedFormsMatchQuadrature) {
    const double T = 2.0;
    const FourierBasis basis(T, 9);
    const GaussLegendre gl(200);
    for (int i = 0; i <= 9; ++i) {
        EXPECT_NEAR(basis.x_moment(i), gl.integrate([&](double x) { return x * basis.e(i, x); }, -T, 0.0), 1e-12);
        for (double x : {-1.7, -0.6, 0.0})
            EXPECT_NEAR(basis.antiderivative(i, x), gl.integrate([&](double y) { return basis.e(i, y); }, -T, x), 1e-12);
    }
    EXPECT_EQ(basis.e(-1, -0.3), -0.3);
    EXPECT_EQ(basis.a(-1), -0.5);
}

TEST(LambdaOp, Examples) {
    const Path flat = lambda_op(Path::constant(1.0, 9, 4.0));
    for (double v : flat.values()) EXPECT_EQ(v, 0.0);
    const Path id = Path::from_function(1.0, 9, [](double x) { return x; });
    EXPECT_LT(sup_norm(id - lambda_op(id)), 1e-15);
    const Path sq = Path::from_function(1.0, 9, [](double x) { return x * x; });
    const Path l = lambda_op(sq);
    for (int k = 0; k < l.size(); ++k) EXPECT_NEAR(l[k], -l.node(k), 1e-15);
}

TEST(LambdaOp, ResidualIsPeriodic) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) {
        const Path eta = rough_path(rng, 2.0, 50);
        const Path r = eta - lambda_op(eta);
        EXPECT_NEAR(r.oldest(), r.present(), 1e-14);
    }
}

TEST(FourierCoeff, ZeroPath) {
    const FourierBasis basis(1.0, 6);
    for (int i = 0; i <= 6; ++i) EXPECT_EQ(fourier_coeff(Path::constant(1.0, 33, 0.0), i, basis), 0.0);
}

TEST(FourierCoeff, BasisElementIsOrthonormal) {
    const double T = 2.0;
    const FourierBasis basis(T, 6);
    const Path e0 = Path::constant(T, 401, 1.0 / std::sqrt(T));
    EXPECT_NEAR(fourier_coeff(e0, 0, basis), 1.0, 1e-6);
    for (int i = 1; i <= 6; ++i) EXPECT_NEAR(fourier_coeff(e0, i, basis), 0.0, 1e-6);
}

TEST(FourierCoeff, ForwardIntegralFormMatchesDirectQuadrature) {
    const FourierBasis basis(1.0, 4);
    const Path id = Path::from_function(1.0, 4001, [](double x) { return x; });
    const GaussLegendre gl(100);
    const double direct = gl.integrate([&](double x) { return x * basis.e(1, x); }, -1.0, 0.0);
    EXPECT_NEAR(fourier_coeff(id, 1, basis), direct, 1e-6);
    EXPECT_THROW(fourier_coeff(id, 5, basis), DomainError);
}

TEST(Fejer, ConstantIsAFixedPoint) {
    const FourierBasis basis(2.0, 16);
    const Path c = Path::constant(2.0, 129, -1.25);
    for (int n : {0, 1, 5, 16}) EXPECT_LT(sup_norm(fejer_project(c, n, basis) - c), 1e-12);
}

TEST(Fejer, PureModeIsScaledByItsWeight) {
    const FourierBasis basis(1.0, 3);
    const Path eta = Path::from_function(1.0, 257, [](double x) { return std::sin(2 * std::numbers::pi * (x + 1.0)); });
    const Path projected = fejer_project(eta, 3, basis);
    for (int k = 0; k < eta.size(); ++k) EXPECT_NEAR(projected[k], 0.75 * eta[k], 1e-10);
}

TEST(Fejer, ConvergesUniformlyOnSmoothPaths) {
    std::mt19937_64 rng(8);
    const FourierBasis basis(1.0, 256);
    for (int trial = 0; trial < 10; ++trial) {
        const Path eta = smooth_path(rng, 1.0, 2049);
        std::vector<double> err;
        for (int n : {4, 16, 64, 256}) err.push_back(sup_norm(fejer_project(eta, n, basis) - eta));
        for (std::size_t i = 1; i < err.size(); ++i) EXPECT_LT(err[i], err[i - 1]);
        EXPECT_LE(err.back(), 1e-2);
    }
}

TEST(Fejer, ContractionOnRoughPaths) {
    std::mt19937_64 rng(12);
    const FourierBasis basis(1.0, 64);
    for (int trial = 0; trial < 100; ++trial) {
        const Path eta = rough_path(rng, 1.0, 257);
        const Path residual = eta - lambda_op(eta);
        for (int n : {3, 16, 64}) {
            const FejerOperator op(basis, n, 1.0, 257);
            EXPECT_LE(sup_norm(op.fejer_part(eta)), sup_norm(residual) * (1 + 1e-12));
        }
    }
}

TEST(Fejer, UniformBoundIndependentOfOrder) {
    std::mt19937_64 rng(13);
    const FourierBasis basis(2.0, 128);
    double m_emp = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Path eta = trial % 2 ? rough_path(rng, 2.0, 513) : smooth_path(rng, 2.0, 513);
        for (int n : {1, 4, 16, 64, 128}) m_emp = std::max(m_emp, sup_norm(fejer_project(eta, n, basis)) / sup_norm(eta));
    }
    EXPECT_LT(m_emp, 10.0);
}

// ---- terminal smoothing -----------------------------------------------------------------------

TEST(SmoothTerminal, PresentValueFunctionalConverges) {
    std::mt19937_64 rng(21);
    const PathFunctional present = [](const Path& eta) { return eta.present(); };
    const SmoothedTerminal h8(present, 8, 2.0, 1025), h32(present, 32, 2.0, 1025), h128(present, 128, 2.0, 1025);
    double e8 = 0, e32 = 0, e128 = 0;
    for (int i = 0; i < 20; ++i) {
        const Path eta = smooth_path(rng, 2.0, 1025);
        e8 = std::max(e8, std::abs(h8(eta) - eta.present()));
        e32 = std::max(e32, std::abs(h32(eta) - eta.present()));
        e128 = std::max(e128, std::abs(h128(eta) - eta.present()));
    }
    EXPECT_LT(e32, e8);
    EXPECT_LT(e128, e32);
    EXPECT_LT(e128, 0.25 * e8);
    std::printf("present-value smoothing errors: n=8 %.3e  n=32 %.3e  n=128 %.3e\n", e8, e32, e128);
}

TEST(SmoothTerminal, ConstantPathsAreFixedPoints) {
    const PathFunctional sup = [](const Path& eta) {
        double m = eta[0];
        for (double v : eta.values()) m = std::max(m, v);
        return m;
    };
    for (double T : {1.0, 2.0})
        for (int n : {1, 8, 40}) {
            const SmoothedTerminal hn(sup, n, T, 257);
            const Path c = Path::constant(T, 257, 0.7);
            EXPECT_EQ(hn.inner_integral(c), 0.0);
            EXPECT_NEAR(hn(c), 0.7, 1e-12);
        }
}

TEST(SmoothTerminal, SupOfParabolaApproachesQuarter) {
    const PathFunctional sup = [](const Path& eta) {
        double m = eta[0];
        for (double v : eta.values()) m = std::max(m, v);
        return m;
    };
    const Path eta = Path::from_function(1.0, 1025, [](double x) { return -x * (x + 1.0); });
    const double v8 = smooth_terminal(sup, 8, 1.0, 1025)(eta);
    const double v64 = smooth_terminal(sup, 64, 1.0, 1025)(eta);
    EXPECT_LT(std::abs(v64 - 0.25), std::abs(v8 - 0.25));
    EXPECT_NEAR(v64, 0.25, 1e-2);
}

TEST(SmoothTerminal, InnerMollifierHasUnitMass) {
    const PathFunctional present = [](const Path& eta) { return eta.present(); };
    for (int n : {1, 4, 32}) {
        const SmoothedTerminal hn(present, n, 2.0, 129);
        // eta(x) = x + 2 vanishes at -T, so I_n = \int (x + T) phi_n(x + T) dx ~ E[Y], Y ~ phi_n
        const Path ramp = Path::from_function(2.0, 129, [](double x) { return x + 2.0; });
        const Path shifted = Path::from_function(2.0, 129, [](double x) { return x + 3.0; });
        EXPECT_GT(hn.inner_integral(ramp), 0.0);
        EXPECT_LT(hn.inner_integral(ramp), 2.0 / n);
        EXPECT_NEAR(hn.inner_integral(shifted), hn.inner_integral(ramp), 1e-12);
    }
}

TEST(SmoothTerminal, DisplayedFormDirectionCollapsesToLinear) {
    // gamma is linear, so T_n gamma = gamma and the displayed direction is -x/T.
    const PathFunctional present = [](const Path& eta) { return eta.present(); };
    const double T = 2.0;
    const SmoothedTerminal hn(present, 6, T, 65, TerminalForm::Displayed);
    for (int k = 0; k < 65; ++k) EXPECT_NEAR(hn.direction()[k], -hn.direction().node(k) / T, 1e-12);
    EXPECT_THROW(SmoothedTerminal(present, 6, 1.0, 65, TerminalForm::Displayed), ConfigError);
    EXPECT_EQ(SmoothedTerminal(present, 6, 1.0, 65).form(), TerminalForm::RawCoefficients);
}

TEST(SmoothTerminal, BothFormsConverge) {
    std::mt19937_64 rng(31);
    const PathFunctional mean = [](const Path& eta) {
        double acc = 0;
        for (double v : eta.values()) acc += v;
        return acc / eta.size();
    };
    const Path eta = smooth_path(rng, 2.0, 1025);
    for (auto form : {TerminalForm::Displayed, TerminalForm::RawCoefficients}) {
        const double err = std::abs(SmoothedTerminal(mean, 128, 2.0, 1025, form)(eta) - mean(eta));
        EXPECT_LT(err, 5e-3);
    }
}

// ---- finite-dimensional smoothing -------------------------------------------------------------

TEST(FiniteDimSmoothing, AffineBaseIsReproduced) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int M : {1, 3, 5, 9}) {
        std::vector<double> coef(M);
        for (auto& c : coef) c = u(rng);
        const VectorFunction base = [&](std::span<const double> x) {
            double acc = 0.5;
            for (int j = 0; j < M; ++j) acc += coef[j] * x[j];
            return acc;
        };
        const auto smoothed = smooth_finite_dim(base, M, 2, {.gl_nodes = 6});
        EXPECT_EQ(smoothed.uses_monte_carlo(), M > 6);
        for (int p = 0; p < 10; ++p) {
            std::vector<double> x(M);
            for (auto& v : x) v = u(rng);
            EXPECT_NEAR(smoothed(x), base(x), 1e-8);
        }
    }
}

TEST(FiniteDimSmoothing, UnitMass) {
    const VectorFunction one = [](std::span<const double>) { return 1.0; };
    const std::vector<double> x3{0.1, 0.2, 0.3};
    EXPECT_NEAR(smooth_finite_dim(one, 3, 1)(x3), 1.0, 1e-8);
    const std::vector<double> x10(10, 0.5);
    EXPECT_NEAR(smooth_finite_dim(one, 10, 3)(x10), 1.0, 1e-12);
}

TEST(FiniteDimSmoothing, KinkIsSmoothedAndShrinksWithK) {
    const VectorFunction abs1 = [](std::span<const double> x) { return std::abs(x[0]); };
    const std::vector<double> zero{0.0};
    const double v1 = smooth_finite_dim(abs1, 1, 1, {.gl_nodes = 32})(zero);
    const double v4 = smooth_finite_dim(abs1, 1, 4, {.gl_nodes = 32})(zero);
    const double c = 1.0 / simpson(bump, -1.0, 1.0, 10000);
    const double oracle = 2.0 * c * simpson([](double s) { return bump(s) * s; }, 0.0, 1.0, 10000);
    EXPECT_GT(v4, 0.0);
    EXPECT_GT(v1, v4);
    EXPECT_NEAR(v1, oracle, 1e-3);
    EXPECT_NEAR(v4, oracle / 4.0, 1e-3);
}

TEST(FiniteDimSmoothing, DimensionMustMatchIndexSchedule) {
    const VectorFunction one = [](std::span<const double>) { return 1.0; };
    EXPECT_THROW(smooth_finite_dim(one, 5, 1, {.n_index = 4}), ConfigError);
    EXPECT_NO_THROW(smooth_finite_dim(one, 6, 1, {.n_index = 4}));
    EXPECT_THROW(smooth_finite_dim(one, 2, 0), ConfigError);
}

TEST(FiniteDimSmoothing, MonteCarloReportsStandardError) {
    const VectorFunction sq = [](std::span<const double> x) { return x[0] * x[0] + x[7] * x[7]; };
    const std::vector<double> x(8, 0.0);
    const Estimate e = smooth_finite_dim(sq, 8, 1).evaluate(x);
    EXPECT_GT(e.value, 0.0);
    EXPECT_GT(e.se, 0.0);
    EXPECT_LT(e.se, 0.1 * e.value);
}

// ---- diagonal selection -----------------------------------------------------------------------

TEST(SelectDiagonal, ExactFamilyKeepsZero) {
    const auto ks = select_diagonal([](int n, int, int p) { return n * 1.0 + p; },
                                    [](int n, int p) { return n * 1.0 + p; }, 3, 6);
    for (int k : ks) EXPECT_EQ(k, 0);
}

TEST(SelectDiagonal, HarmonicGapNeedsKAtLeastN) {
    const auto ks = select_diagonal([](int, int k, int) { return 1.0 / k; }, [](int, int) { return 0.0; }, 1, 12);
    for (int n = 1; n <= 12; ++n) EXPECT_EQ(ks[n - 1], n);
}

TEST(SelectDiagonal, NonConvergenceNamesTheProbe) {
    try {
        select_diagonal([](int, int, int p) { return p == 1 ? 1.0 : 0.0; }, [](int, int) { return 0.0; }, 3, 4,
                        {.k_max = 1000});
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.probe(), 1);
    }
}

TEST(SelectDiagonal, NondecreasingAndWithinTolerance) {
    // gap sqrt(p+1)/k with a probe-dependent constant; tolerance contract checked explicitly
    const auto fam = [](int n, int k, int p) { return std::sin(n) + std::sqrt(p + 1.0) / k; };
    const auto tgt = [](int n, int) { return std::sin(n); };
    const auto ks = select_diagonal(fam, tgt, 5, 20);
    for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_GE(ks[i], ks[i - 1]);
    for (int n = 1; n <= 20; ++n)
        for (int p = 0; p < std::min(n, 5); ++p) EXPECT_LE(std::abs(fam(n, ks[n - 1], p) - tgt(n, p)), 1.0 / n);
}
