#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "svpde/error.hpp"
#include "svpde/paths.hpp"

using namespace svpde;

namespace {

Path random_path(std::mt19937_64& rng, double T, int n) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(n);
    double x = z(rng);
    for (auto& s : v) s = (x += 0.3 * z(rng));
    return Path(T, v);
}

}  // namespace

TEST(SupNorm, ZeroPath) { EXPECT_EQ(sup_norm(Path::constant(1.0, 5, 0.0)), 0.0); }

TEST(SupNorm, IdentityAttainsAtLeftEndpoint) {
    const Path eta = Path::from_function(1.0, 11, [](double x) { return x; });
    EXPECT_DOUBLE_EQ(sup_norm(eta), 1.0);
}

TEST(SupNorm, AgreesWithDenseGrid) {
    const auto f = [](double x) { return std::sin(10.0 * x); };
    const double coarse = sup_norm(Path::from_function(1.0, 1001, f));
    const double dense = sup_norm(Path::from_function(1.0, 100001, f));
    EXPECT_NEAR(coarse, dense, 1e-3);
}

TEST(SupNorm, IsANormOnRandomPaths) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Path a = random_path(rng, 2.0, 33), b = random_path(rng, 2.0, 33);
        const double lambda = std::normal_distribution<double>(0.0, 3.0)(rng);
        EXPECT_NEAR(sup_norm(lambda * a), std::abs(lambda) * sup_norm(a), 1e-12 * (1 + sup_norm(a)));
        EXPECT_LE(sup_norm(a + b), sup_norm(a) + sup_norm(b) + 1e-14);
    }
}

TEST(PathType, RejectsTooFewNodesAndNonFinite) {
    EXPECT_THROW(Path(1.0, {1.0}), ConfigError);
    EXPECT_THROW(Path(1.0, {1.0, NAN}), DomainError);
}

TEST(PathType, LinearInterpolationBetweenNodes) {
    const Path eta(1.0, {0.0, 2.0});
    EXPECT_DOUBLE_EQ(eta(-0.25), 1.5);
    EXPECT_DOUBLE_EQ(eta(-5.0), 0.0);
}

TEST(Window, ConstantTrajectoryGivesConstantPath) {
    const Grid g(0.0, 1.0, 10);
    const Trajectory traj(g, Path::constant(1.0, 21, 3.0), std::vector<double>(11, 3.0));
    for (double s : {0.0, 0.3, 0.7, 1.0}) {
        const Path w = window(traj, s);
        for (double v : w.values()) EXPECT_EQ(v, 3.0);
    }
}

TEST(Window, AtInitialTimeIsThePrefix) {
    const Grid g(0.25, 1.0, 6);
    const Path prefix = Path::from_function(1.0, 17, [](double x) { return std::cos(3 * x) + 1.0; });
    std::vector<double> body(7, prefix.present());
    const Trajectory traj(g, prefix, body);
    const Path w = window(traj, 0.25);
    for (int k = 0; k < prefix.size(); ++k) EXPECT_EQ(w[k], prefix[k]);
}

TEST(Window, MatchesDirectIndexArithmetic) {
    // X_r = 1 + r on [-1, 1]; prefix covers [-1, 0], body [0, 1].
    const Grid g(0.0, 1.0, 20);
    const Path prefix = Path::from_function(1.0, 11, [](double x) { return x + 1.0; });
    std::vector<double> body(21);
    for (int k = 0; k <= 20; ++k) body[k] = 1.0 + g.time(k);
    const Trajectory traj(g, prefix, body);
    const Path w = window(traj, 0.5);
    for (int k = 0; k < w.size(); ++k) {
        const double r = 0.5 + w.node(k);
        const double direct = r < 0 ? prefix(r) : body[static_cast<int>(std::lround(r / g.dt))];
        EXPECT_NEAR(w[k], direct, 1e-14);
        EXPECT_NEAR(w[k], 1.5 + w.node(k), 1e-14);
    }
}

TEST(Window, PresentValueIsExact) {
    std::mt19937_64 rng(3);
    const Grid g(0.0, 1.0, 50);
    const Path prefix = random_path(rng, 1.0, 13);
    std::vector<double> body(51);
    body[0] = prefix.present();
    std::normal_distribution<double> z;
    for (int k = 1; k <= 50; ++k) body[k] = body[k - 1] + 0.1 * z(rng);
    const Trajectory traj(g, prefix, body);
    for (int k = 0; k <= 50; ++k) EXPECT_EQ(window(traj, g.time(k)).present(), body[k]);
}

TEST(Window, OutsideHorizonIsADomainError) {
    const Grid g(0.0, 1.0, 4);
    const Trajectory traj(g, Path::constant(1.0, 3, 0.0), std::vector<double>(5, 0.0));
    EXPECT_THROW(window(traj, 1.5), DomainError);
    EXPECT_THROW(window(traj, -0.5), DomainError);
}

TEST(TrajectoryType, PrefixMustPasteContinuously) {
    const Grid g(0.0, 1.0, 2);
    EXPECT_THROW(Trajectory(g, Path::constant(1.0, 3, 1.0), {0.0, 0.0, 0.0}), DomainError);
    EXPECT_THROW(Trajectory(g, Path::constant(1.0, 3, 0.0), {0.0, 0.0}), ShapeError);
}

TEST(ForwardIntegral, UnitIntegrandReturnsPresentValue) {
    std::mt19937_64 rng(11);
    const Integrand one{[](double) { return 1.0; }, [](double) { return 0.0; }};
    for (int i = 0; i < 20; ++i) {
        const Path eta = random_path(rng, 1.5, 40);
        EXPECT_NEAR(forward_integral(one, eta), eta.present(), 1e-15);
    }
}

TEST(ForwardIntegral, ConstantPathPicksInitialJump) {
    const Integrand psi{[](double x) { return std::exp(x) + x * x; }, [](double x) { return std::exp(x) + 2 * x; }};
    const Path eta = Path::constant(2.0, 2001, 3.0);
    // trapezoid error on \int psi' is O(h^2)
    EXPECT_NEAR(forward_integral(psi, eta), 3.0 * (std::exp(-2.0) + 4.0), 1e-6);
}

TEST(ForwardIntegral, LinearExampleMatchesHandIntegration) {
    const Integrand psi{[](double x) { return x; }, [](double) { return 1.0; }};
    const auto eta_fn = [](double x) { return x + 1.0; };
    EXPECT_NEAR(forward_integral(psi, Path::from_function(1.0, 11, eta_fn)), -0.5, 1e-15);
    EXPECT_NEAR(forward_integral(psi, Path::from_function(1.0, 1000001, eta_fn)), -0.5, 1e-12);
}

TEST(ForwardIntegral, LinearInPathAndIntegrand) {
    std::mt19937_64 rng(5);
    const Integrand p1{[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
    const Integrand p2{[](double x) { return x * x; }, [](double x) { return 2 * x; }};
    const Integrand sum{[](double x) { return std::sin(x) + 2.5 * x * x; }, [](double x) { return std::cos(x) + 5 * x; }};
    for (int i = 0; i < 50; ++i) {
        const Path a = random_path(rng, 1.0, 65), b = random_path(rng, 1.0, 65);
        const double scale = 1.0 + sup_norm(a) + sup_norm(b);
        EXPECT_NEAR(forward_integral(p1, a + 2.0 * b), forward_integral(p1, a) + 2.0 * forward_integral(p1, b),
                    1e-12 * scale);
        EXPECT_NEAR(forward_integral(sum, a), forward_integral(p1, a) + 2.5 * forward_integral(p2, a), 1e-12 * scale);
    }
}

TEST(ForwardIntegral, SecondOrderUnderRefinement) {
    const Integrand psi{[](double x) { return std::cos(2 * x); }, [](double x) { return -2 * std::sin(2 * x); }};
    const auto eta_fn = [](double x) { return std::exp(x) * std::sin(3 * x); };
    std::vector<double> values;
    for (int n : {17, 33, 65, 129, 257}) values.push_back(forward_integral(psi, Path::from_function(1.0, n, eta_fn)));
    for (std::size_t i = 0; i + 2 < values.size(); ++i) {
        const double order = std::log2(std::abs(values[i] - values[i + 1]) / std::abs(values[i + 1] - values[i + 2]));
        EXPECT_GE(order, 1.9);
    }
}

TEST(ExtendCanonical, ConstantOutsideAndInterpolatedInside) {
    const Grid g(0.0, 2.0, 4);
    const std::vector<double> v{0.0, 0.25, 0.5, 0.75, 1.0};
    EXPECT_EQ(extend_canonical(v, g, -5.0), 0.0);
    EXPECT_EQ(extend_canonical(v, g, 3.0), 1.0);
    EXPECT_DOUBLE_EQ(extend_canonical(v, g, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(extend_canonical(v, g, 0.75), 0.375);
}

TEST(PathCsv, RoundTripsBitExactly) {
    std::mt19937_64 rng(9);
    const Path eta = random_path(rng, 2.0, 9);
    std::stringstream ss;
    write_path_csv(ss, eta);
    EXPECT_EQ(ss.str().substr(0, 8), "x,value\n");
    const Path back = read_path_csv(ss);
    ASSERT_TRUE(back.same_layout(eta));
    for (int k = 0; k < eta.size(); ++k) EXPECT_EQ(back[k], eta[k]);
}

TEST(PathCsv, RejectsMalformedInput) {
    std::stringstream bad("x,value\n-1,0\n-0.5;1\n");
    EXPECT_THROW(read_path_csv(bad), ConfigError);
    std::stringstream noheader("-1,0\n0,1\n");
    EXPECT_THROW(read_path_csv(noheader), ConfigError);
}
