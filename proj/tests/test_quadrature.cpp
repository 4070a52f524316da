#include "thinshell/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace thinshell;

TEST(Quadrature, PolynomialIsExact) {
    const auto r = integrate([](double x) { return x * x; }, 0.0, 1.0);
    EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-14);
}

TEST(Quadrature, GaussianMass) {
    const auto r = integrate([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }, -12.0, 12.0);
    EXPECT_NEAR(r.value, 1.0, 1e-8);
}

TEST(Quadrature, JumpIsResolvedByDepth) {
    // indicator of [0.3, 1.7] integrated over [0, 2]
    const auto r = integrate([](double x) { return (x >= 0.3 && x <= 1.7) ? 1.0 : 0.0; }, 0.0, 2.0);
    EXPECT_NEAR(r.value, 1.4, 1e-8);
}

TEST(Quadrature, VectorIntegrandSharesOnePass) {
    const auto r = integrate([](double x) { return Eigen::Vector3d(1.0, x, x * x); }, -1.0, 1.0);
    EXPECT_NEAR(r.value[0], 2.0, 1e-12);
    EXPECT_NEAR(r.value[1], 0.0, 1e-12);
    EXPECT_NEAR(r.value[2], 2.0 / 3.0, 1e-12);
}

TEST(Quadrature, BoxIntegralsInTwoAndThreeDimensions) {
    auto gauss = [](const Point& x) { return std::exp(-0.5 * x.squaredNorm()) / std::pow(2 * std::numbers::pi, x.size() / 2.0); };
    const auto r2 = integrate_box(gauss, Point::Constant(2, -10), Point::Constant(2, 10));
    EXPECT_NEAR(r2.value, 1.0, 1e-8);
    QuadratureSpec loose;
    loose.abs_tol = 1e-6;
    const auto r3 = integrate_box(gauss, Point::Constant(3, -10), Point::Constant(3, 10), loose);
    EXPECT_NEAR(r3.value, 1.0, 1e-6);
}

TEST(Quadrature, DiscontinuousDiskArea) {
    auto disk = [](const Point& x) { return x.squaredNorm() <= 1.0 ? 1.0 : 0.0; };
    QuadratureSpec spec;
    spec.abs_tol = 1e-7;
    const auto r = integrate_box(disk, Point::Constant(2, -1.5), Point::Constant(2, 1.5), spec);
    EXPECT_NEAR(r.value, std::numbers::pi, 1e-6);
}

TEST(Quadrature, NonConvergenceReportsAchievedTolerance) {
    QuadratureSpec spec;
    spec.max_depth = 3;
    spec.initial_panels = 1;
    spec.abs_tol = 1e-12;
    try {
        (void)integrate([](double x) { return std::sin(200.0 * x); }, 0.0, 1.0, spec);
        FAIL() << "expected QuadratureError";
    } catch (const QuadratureError& e) {
        EXPECT_GT(e.achieved_tolerance, spec.abs_tol);
    }
}

TEST(Quadrature, RejectsUnsupportedDimensionAndBadSpec) {
    auto one = [](const Point&) { return 1.0; };
    EXPECT_THROW((void)integrate_box(one, Point::Zero(4), Point::Ones(4)), UnsupportedDimension);
    QuadratureSpec bad;
    bad.abs_tol = 0.0;
    EXPECT_THROW(bad.validate(), PreconditionError);
}
