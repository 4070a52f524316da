#include "oracles.hpp"

#include "thinshell/density.hpp"
#include "thinshell/marginal_stats.hpp"
#include "thinshell/rotation.hpp"
#include "thinshell/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace thinshell;

namespace {

SampleBatch shifted(SampleBatch b, double mu) {
    b.points.array() += mu;
    return b;
}

SampleBatch cube_projection(int n, int l, Eigen::Index count, std::uint64_t seed) {
    return project(exact_sample(make_body(BodyKind::cube, n), count, seed), random_subspace(n, l, seed, 1));
}

}  // namespace

// ---------------------------------------------------------------- projection

TEST(Project, CoordinateFrameTruncates) {
    const auto b = exact_sample(make_body(BodyKind::ball, 5), 100, 3);
    const auto p = project(b, Subspace::coordinate(5, 2));
    ASSERT_EQ(p.dim(), 2);
    EXPECT_EQ(p.points, static_cast<RowMatrix>(b.points.leftCols(2)));
    ASSERT_EQ(p.provenance.subspaces.size(), 1u);
    EXPECT_EQ(p.provenance.subspaces[0], "coord2");
}

TEST(Project, GaussianStaysStandardAndNormsContract) {
    const auto g = gaussian_batch(20, 20000, 1.0, 5);
    const auto e = random_subspace(20, 3, 5, 0);
    const auto p = project(g, e);
    const double se = std::sqrt(2.0 / 20000.0);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(p.points.col(j).squaredNorm() / 20000.0, 1.0, 3.0 * se);
    for (Eigen::Index i = 0; i < g.count(); ++i) EXPECT_LE(p.points.row(i).norm(), g.points.row(i).norm() + 1e-12);
    EXPECT_EQ(p.provenance.subspaces.back(), e.id());
    EXPECT_THROW(project(g, random_subspace(19, 2, 0)), PreconditionError);
}

// ---------------------------------------------------------------- total variation

TEST(Tv, SameLawIsNoise) {
    const auto t = tv_to_gaussian(gaussian_batch(1, 1000000, 1.0, 11), 1.0);
    EXPECT_LE(t.value, 0.01);
    EXPECT_LE(t.value, 2.0 * t.noise_floor);
    EXPECT_GE(t.bins, 18);
    EXPECT_LE(t.bins, 1026);
    EXPECT_EQ(t.label, "TV");
    long long total = 0;
    for (auto c : t.per_bin_counts) total += c;
    EXPECT_EQ(total, 1000000);
}

TEST(Tv, ScaleMismatchMatchesClosedForm) {
    // N(0, 4) against N(0, 1): densities cross at +-sqrt((8/3) ln 2)
    const double c = std::sqrt(8.0 / 3.0 * std::log(2.0));
    const double exact = (2.0 * oracle::Phi(c) - 1.0) - (2.0 * oracle::Phi(c / 2.0) - 1.0);
    EXPECT_NEAR(exact, 0.323, 5e-4);
    const auto t = tv_to_gaussian(gaussian_batch(1, 200000, 4.0, 12), 1.0);
    EXPECT_NEAR(t.value, exact, 0.02);
}

TEST(Tv, UniformSegmentAgainstQuadratureOracle) {
    const double a = std::sqrt(3.0);
    const double exact = 0.5 * oracle::gk_split([&](double x) { return std::abs((std::abs(x) < a ? 0.5 / a : 0.0) - oracle::phi(x)); },
                                                -12.0, 12.0, {-a, a, -1.0, 1.0});
    const auto t = tv_to_gaussian(exact_sample(make_body(BodyKind::cube, 1), 400000, 13), 1.0);
    // binning lowers the value; sampling raises it by about the noise floor
    EXPECT_LE(t.value, exact + 3.0 * t.noise_floor);
    EXPECT_GE(t.value, exact - 0.02);
}

TEST(Tv, TwoDimensionalDirect) {
    const auto g = tv_to_gaussian(gaussian_batch(2, 400000, 1.0, 14), 1.0);
    EXPECT_FALSE(g.radial);
    EXPECT_LE(g.value, 2.0 * g.noise_floor);

    const double a = std::sqrt(3.0);
    auto inner = [&](double x) {
        return oracle::gk_split(
            [&](double y) {
                const double u = (std::abs(x) < a && std::abs(y) < a) ? 0.25 / 3.0 : 0.0;
                return std::abs(u - oracle::phi(x) * oracle::phi(y));
            },
            -10.0, 10.0, {-a, a}, 10, 1e-9);
    };
    const double exact = 0.5 * oracle::gk_split(inner, -10.0, 10.0, {-a, a}, 10, 1e-8);
    const auto t = tv_to_gaussian(exact_sample(make_body(BodyKind::cube, 2), 400000, 15), 1.0, TvMode::direct);
    EXPECT_LE(t.value, exact + 3.0 * t.noise_floor);
    EXPECT_GE(t.value, exact - 0.04);
}

TEST(Tv, RadialReductionAboveTwoDimensions) {
    const auto g = tv_to_gaussian(gaussian_batch(5, 200000, 2.0, 16), 2.0);
    EXPECT_TRUE(g.radial);
    EXPECT_EQ(g.label, "radial-TV");
    EXPECT_LE(g.value, 2.0 * g.noise_floor);
    // variance mismatch shows up in the radial law
    EXPECT_GT(tv_to_gaussian(gaussian_batch(5, 200000, 2.0, 16), 1.0).value, 0.3);
    EXPECT_THROW(tv_to_gaussian(gaussian_batch(3, 5000, 1.0, 1), 1.0, TvMode::direct), UnsupportedDimension);
}

TEST(Tv, TriangleSanity) {
    for (double v : {1.0, 1.5}) {
        const auto batch = gaussian_batch(1, 200000, v, 17);
        const auto direct = tv_to_gaussian(batch, 1.0);
        const auto hop1 = tv_to_gaussian(batch, 1.2);
        const auto hop2 = tv_to_gaussian(gaussian_batch(1, 200000, 1.2, 18), 1.0);
        EXPECT_LE(direct.value, hop1.value + hop2.value + 3.0 * (direct.noise_floor + hop1.noise_floor + hop2.noise_floor));
    }
}

TEST(Tv, RejectsSmallBatches) {
    EXPECT_THROW(tv_to_gaussian(gaussian_batch(1, 999, 1.0, 1), 1.0), InsufficientData);
    EXPECT_NO_THROW(tv_to_gaussian(gaussian_batch(1, 1000, 1.0, 1), 1.0));
}

// ---------------------------------------------------------------- best-fit variance

TEST(BestFitVariance, MomentMatch) {
    const Eigen::Index count = 100000;
    for (int l : {1, 2, 3}) {
        for (double v : {1.0, 4.0}) {
            const auto b = gaussian_batch(l, count, v, 20 + l);
            const double se = v * std::sqrt(2.0 / (l * static_cast<double>(count)));
            EXPECT_NEAR(best_fit_variance(b), v, 3.0 * se);
        }
    }
    auto b = gaussian_batch(2, 5000, 1.0, 30);
    const double r = best_fit_variance(b);
    b.points *= 2.0;
    EXPECT_NEAR(best_fit_variance(b), 4.0 * r, 1e-12 * r);
    b.points.setZero();
    EXPECT_THROW(best_fit_variance(b), PreconditionError);
    EXPECT_THROW(best_fit_variance(gaussian_batch(2, 999, 1.0, 1)), InsufficientData);
}

// ---------------------------------------------------------------- pointwise ratio

TEST(PointwiseRatio, GaussianIsFlat) {
    const auto r = pointwise_ratio(gaussian_batch(1, 1000000, 1.0, 31), 2.0);
    EXPECT_LE(r.max_deviation, 0.05);
    EXPECT_EQ(r.bins.size() % 2, 1u);
    EXPECT_NEAR(r.bins[r.bins.size() / 2].lo + r.bins[r.bins.size() / 2].hi, 0.0, 1e-12);
    EXPECT_FALSE(r.limitation.empty());
}

TEST(PointwiseRatio, ShiftedMeanAtOrigin) {
    // N(0.5, 1) / N(0, 1) = exp(0.5 t - 0.125)
    const auto r = pointwise_ratio(shifted(gaussian_batch(1, 1000000, 1.0, 32), 0.5), 2.0);
    const auto& centre = r.bins[r.bins.size() / 2];
    EXPECT_NEAR(centre.deviation, std::exp(-0.125) - 1.0, 0.03);
}

TEST(PointwiseRatio, DegenerateInputs) {
    const auto g = gaussian_batch(1, 100000, 1.0, 33);
    EXPECT_THROW(pointwise_ratio(g, 0.0), InsufficientData);
    EXPECT_THROW(pointwise_ratio(g, 3.5), PreconditionError);
    EXPECT_THROW(pointwise_ratio(gaussian_batch(1, 99999, 1.0, 1), 2.0), InsufficientData);
    EXPECT_THROW(pointwise_ratio(gaussian_batch(2, 100000, 1.0, 1), 2.0), PreconditionError);
    // a uniform law has no mass beyond sqrt(3)
    try {
        pointwise_ratio(exact_sample(make_body(BodyKind::cube, 1), 100000, 34), 2.5);
        ADD_FAILURE() << "expected an empty-bin error";
    } catch (const InsufficientData& e) {
        EXPECT_NE(std::string(e.what()).find("empty bin"), std::string::npos);
    }
}

// ---------------------------------------------------------------- thin shell

TEST(ThinShell, GaussianTailMatchesChiSquare) {
    const int n = 100;
    const auto s = thin_shell_stats(gaussian_batch(n, 100000, 1.0, 40), {0.1, 0.05});
    ASSERT_EQ(s.tail.size(), 2u);
    EXPECT_EQ(s.tail[0].eps, 0.05);
    const boost::math::chi_squared chi(n);
    for (const auto& row : s.tail) {
        const double lo = (1.0 - row.eps) * (1.0 - row.eps) * n, hi = (1.0 + row.eps) * (1.0 + row.eps) * n;
        const double exact = boost::math::cdf(chi, lo) + boost::math::cdf(boost::math::complement(chi, hi));
        EXPECT_GE(exact, row.ci.lo) << row.eps;
        EXPECT_LE(exact, row.ci.hi) << row.eps;
    }
}

TEST(ThinShell, CubeWidthFromFourthMoment) {
    const int n = 256;
    const auto s = thin_shell_stats(exact_sample(make_body(BodyKind::cube, n), 200000, 41), {0.1});
    const double predicted = std::sqrt(0.8) / (2.0 * std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(s.shell_width, predicted, 0.15 * predicted);
    EXPECT_NEAR(s.mean_norm_ratio, 1.0, 1e-3);
    EXPECT_GT(s.shell_width_se, 0.0);
    EXPECT_LT(s.shell_width_se, 0.01 * s.shell_width);
}

TEST(ThinShell, SingleSampleOnTheShell) {
    SampleBatch b;
    b.points = RowMatrix::Constant(1, 16, 1.0);
    const auto s = thin_shell_stats(b, {0.1});
    EXPECT_DOUBLE_EQ(s.mean_norm_ratio, 1.0);
    EXPECT_EQ(s.shell_width, 0.0);
    EXPECT_EQ(s.tail[0].frequency, 0.0);
    b.points.resize(0, 16);
    EXPECT_THROW(thin_shell_stats(b, {0.1}), InsufficientData);
}

// ---------------------------------------------------------------- radial flatness

TEST(Flatness, GaussianIsRadial) {
    for (int k : {2, 3}) {
        const auto b = add_gaussian(gaussian_batch(k, 1000000, 0.5, 50 + k), 0.5, 60 + k);
        const auto rep = radial_flatness(b);
        EXPECT_LE(rep.oscillation, 2.0 * rep.noise_floor) << k;
        EXPECT_EQ(rep.per_radius.size(), 4u);
        EXPECT_NEAR(rep.delta, rep.oscillation / k, 1e-15);
    }
}

TEST(Flatness, RotationCovariance) {
    const auto b = add_gaussian(cube_projection(2, 2, 1000000, 70), 0.1, 71);
    auto rotated = b;
    rotated.points = b.points * plane_rotation(2, 0, 1, 0.4).matrix().transpose();
    const auto r1 = radial_flatness(b), r2 = radial_flatness(rotated);
    EXPECT_GT(r1.oscillation, 5.0 * r1.noise_floor);  // a square is far from radial
    EXPECT_NEAR(r1.oscillation, r2.oscillation, 2.0 * (r1.noise_floor + r2.noise_floor));
}

TEST(Flatness, Preconditions) {
    const auto raw = gaussian_batch(2, 100000, 1.0, 80);
    EXPECT_THROW(radial_flatness(raw), PreconditionError);
    EXPECT_THROW(radial_flatness(add_gaussian(gaussian_batch(4, 1000, 1.0, 81), 1.0, 82)), UnsupportedDimension);
    try {
        radial_flatness(add_gaussian(gaussian_batch(2, 2000, 0.5, 83), 0.5, 84));
        ADD_FAILURE() << "expected a sparse-probe error";
    } catch (const InsufficientData& e) {
        EXPECT_NE(std::string(e.what()).find("probe"), std::string::npos);
    }
}

// ---------------------------------------------------------------- M functional

TEST(MFunctional, RotatingTheDensityRotatesTheSubspace) {
    const auto f = smoothed_cube_density(3, 1.0);
    CounterRng rng(90, "m-identity");
    for (int t = 0; t < 50; ++t) {
        const auto e = random_subspace(3, 1, 91, static_cast<std::uint64_t>(t));
        const auto u = haar_rotation(3, 92, static_cast<std::uint64_t>(t));
        const Point x = Point::Constant(1, rng.uniform(-2.0, 2.0));
        const double lhs = m_functional(f, e, x, u);
        const double rhs = std::log(marginal_quadrature(f, e.rotated(u), x));
        EXPECT_NEAR(lhs, rhs, 1e-6) << t;
    }
    const auto e = Subspace::coordinate(3, 1);
    EXPECT_NEAR(m_functional(f, e, Point::Zero(1), Rotation::identity(3)),
                std::log(marginal_quadrature(f, e, Point::Zero(1))), 1e-12);
}

TEST(MFunctional, LipschitzRatioAgainstDistanceSurrogate) {
    // |M(U1) - M(U2)| / ((pi / 2) |U1 - U2|_HS) stays bounded
    const auto f = smoothed_cube_density(3, 1.0);
    const auto e = Subspace::coordinate(3, 2);
    Point x(2);
    x << 0.6, -0.3;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto u1 = haar_rotation(3, 93, 2 * static_cast<std::uint64_t>(t));
        const auto u2 = haar_rotation(3, 93, 2 * static_cast<std::uint64_t>(t) + 1);
        const double dist = geodesic_distance_bounds(u1, u2).upper;
        worst = std::max(worst, std::abs(m_functional(f, e, x, u1) - m_functional(f, e, x, u2)) / dist);
    }
    RecordProperty("max_ratio", std::to_string(worst));
    EXPECT_TRUE(std::isfinite(worst));
    EXPECT_GT(worst, 0.0);
    // the gradient of log f * U is bounded by |x| + its smoothing scale, so
    // the ratio is O(1)
    EXPECT_LT(worst, 10.0);
}
