#include "thinshell/corpus.hpp"
#include "thinshell/lemma_suites.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace thinshell;

namespace {

void expect_clean(const SuiteResult& r) {
    EXPECT_GT(r.instances, 0u) << r.name;
    std::string why;
    for (const auto& f : r.failures) why += "\n  " + f;
    EXPECT_TRUE(r.passed()) << r.name << ": " << r.violations << " of " << r.instances << why;
}

SuiteOptions with_count(std::size_t n, std::uint64_t seed = 7) {
    SuiteOptions o;
    o.seed = seed;
    o.count = n;
    return o;
}

}  // namespace

// ---------------------------------------------------------------- corpus

TEST(Corpus, MembersAreDeterministicAndLogConcave) {
    for (int dim : {1, 2}) {
        for (std::uint64_t i = 0; i < 30; ++i) {
            const auto a = random_log_concave(dim, 3, i), b = random_log_concave(dim, 3, i);
            CounterRng rng(3, "corpus-test", i);
            for (int k = 0; k < 50; ++k) {
                const Point x = Point::NullaryExpr(dim, [&] { return rng.uniform(-4.0, 4.0); });
                const Point y = Point::NullaryExpr(dim, [&] { return rng.uniform(-4.0, 4.0); });
                ASSERT_EQ(a.log_density(x), b.log_density(x));
                const double fx = a.log_density(x), fy = a.log_density(y);
                if (fx == kNegInf || fy == kNegInf) continue;
                EXPECT_GE(a.log_density(static_cast<Point>(0.5 * (x + y))), 0.5 * (fx + fy) - 1e-12) << a.name();
            }
        }
    }
}

TEST(Corpus, DifferentSeedsDiffer) {
    const auto a = random_log_concave(2, 1, 0), b = random_log_concave(2, 2, 0);
    Point x(2);
    x << 0.3, -0.2;
    EXPECT_NE(a.log_density(x), b.log_density(x));
}

TEST(Corpus, IsotropizeGivesIdentityCovariance) {
    for (std::uint64_t i = 0; i < 4; ++i) {
        const auto d = isotropize(random_log_concave(1 + static_cast<int>(i % 2), 5, i));
        const auto m = density_moments(d);
        EXPECT_NEAR(std::exp(m.log_mass), 1.0, 1e-6) << d.name();
        EXPECT_LT(m.mean.norm(), 1e-5) << d.name();
        EXPECT_LT((m.covariance - Matrix::Identity(d.dim(), d.dim())).norm(), 1e-5) << d.name();
    }
}

TEST(Corpus, ProfilesHaveTheAdvertisedShape) {
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto k = random_kinked_profile(9, i);
        const auto w = random_decreasing_weight(9, i, 20.0);
        double prev = w.log(0.0);
        for (int j = 1; j < 400; ++j) {
            const double t = 0.05 * j;
            EXPECT_LE(w.log(t), prev + 1e-12);
            prev = w.log(t);
            const double a = 0.05 * (j - 1), b = 0.05 * (j + 1);
            EXPECT_GE(k.log(t), 0.5 * (k.log(a) + k.log(b)) - 1e-12);
        }
        EXPECT_TRUE(random_smooth_profile(9, i).dlog_profile);
        EXPECT_FALSE(k.dlog_profile);
    }
}

TEST(Corpus, RejectsDimensionThree) { EXPECT_THROW(random_log_concave(3, 0, 0), UnsupportedDimension); }

// ---------------------------------------------------------------- suites

TEST(Suites, LandmarksHoldOnCorpus) {
    const auto [frad, level] = landmark_suites(with_count(40));
    expect_clean(frad);
    expect_clean(level);
    EXPECT_GE(frad.worst, 1.0);
    EXPECT_EQ(level.instances, 20u);
}

TEST(Suites, LevelSetRadiusIsBounded) {
    const auto r = level_set_radius_suite(with_count(10));
    expect_clean(r);
}

TEST(Suites, DecayConstantsFit) {
    const auto r = decay_suite(with_count(20));
    expect_clean(r);
    ASSERT_EQ(r.fitted.size(), 2u);
    EXPECT_GT(r.fitted[0].second, 0.0);
}

TEST(Suites, ReweightingInequalityHolds) {
    const auto r = reweight_suite(with_count(500));
    expect_clean(r);
    EXPECT_EQ(r.instances, 500u);
}

TEST(Suites, TiltedMomentsAreBounded) { expect_clean(tilted_suite(with_count(10))); }

TEST(Suites, ConvolvedGradientsAreBounded) { expect_clean(gradient_suite(with_count(3))); }

TEST(Suites, LogLaplaceIsConvex) { expect_clean(laplace_convexity_suite(with_count(8))); }

TEST(Suites, TpResidualsAndWindows) {
    const auto r = tp_suite(with_count(100));
    expect_clean(r);
    EXPECT_LE(r.worst, 1e-10);
}

TEST(Suites, DeterministicForFixedSeed) {
    const auto a = decay_suite(with_count(4, 11)), b = decay_suite(with_count(4, 11));
    EXPECT_EQ(a.worst, b.worst);
    EXPECT_EQ(a.fitted, b.fitted);
}
