#pragma once

// Uniform samples from convex bodies (exact for the standard bodies,
// hit-and-run for H-polytopes), Gaussian batches and perturbations, and
// empirical isotropic normalization.

#include "thinshell/batch.hpp"
#include "thinshell/body.hpp"
#include "thinshell/linalg.hpp"
#include "thinshell/parallel.hpp"
#include "thinshell/rng.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace thinshell {

inline bool has_exact_sampler(const ConvexBody& b) { return b.kind() != BodyKind::halfspaces; }

namespace detail {

/// Uniform point of the raw body.
inline void raw_uniform(const ConvexBody& body, CounterRng& rng, Eigen::Ref<Point> x) {
    const int n = body.dim();
    switch (body.kind()) {
        case BodyKind::cube:
            for (int i = 0; i < n; ++i) x[i] = body.raw_scale() * (2.0 * rng.uniform() - 1.0);
            break;
        case BodyKind::ball: {
            for (int i = 0; i < n; ++i) x[i] = rng.normal();
            const double r = body.raw_scale() * std::pow(rng.uniform_pos(), 1.0 / n);
            x *= r / x.norm();
            break;
        }
        case BodyKind::simplex:
        case BodyKind::cross_polytope: {
            // normalized exponential spacings: the first n of n + 1 coordinates
            double total = 0.0;
            for (int i = 0; i < n; ++i) total += x[i] = rng.exponential();
            total += rng.exponential();
            x /= total;
            if (body.kind() == BodyKind::cross_polytope)
                for (int i = 0; i < n; ++i)
                    if (rng() >> 63) x[i] = -x[i];
            break;
        }
        case BodyKind::halfspaces: throw PreconditionError("exact_sample: no exact sampler for H-polytopes, use hit_and_run_batch");
    }
}

inline void unit_direction(CounterRng& rng, Point& u) {
    do {
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.normal();
    } while (u.squaredNorm() == 0.0);
    u.normalize();
}

}  // namespace detail

/// i.i.d. uniform samples; row i depends only on (seed, i).
inline SampleBatch exact_sample(const ConvexBody& body, Eigen::Index count, std::uint64_t seed) {
    if (!has_exact_sampler(body)) throw PreconditionError("exact_sample: no exact sampler for H-polytopes, use hit_and_run_batch");
    SampleBatch b;
    b.points.resize(count, body.dim());
    b.provenance.seed = seed;
    b.provenance.source = body.id();
    const std::string tag = "exact-" + to_string(body.kind());
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t begin, std::size_t end) {
        Point x(body.dim());
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, tag, i);
            detail::raw_uniform(body, rng, x);
            b.points.row(static_cast<Eigen::Index>(i)) = body.to_placed(x).transpose();
        }
    });
    return b;
}

/// Samples of gamma_n[v], the centred Gaussian with covariance v Id.
inline SampleBatch gaussian_batch(int n, Eigen::Index count, double v, std::uint64_t seed) {
    if (n < 1 || !(v > 0.0)) throw PreconditionError("gaussian_batch: need n >= 1 and v > 0");
    SampleBatch b;
    b.points.resize(count, n);
    b.provenance.seed = seed;
    b.provenance.source = "gaussian" + std::to_string(n) + "[" + format_double(v) + "]";
    const double s = std::sqrt(v);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, "gaussian-batch", i);
            for (int j = 0; j < n; ++j) b.points(static_cast<Eigen::Index>(i), j) = s * rng.normal();
        }
    });
    return b;
}

/// x -> x + sqrt(v) Z with fresh standard Gaussians Z; the result is
/// distributed as f * gamma_n[v].
inline SampleBatch add_gaussian(const SampleBatch& batch, double v, std::uint64_t seed) {
    if (!(v >= 0.0)) throw PreconditionError("add_gaussian: v must be >= 0");
    SampleBatch out = batch;
    if (v == 0.0) return out;
    const double s = std::sqrt(v);
    parallel_for(static_cast<std::size_t>(batch.count()), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, "add-gaussian", i);
            for (Eigen::Index j = 0; j < batch.dim(); ++j) out.points(static_cast<Eigen::Index>(i), j) += s * rng.normal();
        }
    });
    out.provenance.gaussian_v_added += v;
    return out;
}

enum class ChainStart { origin, warm };

struct ChainSpec {
    long long burn_in = -1;   ///< negative: 50 n
    long long thinning = 0;   ///< zero: n
    ChainStart start = ChainStart::origin;
    int chains = 8;           ///< independent chains; rows are split evenly, chain-major
};

/// Hit-and-run: uniform direction, exact chord, uniform point on the chord.
/// Chain c owns stream (seed, "hit-and-run", c), so the batch does not
/// depend on the worker count. A warm start draws the initial point
/// uniformly from the inscribed ball of radius inner_radius().
inline SampleBatch hit_and_run_batch(const ConvexBody& body, Eigen::Index count, ChainSpec chain, std::uint64_t seed) {
    const int n = body.dim();
    if (chain.burn_in < 0) chain.burn_in = 50LL * n;
    if (chain.thinning <= 0) chain.thinning = n;
    if (chain.chains < 1) throw PreconditionError("hit_and_run_batch: need at least one chain");
    SampleBatch b;
    b.points.resize(count, n);
    b.provenance.seed = seed;
    b.provenance.source = body.id();
    b.provenance.chain = ChainInfo{chain.burn_in, chain.thinning, chain.chains, chain.start == ChainStart::warm ? "warm" : "origin"};
    const auto chains = static_cast<std::size_t>(chain.chains);
    parallel_for(chains, [&](std::size_t begin, std::size_t end) {
        Point x(n), u(n), d(n);
        for (std::size_t c = begin; c < end; ++c) {
            const auto row_lo = static_cast<Eigen::Index>(c * static_cast<std::size_t>(count) / chains);
            const auto row_hi = static_cast<Eigen::Index>((c + 1) * static_cast<std::size_t>(count) / chains);
            if (row_lo == row_hi) continue;
            CounterRng rng(seed, "hit-and-run", c);
            Point y = Point::Zero(n);
            if (chain.start == ChainStart::warm) {
                detail::unit_direction(rng, u);
                y = 0.999 * body.inner_radius() * std::pow(rng.uniform(), 1.0 / n) * u;
            }
            x = body.to_raw(y);
            auto step = [&] {
                detail::unit_direction(rng, u);
                d = body.raw_direction(u);
                const auto ch = body.raw_chord(x, d);
                if (!ch) throw OracleInconsistency("hit_and_run_batch: no chord through the current point of " + body.id(), body.to_placed(x));
                x += rng.uniform(ch->lo, ch->hi) * d;
            };
            for (long long s = 0; s < chain.burn_in; ++s) step();
            for (Eigen::Index r = row_lo; r < row_hi; ++r) {
                for (long long s = 0; s < chain.thinning; ++s) step();
                b.points.row(r) = body.to_placed(x).transpose();
            }
        }
    });
    return b;
}

/// Exact samples where available, hit-and-run otherwise.
inline SampleBatch sample_body(const ConvexBody& body, Eigen::Index count, std::uint64_t seed, const ChainSpec& chain = {}) {
    return has_exact_sampler(body) ? exact_sample(body, count, seed) : hit_and_run_batch(body, count, chain, seed);
}

/// Sample mean and unbiased covariance of the rows.
inline std::pair<Point, Matrix> mean_covariance(const SampleBatch& b) {
    if (b.count() < 2) throw InsufficientData("mean_covariance: need at least two rows");
    const Point mean = b.points.colwise().mean().transpose();
    const RowMatrix centred = b.points.rowwise() - mean.transpose();
    const Matrix cov = (centred.transpose() * centred) / static_cast<double>(b.count() - 1);
    return {mean, cov};
}

/// Whitens the body with the mean and covariance of pilot_count samples.
/// The returned body's pilot statistics are exactly (0, Id).
inline std::pair<ConvexBody, IsotropicTransform> isotropic_normalize(const ConvexBody& body, Eigen::Index pilot_count,
                                                                     std::uint64_t seed, const ChainSpec& chain = {}) {
    if (pilot_count < body.dim() + 1) throw InsufficientData("isotropic_normalize: pilot smaller than dimension + 1");
    const auto pilot = sample_body(body, pilot_count, stream_key(seed, "isotropic-pilot"), chain);
    const auto [mean, cov] = mean_covariance(pilot);
    const auto roots = symmetric_roots(cov, 1e-10);
    IsotropicTransform t{mean, roots.inverse_sqrt, static_cast<long long>(pilot_count)};
    return {with_placement(body, t), t};
}

inline constexpr Eigen::Index kDefaultPilot = 200000;

/// make_body followed, for simplex and cross-polytope, by empirical
/// normalization with a 2e5-sample pilot.
inline ConvexBody isotropic_body(BodyKind kind, int n, std::uint64_t seed = 0, Eigen::Index pilot = kDefaultPilot) {
    ConvexBody b = make_body(kind, n);
    if (b.needs_normalization()) b = isotropic_normalize(b, pilot, seed).first;
    return b;
}

}  // namespace thinshell
