#pragma once

// Seeded random corpora for the property suites: piecewise log-linear
// log-concave densities in dimensions 1 and 2, radial profiles, and
// non-increasing weights.

#include "thinshell/core.hpp"
#include "thinshell/density.hpp"
#include "thinshell/linalg.hpp"
#include "thinshell/logconcave.hpp"
#include "thinshell/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace thinshell {

/// log f(x) = min_i (<a_i, x> + b_i), optionally restricted to a box.
struct PiecewiseLogLinear {
    Matrix gradients;  ///< one row per piece
    Point offsets;
    bool boxed = false;
    Point box_lo, box_hi;

    int dim() const { return static_cast<int>(gradients.cols()); }

    double operator()(const Point& x) const {
        if (boxed && ((x.array() < box_lo.array()).any() || (x.array() > box_hi.array()).any())) return kNegInf;
        return (gradients * x + offsets).minCoeff();
    }
};

namespace detail {

/// Sup of a log-concave function (and its location) on [-radius, radius]^dim.
template <class F>
std::pair<Point, double> concave_sup(F&& logf, int dim, double radius) {
    auto best = maximize_concave_box(logf, dim, radius);
    const auto grid = grid_log_max(logf, Point::Constant(dim, -radius), Point::Constant(dim, radius),
                                   grid_points_per_axis(dim));
    if (grid.value > best.second) best = {grid.argmax, grid.value};
    return best;
}

/// Radius of an origin-centred ball outside which logf < sup - 37 (f < 1e-16 sup):
/// rays from the maximizer, bisected per direction.
template <class F>
double superlevel_radius(F&& logf, const Point& top, double log_sup, double search_radius) {
    const double level = log_sup - 37.0;
    double worst = 0.0;
    for (const Point& u : probe_directions(static_cast<int>(top.size()))) {
        double a = 0.0, b = search_radius;
        if (logf(static_cast<const Point&>(top + b * u)) >= level) return kInf;
        for (int it = 0; it < 80 && b - a > 1e-9 * search_radius; ++it) {
            const double m = 0.5 * (a + b);
            (logf(static_cast<const Point&>(top + m * u)) >= level ? a : b) = m;
        }
        worst = std::max(worst, b);
    }
    return top.norm() + 1.05 * worst;
}

}  // namespace detail

/// Member `index` of the seeded corpus of piecewise log-linear densities in
/// dimension 1 or 2: 5-20 pieces, about 40% restricted to a random box.
inline LogConcaveDensity random_log_concave(int dim, std::uint64_t seed, std::uint64_t index) {
    if (dim < 1 || dim > 2) throw UnsupportedDimension("random_log_concave: corpus covers dimensions 1 and 2");
    CounterRng rng(seed, "corpus-density-" + std::to_string(dim), index);
    PiecewiseLogLinear p;
    const int pieces = 5 + static_cast<int>(rng.uniform() * 16.0);
    p.gradients.resize(pieces, dim);
    p.offsets.resize(pieces);
    p.boxed = rng.uniform() < 0.4;
    if (p.boxed) {
        p.box_lo = Point::NullaryExpr(dim, [&] { return rng.uniform(-3.0, -0.2); });
        p.box_hi = Point::NullaryExpr(dim, [&] { return rng.uniform(0.2, 3.0); });
    }
    if (dim == 1) {
        // slopes sorted decreasing; an unrestricted density needs both signs
        std::vector<double> slopes(pieces);
        for (double& s : slopes) s = rng.uniform(-3.0, 3.0);
        std::sort(slopes.begin(), slopes.end(), std::greater<>());
        if (!p.boxed) {
            slopes.front() = std::abs(slopes.front()) + 0.3;
            slopes.back() = -std::abs(slopes.back()) - 0.3;
        }
        std::vector<double> knots(pieces - 1);
        for (double& k : knots) k = rng.uniform(-2.0, 2.0);
        std::sort(knots.begin(), knots.end());
        // continuous piecewise-linear profile with value 0 at the first knot
        double b = -slopes[0] * knots[0];
        for (int i = 0; i < pieces; ++i) {
            if (i > 0) b += (slopes[i - 1] - slopes[i]) * knots[i - 1];
            p.gradients(i, 0) = slopes[i];
            p.offsets[i] = b;
        }
    } else {
        // gradient directions with angular gaps below 0.75 pi keep the origin
        // inside their convex hull, so the density decays in every direction
        std::vector<double> angles;
        do {
            angles.assign(pieces, 0.0);
            for (double& a : angles) a = rng.uniform(0.0, 2.0 * std::numbers::pi);
            std::sort(angles.begin(), angles.end());
            double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
            for (int i = 1; i < pieces; ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
            if (p.boxed || gap < 0.75 * std::numbers::pi) break;
        } while (true);
        for (int i = 0; i < pieces; ++i) {
            const double rho = rng.uniform(0.5, 3.0);
            p.gradients(i, 0) = rho * std::cos(angles[i]);
            p.gradients(i, 1) = rho * std::sin(angles[i]);
            p.offsets[i] = rng.uniform(0.0, 1.0);
        }
    }

    const std::string name = "corpus" + std::to_string(dim) + "d[" + std::to_string(index) + "]";
    DecayHint hint;
    if (p.boxed) {
        hint.compact = true;
        hint.tail_radius = p.box_lo.cwiseAbs().cwiseMax(p.box_hi.cwiseAbs()).norm() * (1.0 + 1e-12);
    } else {
        auto logf = [&p](const Point& x) { return p(x); };
        const auto [top, log_sup] = detail::concave_sup(logf, dim, 50.0);
        hint.tail_radius = detail::superlevel_radius(logf, top, log_sup, 1e4);
        double rate = kInf;
        for (const Point& u : detail::probe_directions(dim)) rate = std::min(rate, -(p.gradients * u).minCoeff());
        hint.rate = 0.99 * rate;
    }
    return LogConcaveDensity(
        dim, [p](const Point& x) { return p(x); }, Normalization::unnormalized, hint, name);
}

/// The isotropic image of d: y -> det(A) d(mu + A y) / mass with A = Cov^{1/2}.
inline LogConcaveDensity isotropize(const LogConcaveDensity& d, const QuadratureSpec& spec = {}) {
    const auto m = density_moments(d, spec);
    const auto roots = symmetric_roots(m.covariance);
    const Matrix a = roots.sqrt;
    const Point mu = m.mean;
    const double log_scale = std::log(a.determinant()) - m.log_mass;
    const auto& hint = *d.decay_hint();
    const double s_min = std::sqrt(roots.min_eigenvalue);
    DecayHint iso{hint.rate * s_min, (d.tail_radius() + mu.norm()) / s_min, hint.compact};
    return LogConcaveDensity(
        d.dim(), [d, a, mu, log_scale](const Point& y) { return d.log_density(mu + a * y) + log_scale; },
        Normalization::normalized, iso, "iso(" + d.name() + ")");
}

/// Random smooth log-concave radial profile
///   log f(t) = c log t - a t^q - b t,
/// with its analytic derivative.
inline RadialProfile random_smooth_profile(std::uint64_t seed, std::uint64_t index) {
    CounterRng rng(seed, "corpus-profile-smooth", index);
    const double a = rng.uniform(0.1, 2.0), q = rng.uniform(1.0, 3.0), b = rng.uniform(0.0, 2.0),
                 c = rng.uniform(0.0, 3.0);
    // beyond t_max the profile is below e^{-60} of its value at t = 1 for p <= 200
    double t_max = 1.0;
    while (-a * std::pow(t_max, q) - b * t_max + (c + 200.0) * std::log(t_max) > -a - b - 60.0 || t_max < 2.0)
        t_max *= 1.5;
    return RadialProfile{
        [a, q, b, c](double t) { return t > 0.0 ? c * std::log(t) - a * std::pow(t, q) - b * t : (c > 0 ? kNegInf : 0.0); },
        [a, q, b, c](double t) { return c / t - a * q * std::pow(t, q - 1.0) - b; }, 0.0, t_max};
}

/// Random piecewise log-linear log-concave profile on [0, t_max] (5-20
/// knots, slopes decreasing, last slope negative). No analytic derivative:
/// t_p reads the kinks through one-sided slopes.
inline RadialProfile random_kinked_profile(std::uint64_t seed, std::uint64_t index) {
    CounterRng rng(seed, "corpus-profile-kinked", index);
    const int knots = 5 + static_cast<int>(rng.uniform() * 16.0);
    std::vector<double> t(knots), s(knots + 1);
    for (double& x : t) x = rng.uniform(0.0, 6.0);
    std::sort(t.begin(), t.end());
    for (double& x : s) x = rng.uniform(-4.0, 2.0);
    std::sort(s.begin(), s.end(), std::greater<>());
    s.back() = -std::abs(s.back()) - 0.5;
    std::vector<double> v(knots);  // log f at each knot, log f(0) = 0
    double prev_t = 0.0, acc = 0.0;
    for (int i = 0; i < knots; ++i) {
        acc += s[i] * (t[i] - prev_t);
        v[i] = acc;
        prev_t = t[i];
    }
    const double t_max = t.back() + (300.0 + std::abs(acc)) / std::abs(s.back());
    auto logf = [t, s, v](double x) {
        if (x < 0.0) return kNegInf;
        const auto it = std::upper_bound(t.begin(), t.end(), x);
        const auto i = static_cast<std::size_t>(it - t.begin());
        if (i == 0) return s[0] * x;
        return v[i - 1] + s[i] * (x - t[i - 1]);
    };
    return RadialProfile{logf, {}, 0.0, t_max};
}

/// Random measurable, not necessarily log-concave, profile on [0, 40]: a
/// two-bump mixture.
inline RadialProfile random_bimodal_profile(std::uint64_t seed, std::uint64_t index) {
    CounterRng rng(seed, "corpus-profile-bimodal", index);
    const double m1 = rng.uniform(0.0, 3.0), m2 = rng.uniform(2.0, 8.0);
    const double s1 = rng.uniform(0.2, 1.5), s2 = rng.uniform(0.2, 1.5), w = rng.uniform(0.05, 2.0);
    return RadialProfile{[=](double t) {
                             const double a = -0.5 * (t - m1) * (t - m1) / (s1 * s1);
                             const double b = std::log(w) - 0.5 * (t - m2) * (t - m2) / (s2 * s2);
                             const double hi = std::max(a, b);
                             return hi + std::log1p(std::exp(std::min(a, b) - hi));
                         },
                         {}, 0.0, 40.0};
}

/// Random positive non-increasing weight on [0, t_max]: a decreasing
/// piecewise-linear log with downward jumps at random points.
inline RadialProfile random_decreasing_weight(std::uint64_t seed, std::uint64_t index, double t_max) {
    CounterRng rng(seed, "corpus-weight", index);
    const int pieces = 1 + static_cast<int>(rng.uniform() * 8.0);
    std::vector<double> t(pieces - 1), slope(pieces), jump(pieces - 1);
    for (double& x : t) x = rng.uniform(0.0, std::min(t_max, 10.0));
    std::sort(t.begin(), t.end());
    for (double& x : slope) x = -rng.uniform(0.0, 2.0);
    for (double& x : jump) x = rng.uniform() < 0.5 ? -rng.uniform(0.0, 2.0) : 0.0;
    return RadialProfile{[t, slope, jump](double x) {
                             double acc = 0.0, prev = 0.0;
                             std::size_t i = 0;
                             for (; i < t.size() && t[i] <= x; ++i) {
                                 acc += slope[i] * (t[i] - prev) + jump[i];
                                 prev = t[i];
                             }
                             return acc + slope[i] * (x - prev);
                         },
                         {}, 0.0, t_max};
}

}  // namespace thinshell
