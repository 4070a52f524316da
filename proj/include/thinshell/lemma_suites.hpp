#pragma once

// Quadrature-verified property suites over the seeded corpora. Each suite
// returns instance and violation counts plus any constants it fits.

#include "thinshell/corpus.hpp"
#include "thinshell/logconcave.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace thinshell {

struct SuiteResult {
    SuiteResult(std::string n = {}) : name(std::move(n)) {}

    std::string name;
    std::size_t instances = 0;
    std::size_t violations = 0;
    /// suite-specific extreme value (documented per suite)
    double worst = 0.0;
    std::vector<std::pair<std::string, double>> fitted;
    /// first few violating instances, for diagnostics
    std::vector<std::string> failures;

    bool passed() const { return violations == 0; }

    void fail(std::string what) {
        ++violations;
        if (failures.size() < 10) failures.push_back(std::move(what));
    }
};

struct SuiteOptions {
    std::uint64_t seed = 0;
    std::size_t count = 200;
    QuadratureSpec spec{};
};

/// Fradelizi (f(x0) >= e^{-n} sup f, dims 1-2 alternating) and level-set
/// mass (mass of {f >= e^{-10n} sup f} >= 1 - e^{-n} - 10 abs_tol, dim 2
/// members) over one corpus. worst = min of ratio / bound.
/// The Fradelizi comparison allows a relative 1e-6 for the quadrature error
/// in the barycenter; no corpus member comes that close to equality.
inline std::pair<SuiteResult, SuiteResult> landmark_suites(const SuiteOptions& opt = {}) {
    SuiteResult frad{"fradelizi"}, level{"level_set_mass"};
    frad.worst = level.worst = kInf;
    for (std::size_t i = 0; i < opt.count; ++i) {
        const int dim = 1 + static_cast<int>(i % 2);
        const auto d = random_log_concave(dim, opt.seed, i);
        const auto l = density_landmarks(d, opt.spec);
        const double bound = std::exp(-static_cast<double>(dim));
        ++frad.instances;
        frad.worst = std::min(frad.worst, l.barycenter_ratio / bound);
        if (l.barycenter_ratio < bound * (1.0 - 1e-6))
            frad.fail(d.name() + ": f(x0)/sup f = " + std::to_string(l.barycenter_ratio));
        if (dim == 2) {
            ++level.instances;
            const double need = 1.0 - bound - 10.0 * opt.spec.abs_tol;
            level.worst = std::min(level.worst, l.level_set_mass_10n / need);
            if (l.level_set_mass_10n < need)
                level.fail(d.name() + ": level-set mass " + std::to_string(l.level_set_mass_10n));
        }
    }
    return {frad, level};
}

/// Level-set radius over isotropic corpus members: level_set_radius_e_n / dim
/// must stay below 100. worst = max ratio (also fitted as C).
inline SuiteResult level_set_radius_suite(const SuiteOptions& opt = {}) {
    SuiteResult r{"level_set_radius"};
    for (std::size_t i = 0; i < opt.count; ++i) {
        const int dim = 1 + static_cast<int>(i % 2);
        const auto d = isotropize(random_log_concave(dim, opt.seed, i), opt.spec);
        const auto l = density_landmarks(d, opt.spec);
        if (std::isnan(l.level_set_radius_e_n)) continue;  // f(0) = 0
        ++r.instances;
        const double ratio = l.level_set_radius_e_n / dim;
        r.worst = std::max(r.worst, ratio);
        if (!(ratio <= 100.0)) r.fail(d.name() + ": radius/dim = " + std::to_string(ratio));
    }
    r.fitted.emplace_back("C", r.worst);
    return r;
}

/// Decay of isotropic corpus members. For M(r) = max_{|x|=r} log f(x) - log f(0),
/// fits the threshold r* after which M strictly decreases, c = the smallest
/// decrease rate beyond r*, and C = max_r (M(r) + c r) / dim. Asserts f(x) <= f(0)
/// for |x| >= 10 dim and c > 0. worst = max fitted threshold r* / dim.
inline SuiteResult decay_suite(const SuiteOptions& opt = {}) {
    SuiteResult r{"decay"};
    double c_min = kInf, c_cap = 0.0;
    struct Profile {
        double dim;
        std::vector<double> radii, m;
    };
    std::vector<Profile> profiles;
    for (std::size_t i = 0; i < opt.count; ++i) {
        const int dim = 1 + static_cast<int>(i % 2);
        const auto d = isotropize(random_log_concave(dim, opt.seed, i), opt.spec);
        const double log_f0 = d.log_density(Point::Zero(dim));
        if (log_f0 == kNegInf) continue;
        ++r.instances;
        const double r_end = std::max(12.0 * dim, 1.2 * d.tail_radius());
        constexpr int steps = 240;
        std::vector<double> radii(steps + 1), m(steps + 1, kNegInf);
        const auto dirs = detail::probe_directions(dim);
        for (int k = 0; k <= steps; ++k) {
            radii[k] = r_end * k / steps;
            for (const Point& u : dirs) m[k] = std::max(m[k], d.log_density(radii[k] * u) - log_f0);
        }
        for (int k = 0; k <= steps; ++k)
            if (radii[k] >= 10.0 * dim && m[k] > 1e-12)
                r.fail(d.name() + ": f(x) > f(0) at |x| = " + std::to_string(radii[k]));
        int start = steps;
        while (start > 0 && (m[start - 1] > m[start] || m[start - 1] == kNegInf)) --start;
        double c = kInf;
        for (int k = start; k < steps; ++k)
            if (m[k] > kNegInf && m[k + 1] > kNegInf) c = std::min(c, (m[k] - m[k + 1]) / (radii[k + 1] - radii[k]));
        if (!(c > 0.0)) r.fail(d.name() + ": no decreasing tail within r <= " + std::to_string(r_end));
        r.worst = std::max(r.worst, radii[start] / dim);
        if (std::isfinite(c)) c_min = std::min(c_min, c);
        c_cap = std::max(c_cap, std::isfinite(c) ? c : 0.0);
        profiles.push_back({static_cast<double>(dim), std::move(radii), std::move(m)});
    }
    const double c = std::isfinite(c_min) ? c_min : c_cap;
    double big_c = kNegInf;
    for (const auto& p : profiles)
        for (std::size_t k = 0; k < p.m.size(); ++k)
            if (p.m[k] > kNegInf) big_c = std::max(big_c, (p.m[k] + c * p.radii[k]) / p.dim);
    r.fitted.emplace_back("c", c);
    r.fitted.emplace_back("C", big_c);
    return r;
}

/// Monotone reweighting over random (f, g) pairs: f cycles through smooth
/// and kinked log-concave profiles and non-log-concave two-bump mixtures,
/// g is a random non-increasing weight. Asserts lhs <= rhs + 1e-6 min(1, rhs).
/// worst = max of (lhs - rhs) / rhs.
inline SuiteResult reweight_suite(const SuiteOptions& opt = {}) {
    SuiteResult r{"monotone_reweight"};
    r.worst = -kInf;
    for (std::size_t i = 0; i < opt.count; ++i) {
        const RadialProfile f = i % 3 == 0   ? random_smooth_profile(opt.seed, i)
                                : i % 3 == 1 ? random_kinked_profile(opt.seed, i)
                                             : random_bimodal_profile(opt.seed, i);
        const auto g = random_decreasing_weight(opt.seed, i, f.t_max);
        const auto m = monotone_reweight_check(f, g, opt.spec);
        ++r.instances;
        r.worst = std::max(r.worst, (m.lhs - m.rhs) / m.rhs);
        if (m.lhs > m.rhs + 1e-6 * std::min(1.0, m.rhs))
            r.fail("pair " + std::to_string(i) + ": lhs " + std::to_string(m.lhs) + " > rhs " + std::to_string(m.rhs));
    }
    return r;
}

/// Tilted-moment bounds on isotropic corpus members with random tilt centre
/// (|x| <= 3 sqrt(n)) and v log-uniform in [0.1, 10]. worst = max over
/// instances of the larger of second_moment / (n + |x|^2) and
/// mean_shift / (sqrt(n) + |x|).
inline SuiteResult tilted_suite(const SuiteOptions& opt = {}) {
    SuiteResult r{"tilted_moments"};
    for (std::size_t i = 0; i < opt.count; ++i) {
        const int dim = 1 + static_cast<int>(i % 2);
        const auto d = isotropize(random_log_concave(dim, opt.seed, i), opt.spec);
        CounterRng rng(opt.seed, "tilted-suite", i);
        Point x = Point::NullaryExpr(dim, [&] { return rng.normal(); });
        x *= 3.0 * std::sqrt(static_cast<double>(dim)) * rng.uniform() / std::max(x.norm(), 1e-300);
        const double v = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
        TiltedMoments t{};
        try {
            t = tilted_moments(d, x, v, opt.spec);
        } catch (const PreconditionError&) {
            continue;  // tilt centre too far outside a compact support for the tilted mass to register
        }
        ++r.instances;
        const double n = dim, xn = x.norm();
        const double b1 = n + xn * xn, b2 = std::sqrt(n) + xn;
        r.worst = std::max({r.worst, t.second_moment / b1, t.mean_shift / b2});
        if (t.second_moment > b1 + 1e-6 || t.mean_shift > b2 + 1e-6)
            r.fail(d.name() + ": E|X-x|^2 = " + std::to_string(t.second_moment) +
                   ", |EX-x| = " + std::to_string(t.mean_shift));
    }
    return r;
}

/// Gradient bound: max over isotropic corpus members, v in {0.25, 1} and probe
/// points with |x| <= 10 sqrt(n) of |grad log g(x)| v / sqrt(n); asserted <= 100.
/// worst = that maximum (also fitted as C).
inline SuiteResult gradient_suite(const SuiteOptions& opt = {}) {
    SuiteResult r{"gradient_bound"};
    for (std::size_t i = 0; i < opt.count; ++i) {
        const int dim = 1 + static_cast<int>(i % 2);
        const auto d = isotropize(random_log_concave(dim, opt.seed, i), opt.spec);
        CounterRng rng(opt.seed, "gradient-suite", i);
        for (double v : {0.25, 1.0}) {
            for (int k = 0; k < 3; ++k) {
                Point x = Point::NullaryExpr(dim, [&] { return rng.normal(); });
                const double scale = k == 0 ? 0.0 : 10.0 * std::sqrt(static_cast<double>(dim)) * rng.uniform();
                x *= scale / std::max(x.norm(), 1e-300);
                const Point gr = grad_log_convolved(d, v, x, opt.spec);
                ++r.instances;
                const double s = gr.norm() * v / std::sqrt(static_cast<double>(dim));
                r.worst = std::max(r.worst, s);
                if (!(s <= 100.0)) r.fail(d.name() + ": |grad| v / sqrt(n) = " + std::to_string(s));
            }
        }
    }
    r.fitted.emplace_back("C", r.worst);
    return r;
}

/// Midpoint convexity of the log-Laplace transform on corpus members: three
/// probe pairs per member inside 0.8 times the decay rate. worst = max of
/// Y((x+y)/2) - (Y(x) + Y(y))/2.
inline SuiteResult laplace_convexity_suite(const SuiteOptions& opt = {}) {
    SuiteResult r{"laplace_convexity"};
    r.worst = -kInf;
    for (std::size_t i = 0; i < opt.count; ++i) {
        const int dim = 1 + static_cast<int>(i % 2);
        const auto d = random_log_concave(dim, opt.seed, i);
        const double reach = d.decay_hint()->compact ? 2.0 : std::min(2.0, 0.8 * d.decay_hint()->rate);
        CounterRng rng(opt.seed, "laplace-suite", i);
        auto draw = [&] {
            Point x = Point::NullaryExpr(dim, [&] { return rng.normal(); });
            return Point(x * (reach * rng.uniform() / std::max(x.norm(), 1e-300)));
        };
        for (int k = 0; k < 3; ++k) {
            const Point x = draw(), y = draw();
            const double gap = log_laplace(d, 0.5 * (x + y), opt.spec) -
                               0.5 * (log_laplace(d, x, opt.spec) + log_laplace(d, y, opt.spec));
            ++r.instances;
            r.worst = std::max(r.worst, gap);
            if (gap > 1e-6) r.fail(d.name() + ": midpoint excess " + std::to_string(gap));
        }
    }
    return r;
}

/// t_p residual and mass_window monotonicity on smooth and kinked profiles,
/// p in {2, 5, 10, 50, 100}. Smooth profiles: |h(t_p)| <= 1e-10 (p - 1) with
/// the analytic derivative, while t_p itself runs on central differences.
/// Kinked profiles: the one-sided slopes at t_p bracket the root.
/// Fits (C, c) with mass_window >= 1 - C exp(-c eps^2 p) as an envelope.
/// worst = max residual / (p - 1) over smooth profiles.
inline SuiteResult tp_suite(const SuiteOptions& opt = {}) {
    SuiteResult r{"t_p"};
    std::vector<std::pair<double, double>> tail;  // (eps^2 p, log(1 - fraction))
    for (std::size_t i = 0; i < opt.count; ++i) {
        const bool smooth = i % 2 == 0;
        RadialProfile f = smooth ? random_smooth_profile(opt.seed, i) : random_kinked_profile(opt.seed, i);
        const auto analytic = f.dlog_profile;
        if (smooth) f.dlog_profile = nullptr;
        for (double p : {2.0, 5.0, 10.0, 50.0, 100.0}) {
            double t = 0.0;
            try {
                t = t_p(f, p);
            } catch (const NoRootError& e) {
                r.fail("profile " + std::to_string(i) + ", p=" + std::to_string(p) + ": " + e.what());
                continue;
            }
            ++r.instances;
            if (smooth) {
                const double res = std::abs(t * analytic(t) + p - 1.0);
                r.worst = std::max(r.worst, res / (p - 1.0));
                if (res > 1e-10 * (p - 1.0))
                    r.fail("profile " + std::to_string(i) + ", p=" + std::to_string(p) + ": residual " + std::to_string(res));
            } else {
                const double h = 1e-7 * t;
                const double left = (f.log(t) - f.log(t - h)) / h, right = (f.log(t + h) - f.log(t)) / h;
                const double tol = 1e-6 * (p - 1.0);
                if (!(t * left + p - 1.0 >= -tol && t * right + p - 1.0 <= tol))
                    r.fail("profile " + std::to_string(i) + ", p=" + std::to_string(p) + ": one-sided slopes miss the root");
            }
            double prev = -1.0;
            for (int k = 0; k <= 10; ++k) {
                const double eps = 0.1 * k;
                const double frac = mass_window(f, p, eps, opt.spec);
                if (frac < prev - 1e-9)
                    r.fail("profile " + std::to_string(i) + ", p=" + std::to_string(p) + ": mass_window decreases at eps=" +
                           std::to_string(eps));
                prev = std::max(prev, frac);
                if (k > 0 && frac < 1.0 - 1e-12) tail.emplace_back(eps * eps * p, std::log1p(-frac));
            }
        }
    }
    // least-squares slope, then the smallest C that makes the curve an envelope
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : tail) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = static_cast<double>(tail.size());
    const double denom = nn * sxx - sx * sx;
    const double c = denom > 0.0 ? std::max(0.0, -(nn * sxy - sx * sy) / denom) : 0.0;
    double log_c = kNegInf;
    for (const auto& [x, y] : tail) log_c = std::max(log_c, y + c * x);
    r.fitted.emplace_back("window_c", c);
    r.fitted.emplace_back("window_C", std::exp(log_c));
    return r;
}

}  // namespace thinshell
