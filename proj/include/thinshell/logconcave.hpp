#pragma once

// Quadrature-backed operations on low-dimensional log-concave densities:
// marginals, Gaussian convolution, landmarks, the log-Laplace transform,
// tilted moments and the radial landmark t_p.
//
// Integrands are rescaled by a grid estimate of their peak before
// integration, so QuadratureSpec::abs_tol acts relative to the peak and
// every result is invariant under scaling of an unnormalized density.

#include "thinshell/core.hpp"
#include "thinshell/density.hpp"
#include "thinshell/geometry.hpp"
#include "thinshell/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace thinshell {

namespace detail {

inline void require_low_dim(int dim, const char* op) {
    if (dim > 3)
        throw UnsupportedDimension(std::string(op) + ": quadrature oracle supports dimension <= 3, got " +
                                   std::to_string(dim));
}

inline int grid_points_per_axis(Eigen::Index dim) { return dim == 1 ? 257 : dim == 2 ? 65 : 17; }

inline double integration_radius(const LogConcaveDensity& d, const QuadratureSpec& spec) {
    spec.validate();
    return spec.truncation_radius > 0.0 ? spec.truncation_radius : d.tail_radius();
}

/// Maximizes a concave function on [lo, hi]: grid scan, then golden section
/// around the best grid point.
template <class F>
std::pair<double, double> maximize_concave_1d(F&& g, double lo, double hi, int grid, int golden_iters = 80) {
    double best_x = lo, best_v = kNegInf;
    const double step = (hi - lo) / (grid - 1);
    int best_i = 0;
    for (int i = 0; i < grid; ++i) {
        const double x = lo + step * i;
        const double v = g(x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
            best_i = i;
        }
    }
    if (best_v == kNegInf) return {best_x, best_v};
    double a = lo + step * std::max(0, best_i - 1);
    double b = lo + step * std::min(grid - 1, best_i + 1);
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < golden_iters && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    const double x = gc >= gd ? c : d;
    const double v = std::max(gc, gd);
    if (v >= best_v) return {x, v};
    return {best_x, best_v};
}

/// Maximizes a concave function of a point over the box [-radius, radius]^dim
/// by nested one-dimensional searches (the partial maximum of a concave
/// function is concave).
template <class F>
std::pair<Point, double> maximize_concave_box(F&& logf, int dim, double radius) {
    Point x = Point::Zero(dim);
    const int grid = dim == 1 ? 401 : dim == 2 ? 121 : 41;
    // best completion of coordinates [axis, dim) given x[0, axis); leaves the maximizer in x[axis]
    auto partial = [&](auto&& self, int axis) -> double {
        auto g = [&](double t) {
            x[axis] = t;
            return axis + 1 == dim ? logf(static_cast<const Point&>(x)) : self(self, axis + 1);
        };
        const auto [arg, val] = maximize_concave_1d(g, -radius, radius, grid, axis + 1 == dim ? 90 : 70);
        x[axis] = arg;
        return val;
    };
    Point best = Point::Zero(dim);
    for (int axis = 0; axis < dim; ++axis) {
        x.head(axis) = best.head(axis);
        (void)partial(partial, axis);
        best[axis] = x[axis];
    }
    return {best, logf(static_cast<const Point&>(best))};
}

inline std::vector<Point> probe_directions(int dim) {
    std::vector<Point> dirs;
    if (dim == 1) {
        dirs.push_back(Point::Constant(1, 1.0));
        dirs.push_back(Point::Constant(1, -1.0));
    } else if (dim == 2) {
        constexpr int count = 1440;
        for (int i = 0; i < count; ++i) {
            const double a = 2.0 * std::numbers::pi * i / count;
            Point u(2);
            u << std::cos(a), std::sin(a);
            dirs.push_back(u);
        }
    } else {
        constexpr int count = 2000;
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double r = std::sqrt(1.0 - z * z);
            Point u(3);
            u << r * std::cos(golden * i), r * std::sin(golden * i), z;
            dirs.push_back(u);
        }
    }
    return dirs;
}

using Moments10 = Eigen::Matrix<double, 10, 1>;

/// Supplies integrate_box_clipped with the support interval of a log-concave
/// function along the last axis. Thin fibres near the edge of a compact
/// support are found from the previous fibre's location or on refined grids.
template <class LogF>
class FiberClip {
public:
    FiberClip(LogF& logf, const Point& lo, const Point& hi) : logf_(logf), lo_(lo), hi_(hi) {}

    std::optional<std::pair<double, double>> operator()(const Point& prefix) {
        Point x = prefix;
        const Eigen::Index last = x.size() - 1;
        auto inside = [&](double t) {
            x[last] = t;
            return logf_(static_cast<const Point&>(x)) > kNegInf;
        };
        const double a = lo_[last], b = hi_[last];
        double t0 = 0.0;
        bool found = has_cache_ && inside(cache_);
        if (found) t0 = cache_;
        for (int per_axis = 129; !found && per_axis <= 2049; per_axis = 4 * per_axis - 3) {
            for (int i = 0; i < per_axis && !found; ++i) {
                t0 = a + (b - a) * i / (per_axis - 1);
                found = inside(t0);
            }
        }
        if (!found) return std::nullopt;
        double ends[2] = {a, b};
        for (double& edge : ends) {
            if (inside(edge)) continue;
            double in = t0, out = edge;
            for (int it = 0; it < 80 && std::abs(out - in) > 1e-15 * (b - a); ++it) {
                const double mid = 0.5 * (in + out);
                (inside(mid) ? in : out) = mid;
            }
            edge = in;
        }
        cache_ = 0.5 * (ends[0] + ends[1]);
        has_cache_ = true;
        return std::pair<double, double>(ends[0], ends[1]);
    }

private:
    LogF& logf_;
    const Point& lo_;
    const Point& hi_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

/// Box quadrature of integrand(x), which must vanish wherever logf(x) = -inf.
template <class LogF, class Integrand>
auto integrate_log_concave(LogF&& logf, const Point& lo, const Point& hi, const QuadratureSpec& spec,
                           Integrand&& integrand) {
    FiberClip<std::remove_reference_t<LogF>> clip(logf, lo, hi);
    return integrate_box_clipped(integrand, lo, hi, spec, clip);
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct DensityMoments {
    double log_mass = kNegInf;  ///< log of the integral of the density
    Point mean;
    Matrix covariance;
};

/// Mass, mean and covariance of a density with dim <= 3.
inline DensityMoments density_moments(const LogConcaveDensity& d, const QuadratureSpec& spec = {}) {
    detail::require_low_dim(d.dim(), "density_moments");
    const int n = d.dim();
    const double radius = detail::integration_radius(d, spec);
    const Point lo = Point::Constant(n, -radius), hi = Point::Constant(n, radius);
    auto logf = [&](const Point& x) { return d.log_density(x); };
    const auto peak = grid_log_max(logf, lo, hi, detail::grid_points_per_axis(n));
    if (peak.value == kNegInf) throw PreconditionError(d.name() + ": density vanishes on the integration box");
    const double shift = peak.value;
    auto integrand = [&](const Point& x) -> detail::Moments10 {
        detail::Moments10 m = detail::Moments10::Zero();
        const double w = std::exp(logf(x) - shift);
        if (w == 0.0) return m;
        m[0] = w;
        int k = 4;
        for (int i = 0; i < n; ++i) {
            m[1 + i] = w * x[i];
            for (int j = i; j < n; ++j) m[k++] = w * x[i] * x[j];
        }
        return m;
    };
    const auto r = detail::integrate_log_concave(logf, lo, hi, spec, integrand);
    const auto& v = r.value;
    if (!(v[0] > 0.0)) throw PreconditionError(d.name() + ": density has zero integral");
    DensityMoments out;
    out.log_mass = std::log(v[0]) + shift;
    out.mean = v.segment(1, n) / v[0];
    out.covariance = Matrix::Zero(n, n);
    int k = 4;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double c = v[k++] / v[0] - out.mean[i] * out.mean[j];
            out.covariance(i, j) = c;
            out.covariance(j, i) = c;
        }
    return out;
}

// ---------------------------------------------------------------------------

/// Density of X + sqrt(v) Z: value at x is the integral of d(y) gamma[v](x - y).
/// Evaluation runs quadrature and requires dim <= 3.
inline LogConcaveDensity convolve_gaussian(const LogConcaveDensity& d, double v, const QuadratureSpec& spec = {}) {
    if (!(v > 0.0)) throw PreconditionError("convolve_gaussian: v must be positive");
    spec.validate();
    const int n = d.dim();
    const double reach = std::sqrt(2.0 * v * (40.0 + n));
    std::optional<DecayHint> hint;
    if (d.decay_hint()) {
        hint = DecayHint{d.decay_hint()->rate, detail::integration_radius(d, spec) + reach, false};
    }
    auto log_g = [d, v, spec, reach, n](const Point& x) -> double {
        detail::require_low_dim(n, "convolve_gaussian");
        const double radius = detail::integration_radius(d, spec);
        auto log_integrand = [&](const Point& y) { return d.log_density(y) - (x - y).squaredNorm() / (2.0 * v); };
        // The integrand is (1/v)-strongly log-concave, so outside the reach of
        // its maximizer it is below e^{-40} of its peak.
        Point lo(n), hi(n);
        auto window = [&](const Point& c) {
            for (int i = 0; i < n; ++i) {
                lo[i] = std::max(-radius, c[i] - reach);
                hi[i] = std::min(radius, c[i] + reach);
            }
            return (hi.array() > lo.array()).all();
        };
        const int per_axis = n == 1 ? 65 : n == 2 ? 33 : 9;
        GridMax peak;
        bool centred = window(x);
        if (centred) {
            peak = grid_log_max(log_integrand, lo, hi, per_axis);
            for (int i = 0; i < n && centred; ++i) {
                const bool low_edge = lo[i] > -radius && peak.argmax[i] <= lo[i];
                const bool high_edge = hi[i] < radius && peak.argmax[i] >= hi[i];
                centred = peak.value > kNegInf && !low_edge && !high_edge;
            }
        }
        if (!centred) {
            const auto top = detail::maximize_concave_box(log_integrand, n, radius);
            if (top.second == kNegInf || !window(top.first)) return kNegInf;
            peak = grid_log_max(log_integrand, lo, hi, per_axis);
            if (top.second > peak.value) peak.value = top.second;
        }
        if (peak.value == kNegInf) return kNegInf;
        QuadratureSpec s = spec;
        s.abs_tol = spec.abs_tol * std::min(1.0, std::pow(std::sqrt(2.0 * std::numbers::pi * v), n));
        const auto r = detail::integrate_log_concave(log_integrand, lo, hi, s, [&](const Point& y) {
            return std::exp(log_integrand(y) - peak.value);
        });
        if (!(r.value > 0.0)) return kNegInf;
        return std::log(r.value) + peak.value - 0.5 * n * std::log(2.0 * std::numbers::pi * v);
    };
    return LogConcaveDensity(n, std::move(log_g), d.normalization(), hint,
                             d.name() + "*gamma[" + std::to_string(v) + "]", false);
}

/// pi_E(d)(x): integral of d over the affine subspace x + E^perp, with x given
/// in the frame coordinates of E.
inline double marginal_quadrature(const LogConcaveDensity& d, const Matrix& frame, const Point& x,
                                  const QuadratureSpec& spec = {}) {
    detail::require_low_dim(d.dim(), "marginal_quadrature");
    const int n = d.dim();
    if (frame.rows() != n || x.size() != frame.cols())
        throw PreconditionError("marginal_quadrature: subspace and point dimensions do not match the density");
    const Point base = frame * x;
    if (frame.cols() == n) return d(base);
    const Matrix comp = Subspace(frame).complement();
    const int m = static_cast<int>(comp.cols());
    const double radius = detail::integration_radius(d, spec);
    const Point lo = Point::Constant(m, -radius), hi = Point::Constant(m, radius);
    auto log_integrand = [&](const Point& s) { return d.log_density(base + comp * s); };
    // thin fibres near the edge of the support can fall between grid points
    GridMax peak;
    for (int per_axis = detail::grid_points_per_axis(m), tries = 0; tries < 3; per_axis = 4 * per_axis - 3, ++tries) {
        peak = grid_log_max(log_integrand, lo, hi, per_axis);
        if (peak.value > kNegInf) break;
    }
    if (peak.value == kNegInf) return 0.0;
    const auto r = detail::integrate_log_concave(
        log_integrand, lo, hi, spec, [&](const Point& s) { return std::exp(log_integrand(s) - peak.value); });
    return r.value * std::exp(peak.value);
}

inline double marginal_quadrature(const LogConcaveDensity& d, const Subspace& e, const Point& x,
                                  const QuadratureSpec& spec = {}) {
    return marginal_quadrature(d, e.frame(), x, spec);
}

// ---------------------------------------------------------------------------

struct DensityLandmarks {
    Point barycenter;
    double sup_value = 0.0;
    double log_sup = kNegInf;
    Point sup_point;
    /// max |x| with f(x) >= e^{-dim} f(0); NaN when f(0) = 0
    double level_set_radius_e_n = 0.0;
    /// mass of {f >= e^{-10 dim} sup f} relative to the total mass
    double level_set_mass_10n = 0.0;
    /// f(barycenter) / sup f
    double barycenter_ratio = 0.0;
};

inline DensityLandmarks density_landmarks(const LogConcaveDensity& d, const QuadratureSpec& spec = {}) {
    detail::require_low_dim(d.dim(), "density_landmarks");
    if (!d.decay_hint()) throw PreconditionError("density_landmarks: decay hint required");
    const int n = d.dim();
    const double radius = detail::integration_radius(d, spec);
    auto logf = [&](const Point& x) { return d.log_density(x); };

    auto [sup_point, log_sup] = detail::maximize_concave_box(logf, n, radius);
    const auto grid = grid_log_max(logf, Point::Constant(n, -radius), Point::Constant(n, radius),
                                   detail::grid_points_per_axis(n));
    if (grid.value > log_sup) {
        log_sup = grid.value;
        sup_point = grid.argmax;
    }
    if (log_sup == kNegInf) throw LandmarkFailure(d.name() + ": density vanishes on the search box");
    // a compact support may attain its sup on the boundary; otherwise a sup on
    // the truncation boundary means the density still increases there
    if (!d.decay_hint()->compact && (sup_point.array().abs() >= radius * (1.0 - 1e-6)).any()) {
        const Point inward = sup_point * (1.0 - 0.01);
        if (log_sup > logf(inward) + 1e-9 * (1.0 + std::abs(log_sup)))
            throw LandmarkFailure(d.name() + ": sup search ran into the truncation boundary (density increasing there)");
    }

    DensityLandmarks out;
    const auto moments = density_moments(d, spec);
    out.barycenter = moments.mean;
    const double log_bary = logf(out.barycenter);
    if (log_bary > log_sup) {
        log_sup = log_bary;
        sup_point = out.barycenter;
    }
    out.log_sup = log_sup;
    out.sup_value = std::exp(log_sup);
    out.sup_point = sup_point;
    out.barycenter_ratio = std::exp(log_bary - log_sup);

    const double threshold = log_sup - 10.0 * n;
    using V2 = Eigen::Vector2d;
    const Point lo = Point::Constant(n, -radius), hi = Point::Constant(n, radius);
    const auto mass = detail::integrate_log_concave(logf, lo, hi, spec, [&](const Point& x) -> V2 {
        const double l = logf(x);
        const double w = std::exp(l - log_sup);
        return V2(l >= threshold ? w : 0.0, w);
    });
    out.level_set_mass_10n = std::clamp(mass.value[0] / mass.value[1], 0.0, 1.0);

    const double log_f0 = logf(Point::Zero(n));
    if (log_f0 == kNegInf) {
        out.level_set_radius_e_n = std::numeric_limits<double>::quiet_NaN();
    } else {
        const double level = log_f0 - n;
        const double r_max = radius * std::sqrt(static_cast<double>(n));
        double worst = 0.0;
        for (const Point& u : detail::probe_directions(n)) {
            if (logf(r_max * u) >= level) {
                worst = std::max(worst, r_max);
                continue;
            }
            double a = 0.0, b = r_max;
            for (int it = 0; it < 100 && b - a > 1e-12 * r_max; ++it) {
                const double m = 0.5 * (a + b);
                (logf(m * u) >= level ? a : b) = m;
            }
            worst = std::max(worst, a);
        }
        out.level_set_radius_e_n = worst;
    }
    return out;
}

// ---------------------------------------------------------------------------

/// log of the integral of exp(<x, y>) d(y) dy.
inline double log_laplace(const LogConcaveDensity& d, const Point& x, const QuadratureSpec& spec = {}) {
    detail::require_low_dim(d.dim(), "log_laplace");
    if (!d.decay_hint()) throw PreconditionError("log_laplace: decay hint required");
    const int n = d.dim();
    if (x.size() != n) throw PreconditionError("log_laplace: point dimension mismatch");
    const auto& hint = *d.decay_hint();
    if (!hint.compact && std::isfinite(hint.rate) && x.norm() >= hint.rate)
        throw DivergenceError("log_laplace: |x| = " + std::to_string(x.norm()) + " reaches the decay rate " +
                              std::to_string(hint.rate) + "; the integral diverges");
    double radius = detail::integration_radius(d, spec);
    if (!hint.compact) {
        // a tilt by x moves Gaussian-type mass outward by about x times the variance scale
        const double scale = radius / std::sqrt(2.0 * (40.0 + n));
        radius += x.norm() * std::max(1.0, scale * scale);
    }
    const Point lo = Point::Constant(n, -radius), hi = Point::Constant(n, radius);
    auto log_integrand = [&](const Point& y) { return x.dot(y) + d.log_density(y); };
    const auto peak = grid_log_max(log_integrand, lo, hi, detail::grid_points_per_axis(n));
    if (peak.value == kNegInf) throw PreconditionError("log_laplace: density vanishes on the integration box");
    const auto r = detail::integrate_log_concave(
        log_integrand, lo, hi, spec, [&](const Point& y) { return std::exp(log_integrand(y) - peak.value); });
    return std::log(r.value) + peak.value;
}

// ---------------------------------------------------------------------------

struct ReweightMoments {
    double lhs;  ///< second moment of t under f g, normalized
    double rhs;  ///< second moment of t under f, normalized
};

/// Second moments of t under f*g and under f, for non-increasing g.
inline ReweightMoments monotone_reweight_check(const RadialProfile& f, const RadialProfile& g,
                                               const QuadratureSpec& spec = {}) {
    const double lo = std::max(f.t_min, g.t_min), hi = std::min(f.t_max, g.t_max);
    if (!(hi > lo)) throw PreconditionError("monotone_reweight_check: empty common support");
    constexpr int probes = 513;
    double prev = g.log(lo), f_peak = kNegInf, g_peak = prev;
    for (int i = 0; i < probes; ++i) {
        const double t = lo + (hi - lo) * i / (probes - 1);
        const double cur = g.log(t);
        if (cur > prev + 1e-12 * (1.0 + std::abs(prev)))
            throw PreconditionError("monotone_reweight_check: g increases between t=" +
                                    std::to_string(lo + (hi - lo) * (i - 1) / (probes - 1)) +
                                    " and t=" + std::to_string(t));
        prev = cur;
        f_peak = std::max(f_peak, f.log(t));
        g_peak = std::max(g_peak, cur);
    }
    if (f_peak == kNegInf) throw PreconditionError("monotone_reweight_check: f vanishes on its support");
    using V4 = Eigen::Vector4d;
    const auto r = integrate(
        [&](double t) -> V4 {
            const double wf = std::exp(f.log(t) - f_peak);
            if (wf == 0.0) return V4::Zero();
            const double wfg = wf * std::exp(g.log(t) - g_peak);
            return V4(t * t * wfg, wfg, t * t * wf, wf);
        },
        lo, hi, spec);
    const V4& v = r.value;
    if (!(v[1] > 0.0) || !(v[3] > 0.0)) throw PreconditionError("monotone_reweight_check: zero mass");
    return {v[0] / v[1], v[2] / v[3]};
}

// ---------------------------------------------------------------------------

struct TiltedMoments {
    double second_moment;  ///< E|X - x|^2
    double mean_shift;     ///< |E X - x|
};

/// Moments of X with density proportional to d(y) exp(-|x - y|^2 / (2v)).
/// d must be isotropic to within isotropy_tol (checked by quadrature).
inline TiltedMoments tilted_moments(const LogConcaveDensity& d, const Point& x, double v,
                                    const QuadratureSpec& spec = {}, double isotropy_tol = 1e-3) {
    detail::require_low_dim(d.dim(), "tilted_moments");
    if (!(v > 0.0)) throw PreconditionError("tilted_moments: v must be positive");
    const int n = d.dim();
    if (x.size() != n) throw PreconditionError("tilted_moments: point dimension mismatch");
    const auto mom = density_moments(d, spec);
    const double mean_err = mom.mean.cwiseAbs().maxCoeff();
    const double cov_err = (mom.covariance - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (mean_err > isotropy_tol || cov_err > isotropy_tol)
        throw PreconditionError("tilted_moments: density is not isotropic (mean error " + std::to_string(mean_err) +
                                ", covariance error " + std::to_string(cov_err) + ")");
    const double radius = detail::integration_radius(d, spec);
    const double reach = std::sqrt(2.0 * v * (40.0 + n));
    Point lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        lo[i] = std::max(-radius, x[i] - reach);
        hi[i] = std::min(radius, x[i] + reach);
        if (!(hi[i] > lo[i])) throw PreconditionError("tilted_moments: tilt centre is outside the support");
    }
    auto log_w = [&](const Point& y) { return d.log_density(y) - (x - y).squaredNorm() / (2.0 * v); };
    const auto peak = grid_log_max(log_w, lo, hi, detail::grid_points_per_axis(n));
    if (peak.value == kNegInf) throw PreconditionError("tilted_moments: tilted density vanishes");
    using V5 = Eigen::Matrix<double, 5, 1>;
    const auto r = detail::integrate_log_concave(log_w, lo, hi, spec, [&](const Point& y) -> V5 {
        V5 out = V5::Zero();
        const double w = std::exp(log_w(y) - peak.value);
        if (w == 0.0) return out;
        out[0] = w;
        for (int i = 0; i < n; ++i) out[1 + i] = w * (y[i] - x[i]);
        out[4] = w * (y - x).squaredNorm();
        return out;
    });
    const V5& s = r.value;
    return {s[4] / s[0], (s.segment(1, n) / s[0]).norm()};
}

/// Central finite-difference gradient of log(d * gamma[v]) at x.
/// step <= 0 selects 1e-3 * sqrt(v) * max(1, |x|).
inline Point grad_log_convolved(const LogConcaveDensity& d, double v, const Point& x, const QuadratureSpec& spec = {},
                                double step = 0.0) {
    detail::require_low_dim(d.dim(), "grad_log_convolved");
    const int n = d.dim();
    if (x.size() != n) throw PreconditionError("grad_log_convolved: point dimension mismatch");
    if (x.norm() > 10.0 * std::sqrt(static_cast<double>(n)) + 1e-12)
        throw PreconditionError("grad_log_convolved: |x| exceeds 10 sqrt(dim)");
    QuadratureSpec fine = spec;
    fine.abs_tol = std::min(spec.abs_tol, 1e-11);
    const double h = step > 0.0 ? step : 1e-3 * std::sqrt(v) * std::max(1.0, x.norm());
    if (h < 1e4 * fine.abs_tol)
        throw StepSizeError("grad_log_convolved: step " + std::to_string(h) +
                            " is too small relative to the quadrature tolerance " + std::to_string(fine.abs_tol));
    const auto g = convolve_gaussian(d, v, fine);
    Point grad(n);
    for (int i = 0; i < n; ++i) {
        Point xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        grad[i] = (g.log_density(xp) - g.log_density(xm)) / (2.0 * h);
    }
    return grad;
}

// ---------------------------------------------------------------------------

namespace detail {

/// (log f)'(t): analytic when provided, else a five-point central stencil
/// with step 1e-3 t (truncation O(h^4), round-off ~1e-13 |log f|).
inline double dlog(const RadialProfile& f, double t) {
    if (f.dlog_profile) return f.dlog_profile(t);
    const double h = 1e-3 * t;
    return (8.0 * (f.log(t + h) - f.log(t - h)) - (f.log(t + 2.0 * h) - f.log(t - 2.0 * h))) / (12.0 * h);
}

}  // namespace detail

/// The unique t with t (log f)'(t) = -(p - 1). For profiles with kinks the
/// condition is read through one-sided slopes: the returned t is where
/// h(t) = t (log f)'(t) + p - 1 changes sign.
inline double t_p(const RadialProfile& f, double p) {
    if (!(p > 1.0)) throw PreconditionError("t_p: p must exceed 1");
    auto h = [&](double t) { return t * detail::dlog(f, t) + (p - 1.0); };
    const double floor_t = std::max(f.t_min, 0.0);
    auto usable = [&](double t) { return t > floor_t && t < f.t_max && f.log(t) > kNegInf; };

    double prev_t = -1.0;
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double scan_lo = kInf, scan_hi = 0.0;
    for (int k = -60; k <= 60; ++k) {
        const double t = std::ldexp(1.0, k);
        if (!usable(t)) continue;
        scan_lo = std::min(scan_lo, t);
        scan_hi = std::max(scan_hi, t);
        const double ht = h(t);
        if (ht <= 0.0) {
            if (prev_t < 0.0) break;
            lo = prev_t;
            hi = t;
            found = true;
            break;
        }
        prev_t = t;
    }
    if (!found) {
        if (!(scan_hi > 0.0)) throw NoRootError("t_p: profile has no usable points", f.t_min, f.t_max);
        throw NoRootError("t_p: t (log f)'(t) + p - 1 has no sign change", scan_lo, scan_hi);
    }
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double m = 0.5 * (lo + hi);
        const double hm = h(m);
        if (hm == 0.0) return m;
        (hm > 0.0 ? lo : hi) = m;
    }
    double t = std::abs(h(lo)) <= std::abs(h(hi)) ? lo : hi;
    if (f.dlog_profile) return t;
    // A kink within the stencil's reach shows up as disagreement with a fine
    // central difference; the root then sits on the kink, located by
    // bisection on narrow-step slopes.
    const double fine = (f.log(t * (1 + 1e-6)) - f.log(t * (1 - 1e-6))) / (2e-6 * t);
    if (std::abs(fine - detail::dlog(f, t)) <= 1e-5 * (1.0 + std::abs(fine))) return t;
    auto narrow = [&](double s) {
        const double d = 1e-10 * s;
        return s * (f.log(s + d) - f.log(s - d)) / (2.0 * d) + (p - 1.0);
    };
    double a = std::max(t * (1.0 - 3e-3), floor_t), b = std::min(t * (1.0 + 3e-3), f.t_max);
    if (!(narrow(a) > 0.0 && narrow(b) <= 0.0)) return t;
    for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * b; ++it) {
        const double m = 0.5 * (a + b);
        (narrow(m) > 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

/// Fraction of the mass of t^{p-1} f(t) lying in [t_p (1 - eps), t_p (1 + eps)].
inline double mass_window(const RadialProfile& f, double p, double eps, const QuadratureSpec& spec = {}) {
    if (eps < 0.0 || eps > 1.0) throw PreconditionError("mass_window: eps must lie in [0, 1]");
    const double tp = t_p(f, p);
    if (eps == 0.0) return 0.0;
    const double peak = (p - 1.0) * std::log(tp) + f.log(tp);
    auto w = [&](double t) {
        if (t <= 0.0) return 0.0;
        const double l = f.log(t);
        return l == kNegInf ? 0.0 : std::exp((p - 1.0) * std::log(t) + l - peak);
    };
    const double lo = std::max(f.t_min, 0.0), hi = f.t_max;
    const double a = std::clamp(tp * (1.0 - eps), lo, hi), b = std::clamp(tp * (1.0 + eps), lo, hi);
    const double below = integrate(w, lo, a, spec).value;
    const double inside = integrate(w, a, tp, spec).value + integrate(w, tp, b, spec).value;
    const double above = integrate(w, b, hi, spec).value;
    return std::clamp(inside / (below + inside + above), 0.0, 1.0);
}

}  // namespace thinshell
