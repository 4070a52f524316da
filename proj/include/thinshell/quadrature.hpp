#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature in 1-D and nested (tensor-product) adaptive
// quadrature over boxes in 2-D and 3-D. Integrands may be scalar or
// fixed-size Eigen vectors, so several moments can share one adaptive pass.

#include "thinshell/core.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace thinshell {

struct QuadratureSpec {
    enum class Scheme { adaptive_1d, tensor_grid };

    Scheme scheme = Scheme::adaptive_1d;
    double abs_tol = 1e-8;
    int max_depth = 50;
    /// Radius of the integration box; 0 means "derive from the density's hints".
    double truncation_radius = 0.0;
    int initial_panels = 16;
    std::size_t max_evaluations = 50'000'000;

    void validate() const {
        if (!(abs_tol > 0.0)) throw PreconditionError("QuadratureSpec: abs_tol must be positive");
        if (truncation_radius < 0.0) throw PreconditionError("QuadratureSpec: truncation_radius must be positive");
        if (max_depth < 1 || initial_panels < 1) throw PreconditionError("QuadratureSpec: depth and panels must be positive");
    }
};

template <class T>
struct QuadResult {
    T value;
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

template <class T>
double magnitude(const T& v) {
    if constexpr (std::is_arithmetic_v<T>)
        return std::abs(v);
    else
        return v.cwiseAbs().maxCoeff();
}

template <class T>
T zero_like(const T& v) {
    if constexpr (std::is_arithmetic_v<T>)
        return T(0);
    else
        return T::Zero(v.rows(), v.cols());
}

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1].
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr double kGaussWeights[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// Interpolatory weights on the eight Kronrod-only nodes (indices 0, 2, 4, 6),
// exact for polynomials of degree 7. Its node set is disjoint from the Gauss
// nodes, so a jump cannot hide from both embedded error estimates at once.
inline const std::array<double, 4>& companion_weights() {
    static const std::array<double, 4> w = [] {
        Eigen::Matrix4d a;
        Eigen::Vector4d moments;
        for (int k = 0; k < 4; ++k) {
            for (int j = 0; j < 4; ++j) a(k, j) = 2.0 * std::pow(kKronrodNodes[2 * j], 2 * k);
            moments[k] = 2.0 / (2 * k + 1);
        }
        const Eigen::Vector4d sol = a.fullPivLu().solve(moments);
        return std::array<double, 4>{sol[0], sol[1], sol[2], sol[3]};
    }();
    return w;
}

template <class T>
struct Panel {
    double a, b;
    T value;
    double error;
    int depth;
    bool operator<(const Panel& o) const { return error < o.error; }
};

/// Extrapolates the three outermost node values (at 1 - x_i, counted from the
/// edge in units of h) to the edge; returns the quadratic residual when it is
/// not clearly smaller than the linear one, else 0.
template <class T>
double edge_jump(const T& edge, const std::array<T, 3>& v) {
    constexpr double d0 = 1.0 - kKronrodNodes[0], d1 = 1.0 - kKronrodNodes[1], d2 = 1.0 - kKronrodNodes[2];
    // Lagrange weights for evaluation at distance 0
    constexpr double l0 = d1 * d2 / ((d0 - d1) * (d0 - d2));
    constexpr double l1 = d0 * d2 / ((d1 - d0) * (d1 - d2));
    constexpr double l2 = d0 * d1 / ((d2 - d0) * (d2 - d1));
    constexpr double m0 = d1 / (d1 - d0), m1 = d0 / (d0 - d1);
    const double r_lin = magnitude(T(edge - (m0 * v[0] + m1 * v[1])));
    const double r_quad = magnitude(T(edge - (l0 * v[0] + l1 * v[1] + l2 * v[2])));
    return r_quad > 0.5 * r_lin ? r_quad : 0.0;
}

template <class T, class F>
Panel<T> kronrod_panel(F& f, double a, double b, int depth, const QuadratureSpec& spec, std::size_t& evals) {
    evals += 17;
    if (evals > spec.max_evaluations) throw QuadratureError("quadrature evaluation budget exhausted", kInfinity);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const auto& cw = companion_weights();
    const T fc = f(c);
    T kronrod = kKronrodWeights[7] * fc;
    T gauss = kGaussWeights[3] * fc;
    T companion = zero_like(fc);
    std::array<T, 3> outer_lo{fc, fc, fc}, outer_hi{fc, fc, fc};
    for (int i = 0; i < 7; ++i) {
        const T fl = f(c - h * kKronrodNodes[i]), fr = f(c + h * kKronrodNodes[i]);
        if (i < 3) {
            outer_lo[i] = fl;
            outer_hi[i] = fr;
        }
        const T s = fl + fr;
        kronrod = kronrod + kKronrodWeights[i] * s;
        if (i % 2 == 1)
            gauss = gauss + kGaussWeights[i / 2] * s;
        else
            companion = companion + cw[i / 2] * s;
    }
    kronrod = h * kronrod;
    double err = std::max(magnitude(T(kronrod - h * gauss)), magnitude(T(kronrod - h * companion)));
    // No node lies between the outermost node and the panel edge. A jump there
    // leaves linear and quadratic extrapolation residuals of the same size,
    // whereas for smooth f the quadratic one is smaller by a factor O(h).
    const double gap = h * (1.0 - kKronrodNodes[0]);
    err += gap * (edge_jump(f(a), outer_lo) + edge_jump(f(b), outer_hi));
    return {a, b, kronrod, err, depth};
}

template <class T, class F>
QuadResult<T> integrate_counted(F&& f, double a, double b, const QuadratureSpec& spec, std::size_t& evals) {
    if (!(b > a)) return {zero_like<T>(f(a)), 0.0, evals};
    std::priority_queue<Panel<T>> active;
    const double h = (b - a) / spec.initial_panels;
    double active_error = 0.0;
    for (int i = 0; i < spec.initial_panels; ++i) {
        const double lo = a + i * h;
        const double hi = (i + 1 == spec.initial_panels) ? b : lo + h;
        auto p = kronrod_panel<T>(f, lo, hi, 0, spec, evals);
        active_error += p.error;
        active.push(std::move(p));
    }
    std::vector<Panel<T>> done;
    double unresolved = 0.0;
    while (!active.empty() && active_error + unresolved > spec.abs_tol) {
        Panel<T> worst = active.top();
        active.pop();
        active_error -= worst.error;
        const double m = 0.5 * (worst.a + worst.b);
        const bool too_deep = worst.depth >= spec.max_depth;
        const bool too_narrow = (worst.b - worst.a) <= 1e-15 * (std::abs(worst.a) + std::abs(worst.b));
        if (too_deep || too_narrow || worst.error <= 1e-15 * magnitude(worst.value)) {
            unresolved += worst.error;
            done.push_back(std::move(worst));
            continue;
        }
        auto left = kronrod_panel<T>(f, worst.a, m, worst.depth + 1, spec, evals);
        auto right = kronrod_panel<T>(f, m, worst.b, worst.depth + 1, spec, evals);
        active_error += left.error + right.error;
        active.push(std::move(left));
        active.push(std::move(right));
    }
    if (unresolved > spec.abs_tol)
        throw QuadratureError("adaptive quadrature did not converge within max_depth=" + std::to_string(spec.max_depth),
                              unresolved);
    T total = zero_like<T>(done.empty() ? active.top().value : done.front().value);
    double error = unresolved;
    for (const auto& p : done) total = total + p.value;
    while (!active.empty()) {
        total = total + active.top().value;
        error += active.top().error;
        active.pop();
    }
    return {total, std::max(error, 0.0), evals};
}

}  // namespace detail

/// Integrates f over [a, b] to spec.abs_tol. Non-convergence within
/// spec.max_depth throws QuadratureError carrying the achieved error.
template <class F>
auto integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
    using T = std::decay_t<decltype(f(a))>;
    std::size_t evals = 0;
    return detail::integrate_counted<T>(f, a, b, spec, evals);
}

/// Nested adaptive quadrature of f(Point) over the box [lo, hi], dim <= 3.
/// clip(x) receives x with all but the last coordinate set and returns the
/// range of the last coordinate to integrate over, or nullopt when f vanishes
/// on that whole line.
template <class F, class Clip>
auto integrate_box_clipped(F&& f, const Point& lo, const Point& hi, const QuadratureSpec& spec, Clip&& clip) {
    using T = std::decay_t<decltype(f(lo))>;
    const auto dim = lo.size();
    if (dim < 1 || dim > 3) throw UnsupportedDimension("integrate_box supports dimensions 1 to 3, got " + std::to_string(dim));
    Point x = lo;
    std::size_t evals = 0;
    const T zero = detail::zero_like<T>(f(lo));

    // Inner levels run at a tighter tolerance so their noise cannot drive
    // refinement of the enclosing level.
    auto level = [&](auto&& self, Eigen::Index axis, double tol) -> QuadResult<T> {
        QuadratureSpec s = spec;
        const double width = hi[axis] - lo[axis];
        s.abs_tol = tol;
        if (axis + 1 == dim) {
            const std::optional<std::pair<double, double>> range = clip(static_cast<const Point&>(x));
            if (!range) return {zero, 0.0, evals};
            // the tolerance budget stays tied to the full width of the box
            s.abs_tol = tol * std::max(range->second - range->first, 0.0) / std::max(width, 1e-300);
            if (!(s.abs_tol > 0.0)) return {zero, 0.0, evals};
            auto g = [&](double t) -> T {
                x[axis] = t;
                return f(static_cast<const Point&>(x));
            };
            return detail::integrate_counted<T>(g, range->first, range->second, s, evals);
        }
        const double inner_tol = tol / (20.0 * std::max(width, 1e-300));
        auto g = [&](double t) -> T {
            x[axis] = t;
            return self(self, axis + 1, inner_tol).value;
        };
        return detail::integrate_counted<T>(g, lo[axis], hi[axis], s, evals);
    };
    auto r = level(level, 0, spec.abs_tol);
    r.evaluations = evals;
    return r;
}

template <class F>
auto integrate_box(F&& f, const Point& lo, const Point& hi, const QuadratureSpec& spec = {}) {
    const Eigen::Index last = lo.size() - 1;
    return integrate_box_clipped(f, lo, hi, spec, [&](const Point&) {
        return std::optional<std::pair<double, double>>(std::in_place, lo[last], hi[last]);
    });
}

}  // namespace thinshell
