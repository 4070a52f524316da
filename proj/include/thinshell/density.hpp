#pragma once

// Log-concave densities on R^d and 1-D radial profiles.

#include "thinshell/core.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

namespace thinshell {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Normalization { normalized, unnormalized };

/// Tail information used to truncate integration domains.
struct DecayHint {
    /// f(x) <= C exp(-rate |x|). Infinity for Gaussian tails or compact support.
    double rate = kInf;
    /// Outside the origin-centred ball of this radius, f <= 1e-16 * sup f.
    double tail_radius = 0.0;
    /// f vanishes outside the tail_radius ball.
    bool compact = false;
};

struct GridMax {
    double value = -std::numeric_limits<double>::infinity();
    Point argmax;
};

/// Maximum of fn over a regular grid of per_axis^d points in the box [lo, hi].
template <class F>
GridMax grid_log_max(F&& fn, const Point& lo, const Point& hi, int per_axis) {
    const auto dim = lo.size();
    GridMax best;
    best.argmax = 0.5 * (lo + hi);
    Point x(dim);
    Eigen::VectorXi idx = Eigen::VectorXi::Zero(dim);
    while (true) {
        for (Eigen::Index i = 0; i < dim; ++i)
            x[i] = lo[i] + (hi[i] - lo[i]) * (per_axis == 1 ? 0.5 : static_cast<double>(idx[i]) / (per_axis - 1));
        const double v = fn(static_cast<const Point&>(x));
        if (v > best.value) {
            best.value = v;
            best.argmax = x;
        }
        Eigen::Index k = 0;
        while (k < dim && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == dim) break;
    }
    return best;
}

class LogConcaveDensity {
public:
    using LogFn = std::function<double(const Point&)>;

    LogConcaveDensity(int dim, LogFn log_density, Normalization normalization = Normalization::unnormalized,
                      std::optional<DecayHint> decay_hint = std::nullopt, std::string name = "density",
                      bool probe_support = true)
        : dim_(dim), log_density_(std::move(log_density)), normalization_(normalization),
          decay_hint_(decay_hint), name_(std::move(name)) {
        if (dim_ < 1) throw PreconditionError("LogConcaveDensity: dim must be positive");
        if (!log_density_) throw PreconditionError("LogConcaveDensity: log_density is empty");
        if (decay_hint_ && !(decay_hint_->tail_radius > 0.0))
            throw PreconditionError("LogConcaveDensity: decay hint needs a positive tail radius");
        if (probe_support && decay_hint_ && dim_ <= 3) reject_null_mass();
    }

    int dim() const noexcept { return dim_; }
    Normalization normalization() const noexcept { return normalization_; }
    const std::optional<DecayHint>& decay_hint() const noexcept { return decay_hint_; }
    const std::string& name() const noexcept { return name_; }

    double log_density(const Point& x) const {
        if (x.size() != dim_) throw PreconditionError(name_ + ": point dimension mismatch");
        const double v = log_density_(x);
        if (std::isnan(v) || v == kInf) throw PreconditionError(name_ + ": log density returned NaN or +inf");
        return v;
    }

    double operator()(const Point& x) const { return std::exp(log_density(x)); }

    double tail_radius() const {
        if (!decay_hint_) throw PreconditionError(name_ + ": no decay hint; cannot truncate quadrature");
        return decay_hint_->tail_radius;
    }

private:
    void reject_null_mass() const {
        const double r = decay_hint_->tail_radius;
        const auto probe = grid_log_max(
            [this](const Point& x) {
                const double v = log_density_(x);
                if (std::isnan(v) || v == kInf) throw PreconditionError(name_ + ": log density returned NaN or +inf");
                return v;
            },
            Point::Constant(dim_, -r), Point::Constant(dim_, r), dim_ == 3 ? 25 : 81);
        if (probe.value == kNegInf)
            throw PreconditionError(name_ + ": density vanishes on every probe (zero integral or null support)");
    }

    int dim_;
    LogFn log_density_;
    Normalization normalization_;
    std::optional<DecayHint> decay_hint_;
    std::string name_;
};

/// Log-profile of a function on [0, inf), optionally with its derivative.
struct RadialProfile {
    std::function<double(double)> log_profile;
    /// Analytic (log f)'. When empty, central differences are used.
    std::function<double(double)> dlog_profile;
    double t_min = 0.0;
    double t_max = 50.0;

    double log(double t) const {
        const double v = log_profile(t);
        if (std::isnan(v) || v == kInf) throw PreconditionError("RadialProfile: log profile returned NaN or +inf");
        return v;
    }
    double operator()(double t) const { return std::exp(log(t)); }
};

// ---------------------------------------------------------------------------
// Closed-form families

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// gamma_d[v]: centred Gaussian with covariance v * Id.
inline LogConcaveDensity gaussian_density(int dim, double v = 1.0) {
    if (!(v > 0.0)) throw PreconditionError("gaussian_density: variance must be positive");
    const double log_norm = -0.5 * dim * std::log(2.0 * std::numbers::pi * v);
    return LogConcaveDensity(
        dim, [v, log_norm](const Point& x) { return log_norm - x.squaredNorm() / (2.0 * v); },
        Normalization::normalized, DecayHint{kInf, std::sqrt(2.0 * v * (40.0 + dim)), false},
        "gaussian[" + std::to_string(v) + "]");
}

/// Uniform density on the box prod [-a_i, a_i].
inline LogConcaveDensity uniform_box_density(const Point& half_widths) {
    const int dim = static_cast<int>(half_widths.size());
    const double log_norm = -(2.0 * half_widths.array()).log().sum();
    return LogConcaveDensity(
        dim,
        [half_widths, log_norm](const Point& x) {
            return (x.array().abs() <= half_widths.array()).all() ? log_norm : kNegInf;
        },
        Normalization::normalized, DecayHint{kInf, half_widths.norm() * (1.0 + 1e-12), true}, "uniform_box");
}

/// Uniform density on [-sqrt3, sqrt3]^dim (zero mean, identity covariance).
inline LogConcaveDensity isotropic_cube_density(int dim) {
    return uniform_box_density(Point::Constant(dim, std::sqrt(3.0)));
}

/// The isotropic cube density convolved with gamma_d[v], in closed form.
inline LogConcaveDensity smoothed_cube_density(int dim, double v) {
    if (!(v > 0.0)) throw PreconditionError("smoothed_cube_density: variance must be positive");
    const double a = std::sqrt(3.0), s = std::sqrt(v);
    auto log_factor = [a, s](double x) {
        // P(x - a <= sqrt(v) Z <= x + a), evaluated on the side without cancellation
        const double u = std::abs(x);
        const double hi = (u + a) / s, lo = (u - a) / s;
        const double p = 0.5 * (std::erfc(lo / std::numbers::sqrt2) - std::erfc(hi / std::numbers::sqrt2));
        return std::log(p) - std::log(2.0 * a);
    };
    return LogConcaveDensity(
        dim,
        [log_factor](const Point& x) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) acc += log_factor(x[i]);
            return acc;
        },
        Normalization::normalized, DecayHint{kInf, std::sqrt(3.0 * dim) + s * std::sqrt(2.0 * (40.0 + dim)), false},
        "smoothed_cube[" + std::to_string(v) + "]");
}

/// e^{-rate t} on [0, inf) in one dimension.
inline LogConcaveDensity exponential_density(double rate = 1.0) {
    return LogConcaveDensity(
        1, [rate](const Point& x) { return x[0] >= 0.0 ? std::log(rate) - rate * x[0] : kNegInf; },
        Normalization::normalized, DecayHint{rate, 40.0 / rate, false}, "exponential");
}

inline RadialProfile gaussian_profile(double t_max = 60.0) {
    return {[](double t) { return -0.5 * t * t; }, [](double t) { return -t; }, 0.0, t_max};
}

inline RadialProfile exponential_profile(double rate = 1.0, double t_max = 400.0) {
    return {[rate](double t) { return -rate * t; }, [rate](double) { return -rate; }, 0.0, t_max};
}

}  // namespace thinshell
