#pragma once

// Statistics of projected sample batches: histogram total variation to a
// Gaussian, best-fit variance, pointwise density ratios, thin-shell
// statistics, radial flatness of smoothed marginals, and the M functional.
//
// Every estimator reports a value together with a noise floor; assertions
// compare against tolerance + noise floor.

#include "thinshell/batch.hpp"
#include "thinshell/geometry.hpp"
#include "thinshell/logconcave.hpp"
#include "thinshell/rotation.hpp"
#include "thinshell/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace thinshell {

/// Rows mapped to frame coordinates frame^T x.
inline SampleBatch project(const SampleBatch& batch, const Subspace& e) {
    if (batch.dim() != e.ambient_dim()) throw PreconditionError("project: batch and subspace dimensions differ");
    SampleBatch out;
    out.points = batch.points * e.frame();
    out.provenance = batch.provenance;
    out.provenance.subspaces.push_back(e.id().empty() ? "E" + std::to_string(e.dim()) : e.id());
    return out;
}

// ---------------------------------------------------------------- total variation

enum class TvMode { automatic, direct, radial };

struct TVEstimate {
    /// half the sum over bins of |empirical mass - Gaussian mass|: the
    /// largest discrepancy over unions of bins, in [0, 1]
    double value;
    int bins;
    std::vector<long long> per_bin_counts;
    /// expected value of the estimator when the batch has exactly the
    /// Gaussian law: sum_b sqrt(p_b (1 - p_b) / (2 pi N))
    double noise_floor;
    /// upward bias from sampling: noise_floor + bins / N. Binning itself can
    /// only lower the value, so it contributes no upward term.
    double estimator_bias_bound;
    bool radial;
    std::string label;
};

namespace detail {

inline double normal_mass(double a, double b, double sd) {
    // both tails via erfc to keep precision far from the centre
    const double za = a / (sd * std::numbers::sqrt2), zb = b / (sd * std::numbers::sqrt2);
    if (za >= 0.0) return 0.5 * (std::erfc(za) - std::erfc(zb));
    if (zb <= 0.0) return 0.5 * (std::erfc(-zb) - std::erfc(-za));
    return 1.0 - 0.5 * (std::erfc(-za) + std::erfc(zb));
}

inline double quantile_sorted(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < s.size() ? (1.0 - f) * s[i] + f * s[i + 1] : s[i];
}

/// Freedman-Diaconis bin count over [lo, hi] for a sample with the given IQR.
inline int fd_bins(double iqr, double lo, double hi, double count, double rate_exponent, int min_bins, int max_bins) {
    const double width = 2.0 * iqr * std::pow(count, -rate_exponent);
    const double b = width > 0.0 ? std::ceil((hi - lo) / width) : max_bins;
    return static_cast<int>(std::clamp(b, static_cast<double>(min_bins), static_cast<double>(max_bins)));
}

/// Binned total variation between frequencies and model masses, and its null noise floor.
inline void tv_and_floor(const std::vector<long long>& counts, const std::vector<double>& mass, double n, TVEstimate& t) {
    t.value = 0.0;
    t.noise_floor = 0.0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        t.value += 0.5 * std::abs(static_cast<double>(counts[b]) / n - mass[b]);
        t.noise_floor += std::sqrt(mass[b] * std::max(0.0, 1.0 - mass[b]) / (2.0 * std::numbers::pi * n));
    }
    t.value = std::min(t.value, 1.0);
    t.estimator_bias_bound = t.noise_floor + static_cast<double>(counts.size()) / n;
}

/// Histogram over [lo, hi] with `inner` equal bins plus one bin for each
/// tail; masses from the model CDF.
template <class Cdf>
TVEstimate histogram_tv(const std::vector<double>& xs, double lo, double hi, int inner, Cdf&& cdf, bool radial, std::string label) {
    const double w = (hi - lo) / inner;
    std::vector<long long> counts(static_cast<std::size_t>(inner) + 2, 0);
    for (double x : xs) {
        std::size_t b;
        if (x < lo) b = 0;
        else if (x >= hi) b = static_cast<std::size_t>(inner) + 1;
        else b = 1 + std::min(static_cast<std::size_t>(inner) - 1, static_cast<std::size_t>((x - lo) / w));
        ++counts[b];
    }
    std::vector<double> mass(counts.size());
    double prev = 0.0;
    for (int b = 0; b <= inner; ++b) {
        const double c = cdf(lo + b * w);
        mass[static_cast<std::size_t>(b)] = std::max(0.0, c - prev);
        prev = c;
    }
    mass.back() = std::max(0.0, 1.0 - prev);
    TVEstimate t{0.0, inner + 2, std::move(counts), 0.0, 0.0, radial, std::move(label)};
    tv_and_floor(t.per_bin_counts, mass, static_cast<double>(xs.size()), t);
    return t;
}

}  // namespace detail

/// Histogram estimate of the total variation distance between the batch law and
/// gamma_l[v]. Dimension 1 and 2 use direct histograms (Freedman-Diaconis
/// bins clipped to [16, 1024] in total, plus tail bins); l >= 3, or an
/// explicit radial mode, compares the histogram of |x|^2 / v with the
/// chi-square law with l degrees of freedom (a lower bound for the full TV).
inline TVEstimate tv_to_gaussian(const SampleBatch& batch, double v, TvMode mode = TvMode::automatic) {
    const auto n = batch.count();
    const auto l = batch.dim();
    if (n < 1000) throw InsufficientData("tv_to_gaussian: need at least 1000 samples, got " + std::to_string(n));
    if (!(v > 0.0)) throw PreconditionError("tv_to_gaussian: variance must be positive");
    if (mode == TvMode::direct && l > 2) throw UnsupportedDimension("tv_to_gaussian: direct histograms only for l <= 2");
    const bool radial = mode == TvMode::radial || (mode == TvMode::automatic && l > 2);
    const double sd = std::sqrt(v);
    const double count = static_cast<double>(n);

    if (radial) {
        std::vector<double> s(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = batch.points.row(i).squaredNorm() / v;
        std::vector<double> sorted = s;
        std::sort(sorted.begin(), sorted.end());
        const double iqr = detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25);
        const double lo = sorted.front(), hi = sorted.back();
        const int bins = detail::fd_bins(iqr, lo, hi, count, 1.0 / 3.0, 16, 1024);
        const double half_dof = 0.5 * static_cast<double>(l);
        return detail::histogram_tv(
            s, lo, hi, bins, [&](double x) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(half_dof, 0.5 * x); }, true,
            "radial-TV");
    }

    if (l == 1) {
        std::vector<double> xs(batch.points.data(), batch.points.data() + n);
        std::vector<double> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        const double iqr = detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25);
        const double lo = sorted.front(), hi = sorted.back();
        const int bins = detail::fd_bins(iqr, lo, hi, count, 1.0 / 3.0, 16, 1024);
        return detail::histogram_tv(
            xs, lo, hi, bins, [&](double x) { return detail::normal_mass(-kInf, x, sd); }, false, "TV");
    }

    // l == 2: a k x k grid over the bounding box (k^2 in [16, 1024]) plus one
    // bin for everything outside it
    std::array<double, 2> lo{}, hi{};
    int k = 32;
    for (int a = 0; a < 2; ++a) {
        std::vector<double> c(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = batch.points(i, a);
        std::sort(c.begin(), c.end());
        const double iqr = detail::quantile_sorted(c, 0.75) - detail::quantile_sorted(c, 0.25);
        lo[a] = c.front();
        hi[a] = c.back();
        k = std::min(k, detail::fd_bins(iqr, lo[a], hi[a], count, 0.25, 4, 32));
    }
    std::vector<long long> counts(static_cast<std::size_t>(k * k) + 1, 0);
    const double wx = (hi[0] - lo[0]) / k, wy = (hi[1] - lo[1]) / k;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int bx = std::min(k - 1, static_cast<int>((batch.points(i, 0) - lo[0]) / wx));
        const int by = std::min(k - 1, static_cast<int>((batch.points(i, 1) - lo[1]) / wy));
        ++counts[static_cast<std::size_t>(bx * k + by)];
    }
    std::vector<double> mx(static_cast<std::size_t>(k)), my(static_cast<std::size_t>(k));
    for (int b = 0; b < k; ++b) {
        mx[static_cast<std::size_t>(b)] = detail::normal_mass(lo[0] + b * wx, lo[0] + (b + 1) * wx, sd);
        my[static_cast<std::size_t>(b)] = detail::normal_mass(lo[1] + b * wy, lo[1] + (b + 1) * wy, sd);
    }
    std::vector<double> mass(counts.size());
    double inside = 0.0;
    for (int bx = 0; bx < k; ++bx)
        for (int by = 0; by < k; ++by) inside += mass[static_cast<std::size_t>(bx * k + by)] = mx[static_cast<std::size_t>(bx)] * my[static_cast<std::size_t>(by)];
    mass.back() = std::max(0.0, 1.0 - inside);
    TVEstimate t{0.0, k * k + 1, std::move(counts), 0.0, 0.0, false, "TV"};
    detail::tv_and_floor(t.per_bin_counts, mass, count, t);
    return t;
}

/// r = mean |x|^2 / l, the variance of the best-fitting centred isotropic Gaussian.
inline double best_fit_variance(const SampleBatch& batch) {
    if (batch.count() < 1000) throw InsufficientData("best_fit_variance: need at least 1000 samples");
    const double r = batch.points.rowwise().squaredNorm().mean() / static_cast<double>(batch.dim());
    if (!(r > 0.0)) throw PreconditionError("best_fit_variance: degenerate batch (zero second moment)");
    return r;
}

// ---------------------------------------------------------------- pointwise ratio

struct RatioBin {
    double lo;
    double hi;
    double deviation;  ///< empirical mass / Gaussian mass - 1
    double noise;      ///< binomial standard error of the ratio
};

struct PointwiseRatio {
    double max_deviation;
    double noise_floor;  ///< largest per-bin standard error
    double t_cap;
    std::vector<RatioBin> bins;
    std::string limitation;
};

/// Bin frequencies over [-t_cap, t_cap] against gamma_1 masses. The bin
/// count is odd so that a bin is centred at 0.
inline PointwiseRatio pointwise_ratio(const SampleBatch& batch, double t_cap = 2.5, double width = 0.2) {
    if (batch.dim() != 1) throw PreconditionError("pointwise_ratio: batch must be one-dimensional");
    if (!(t_cap > 0.0)) throw InsufficientData("pointwise_ratio: empty range (t_cap must be positive)");
    if (t_cap > 3.0) throw PreconditionError("pointwise_ratio: t_cap above 3 needs prohibitive sample sizes");
    if (batch.count() < 100000) throw InsufficientData("pointwise_ratio: need at least 1e5 samples");
    int bins = std::max(1, static_cast<int>(std::lround(2.0 * t_cap / width)));
    if (bins % 2 == 0) ++bins;
    const double w = 2.0 * t_cap / bins;
    std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index i = 0; i < batch.count(); ++i) {
        const double x = batch.points(i, 0);
        if (x < -t_cap || x >= t_cap) continue;
        ++counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((x + t_cap) / w)))];
    }
    const double n = static_cast<double>(batch.count());
    PointwiseRatio out{0.0, 0.0, t_cap, {}, "window |t| <= " + format_double(t_cap) + ", far below n^kappa"};
    for (int b = 0; b < bins; ++b) {
        const double lo = -t_cap + b * w, hi = lo + w;
        if (counts[static_cast<std::size_t>(b)] == 0)
            throw InsufficientData("pointwise_ratio: empty bin [" + format_double(lo) + ", " + format_double(hi) + ")");
        const double g = detail::normal_mass(lo, hi, 1.0);
        const double dev = static_cast<double>(counts[static_cast<std::size_t>(b)]) / n / g - 1.0;
        const double noise = std::sqrt(g * (1.0 - g) / n) / g;
        out.bins.push_back({lo, hi, dev, noise});
        out.max_deviation = std::max(out.max_deviation, std::abs(dev));
        out.noise_floor = std::max(out.noise_floor, noise);
    }
    return out;
}

// ---------------------------------------------------------------- thin shell

struct ThinShellStats {
    Eigen::Index n;
    Eigen::Index sample_count;
    double mean_norm_ratio;  ///< mean of |X| / sqrt(n)
    double shell_width;      ///< standard deviation of |X| / sqrt(n)
    double shell_width_se;   ///< delta-method standard error of shell_width
    std::vector<TailRow> tail;  ///< Prob{ | |X|/sqrt(n) - 1 | >= eps } with Wilson 99% intervals
};

inline ThinShellStats thin_shell_stats(const SampleBatch& batch, std::vector<double> eps_grid) {
    if (batch.count() < 1) throw InsufficientData("thin_shell_stats: empty batch");
    const Eigen::Index n = batch.dim();
    const double root = std::sqrt(static_cast<double>(n));
    const Eigen::VectorXd ratio = batch.points.rowwise().norm() / root;
    const double count = static_cast<double>(batch.count());
    const double mean = ratio.mean();
    const Eigen::VectorXd c = ratio.array() - mean;
    const double m2 = c.squaredNorm() / count;
    const double m4 = c.array().pow(4).sum() / count;
    ThinShellStats s{n, batch.count(), mean, 0.0, 0.0, {}};
    if (batch.count() > 1) {
        s.shell_width = std::sqrt(c.squaredNorm() / (count - 1.0));
        if (s.shell_width > 0.0) s.shell_width_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / count) / (2.0 * s.shell_width);
    }
    std::sort(eps_grid.begin(), eps_grid.end());
    for (double eps : eps_grid) {
        const double hits = static_cast<double>(((ratio.array() - 1.0).abs() >= eps).count());
        s.tail.push_back({eps, hits / count, wilson_interval(hits, count)});
    }
    return s;
}

// ---------------------------------------------------------------- radial flatness

struct FlatnessParams {
    int k = 2;
    double alpha = 0.0;        ///< smoothing exponent, reported only
    double radius_cap = 0.0;   ///< zero: 10 sqrt(k)
    std::vector<double> probe_radii;  ///< empty: {0.5, 1, 1.5, 2} sqrt(k)
    int directions_per_radius = 16;
};

struct FlatnessRow {
    double radius;
    double oscillation;  ///< max - min of the log density estimates at this radius
    double noise_floor;  ///< 2 sqrt(2 ln J) max_j 1 / sqrt(count_j)
    long long min_count;
};

struct FlatnessReport {
    double oscillation;
    double noise_floor;  ///< at the radius attaining the oscillation
    double delta;        ///< oscillation / k
    std::vector<FlatnessRow> per_radius;
};

namespace detail {

/// J roughly uniform directions on S^{k-1} (equally spaced angles for k = 2,
/// a Fibonacci lattice for k = 3).
inline std::vector<Point> flatness_directions(int k, int count) {
    std::vector<Point> dirs;
    for (int j = 0; j < count; ++j) {
        Point u(k);
        if (k == 2) {
            const double a = 2.0 * std::numbers::pi * j / count;
            u << std::cos(a), std::sin(a);
        } else {
            const double z = 1.0 - (2.0 * j + 1.0) / count;
            const double r = std::sqrt(1.0 - z * z), a = j * std::numbers::pi * (3.0 - std::sqrt(5.0));
            u << r * std::cos(a), r * std::sin(a), z;
        }
        dirs.push_back(u);
    }
    return dirs;
}

}  // namespace detail

/// Oscillation over same-radius directions of the log density of a smoothed
/// projected batch, estimated by counting points in balls of radius 0.2 r.
inline FlatnessReport radial_flatness(const SampleBatch& batch, FlatnessParams params = {}) {
    const int k = static_cast<int>(batch.dim());
    if (k != 2 && k != 3) throw UnsupportedDimension("radial_flatness: k must be 2 or 3");
    if (params.k != k) params.k = k;
    if (!(batch.provenance.gaussian_v_added > 0.0))
        throw PreconditionError("radial_flatness: batch must be Gaussian-smoothed (gaussian_v_added > 0)");
    const double rk = std::sqrt(static_cast<double>(k));
    if (params.radius_cap <= 0.0) params.radius_cap = 10.0 * rk;
    if (params.probe_radii.empty()) params.probe_radii = {0.5 * rk, rk, 1.5 * rk, 2.0 * rk};
    if (params.directions_per_radius < 2) throw PreconditionError("radial_flatness: need at least two directions");
    const auto dirs = detail::flatness_directions(k, params.directions_per_radius);
    const double n = static_cast<double>(batch.count());
    const double unit_ball = k == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
    const double spread = 2.0 * std::sqrt(2.0 * std::log(static_cast<double>(dirs.size())));

    FlatnessReport rep{0.0, 0.0, 0.0, {}};
    for (double r : params.probe_radii) {
        if (r > params.radius_cap) throw PreconditionError("radial_flatness: probe radius beyond radius_cap");
        const double h = 0.2 * r, h2 = h * h;
        double lo = kInf, hi = -kInf, worst_se = 0.0;
        long long min_count = -1;
        for (std::size_t j = 0; j < dirs.size(); ++j) {
            const Point c = r * dirs[j];
            const long long count = ((batch.points.rowwise() - c.transpose()).rowwise().squaredNorm().array() <= h2).count();
            if (count < 50)
                throw InsufficientData("radial_flatness: probe r=" + format_double(r) + " direction " + std::to_string(j) +
                                       " has " + std::to_string(count) + " < 50 samples");
            const double log_density = std::log(static_cast<double>(count) / (n * unit_ball * std::pow(h, k)));
            lo = std::min(lo, log_density);
            hi = std::max(hi, log_density);
            worst_se = std::max(worst_se, 1.0 / std::sqrt(static_cast<double>(count)));
            min_count = min_count < 0 ? count : std::min(min_count, count);
        }
        FlatnessRow row{r, hi - lo, spread * worst_se, min_count};
        if (row.oscillation > rep.oscillation || rep.per_radius.empty()) {
            rep.oscillation = row.oscillation;
            rep.noise_floor = row.noise_floor;
        }
        rep.per_radius.push_back(row);
    }
    rep.delta = rep.oscillation / k;
    return rep;
}

// ---------------------------------------------------------------- M functional

/// y -> f(U y).
inline LogConcaveDensity rotate_density(const LogConcaveDensity& d, const Rotation& u) {
    if (u.dim() != d.dim()) throw PreconditionError("rotate_density: dimension mismatch");
    const Matrix m = u.matrix();
    return LogConcaveDensity(
        d.dim(), [d, m](const Point& y) { return d.log_density(m * y); }, d.normalization(), d.decay_hint(),
        d.name() + "*U", false);
}

/// M_{f,E,x}(U) = log pi_E(f o U)(x), with x in frame coordinates of E.
inline double m_functional(const LogConcaveDensity& f, const Subspace& e, const Point& x, const Rotation& u,
                           const QuadratureSpec& spec = {}) {
    const double m = marginal_quadrature(rotate_density(f, u), e, x, spec);
    return m > 0.0 ? std::log(m) : kNegInf;
}

}  // namespace thinshell
