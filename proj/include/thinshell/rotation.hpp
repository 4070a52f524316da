#pragma once

// Random rotations and subspaces, Hilbert-Schmidt bounds on the SO(n)
// geodesic distance, random-projection norm ratios, and the empirical
// concentration experiment for Lipschitz functions on SO(n).

#include "thinshell/geometry.hpp"
#include "thinshell/rng.hpp"
#include "thinshell/stats.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace thinshell {

namespace detail {

/// Column-major standard Gaussian matrix from stream (seed, "haar", index, attempt).
inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t index, int attempt) {
    CounterRng rng(stream_key(seed, "haar", index) + static_cast<std::uint64_t>(attempt));
    Matrix g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
    return g;
}

/// Q factor with R_ii > 0; nullopt if R is numerically singular.
inline std::optional<Matrix> positive_q(const Matrix& g) {
    Eigen::HouseholderQR<Matrix> qr(g);
    const Eigen::Index n = g.rows(), k = g.cols();
    Matrix q = qr.householderQ() * Matrix::Identity(n, k);
    const auto& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < k; ++j) {
        const double d = r(j, j);
        if (!(std::abs(d) > 1e-300)) return std::nullopt;
        if (d < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

}  // namespace detail

/// Haar-distributed rotation: Q of a Gaussian matrix with R_ii > 0 (Haar on
/// O(n)), then the last column negated when det = -1, which maps the
/// det = -1 coset onto SO(n) and keeps the law invariant.
inline Rotation haar_rotation(Eigen::Index n, std::uint64_t seed, std::uint64_t index = 0) {
    if (n < 2) throw PreconditionError("haar_rotation: n must be >= 2");
    for (int attempt = 0;; ++attempt) {
        auto q = detail::positive_q(detail::gaussian_matrix(n, n, seed, index, attempt));
        if (!q) continue;
        if (q->determinant() < 0.0) q->col(n - 1) = -q->col(n - 1);
        return Rotation(std::move(*q));
    }
}

/// Uniform random l-subspace: the first l columns of the Haar rotation with
/// the same (seed, index), computed from the first l Gaussian columns only.
inline Subspace random_subspace(Eigen::Index n, Eigen::Index l, std::uint64_t seed, std::uint64_t index = 0) {
    if (l < 1 || l > n) throw PreconditionError("random_subspace: need 1 <= l <= n");
    const std::string id = "haar(" + std::to_string(seed) + "," + std::to_string(index) + ")[" + std::to_string(l) + "]";
    if (l == n) return Subspace(haar_rotation(std::max<Eigen::Index>(n, 2), seed, index).matrix().leftCols(l), id);
    for (int attempt = 0;; ++attempt) {
        auto q = detail::positive_q(detail::gaussian_matrix(n, l, seed, index, attempt));
        if (q) return Subspace(std::move(*q), id);
    }
}

struct DistanceBounds {
    double lower;
    double upper;
};

/// |U1 - U2|_HS <= d(U1, U2) <= (pi / 2) |U1 - U2|_HS.
inline DistanceBounds geodesic_distance_bounds(const Rotation& a, const Rotation& b) {
    if (a.dim() != b.dim()) throw PreconditionError("geodesic_distance_bounds: dimension mismatch");
    const double hs = (a.matrix() - b.matrix()).norm();
    return {hs, 0.5 * std::numbers::pi * hs};
}

/// Rotation by theta in the (i, j) coordinate plane.
inline Rotation plane_rotation(Eigen::Index n, Eigen::Index i, Eigen::Index j, double theta) {
    Matrix m = Matrix::Identity(n, n);
    m(i, i) = m(j, j) = std::cos(theta);
    m(i, j) = -std::sin(theta);
    m(j, i) = std::sin(theta);
    return Rotation(std::move(m));
}

/// CDF of the first coordinate of a uniform point on S^{n-1}: (1 + t) / 2
/// is Beta((n-1)/2, (n-1)/2).
inline double sphere_coordinate_cdf(Eigen::Index n, double t) {
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = 0.5 * static_cast<double>(n - 1);
    return boost::math::ibeta(a, a, 0.5 * (1.0 + t));
}

struct JlSummary {
    Eigen::Index n;
    Eigen::Index l;
    std::size_t trials;
    double target;  ///< sqrt(l / n)
    double mean_ratio;
    MeanEstimate ratio_squared;  ///< mean of (|Proj x| / |x|)^2, expected l / n
    /// (delta, frequency of | ratio - target | >= delta target)
    std::vector<std::pair<double, double>> tails;
};

/// |Proj_E x| / |x| over `trials` independent uniform l-subspaces E.
inline JlSummary jl_norm_ratio(const Point& x, Eigen::Index l, std::size_t trials, std::uint64_t seed,
                               const std::vector<double>& deltas = {0.1, 0.25, 0.5}) {
    const double norm = x.norm();
    if (!(norm > 0.0)) throw PreconditionError("jl_norm_ratio: x must be nonzero");
    if (trials < 2) throw PreconditionError("jl_norm_ratio: need at least two trials");
    const Eigen::Index n = x.size();
    JlSummary s{n, l, trials, std::sqrt(static_cast<double>(l) / n), 0.0, {}, {}};
    std::vector<double> ratio(trials), sq(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto e = random_subspace(n, l, stream_key(seed, "jl"), t);
        ratio[t] = e.coordinates(x).norm() / norm;
        sq[t] = ratio[t] * ratio[t];
    }
    s.mean_ratio = iid_mean(ratio).mean;
    s.ratio_squared = iid_mean(sq);
    for (double d : deltas) {
        const auto hits = std::count_if(ratio.begin(), ratio.end(), [&](double r) { return std::abs(r - s.target) >= d * s.target; });
        s.tails.emplace_back(d, static_cast<double>(hits) / trials);
    }
    return s;
}

struct TailRow {
    double eps;
    double frequency;
    Interval ci;  ///< Wilson 99%
};

struct ConcentrationTable {
    Eigen::Index n;
    double lipschitz;
    std::size_t trials;
    double median;
    double variance;
    std::vector<TailRow> rows;
    /// fit of log frequency = log C - c n eps^2 / L^2 over rows with positive
    /// frequency; NaN when fewer than two such rows
    double c_hat;
    double big_c_hat;
};

/// Prob{ |f(U) - median| >= eps } under Haar measure, estimated from
/// `trials` rotations, with a fit of the shape C exp(-c n eps^2 / L^2).
inline ConcentrationTable so_concentration_tail(Eigen::Index n, const std::function<double(const Rotation&)>& statistic,
                                                double lipschitz, std::size_t trials, std::vector<double> eps_grid,
                                                std::uint64_t seed) {
    if (!(lipschitz > 0.0)) throw PreconditionError("so_concentration_tail: L must be positive");
    if (trials < 2) throw PreconditionError("so_concentration_tail: need at least two trials");
    std::vector<double> v(trials);
    for (std::size_t t = 0; t < trials; ++t) v[t] = statistic(haar_rotation(n, stream_key(seed, "so-tail"), t));
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double median = trials % 2 ? sorted[trials / 2] : 0.5 * (sorted[trials / 2 - 1] + sorted[trials / 2]);
    const double mean = iid_mean(v).mean;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(trials - 1);
    std::sort(eps_grid.begin(), eps_grid.end());
    ConcentrationTable table{n, lipschitz, trials, median, var, {}, std::nan(""), std::nan("")};
    std::vector<double> xs, ys;
    for (double eps : eps_grid) {
        const auto hits = std::count_if(v.begin(), v.end(), [&](double x) { return std::abs(x - median) >= eps; });
        const double f = static_cast<double>(hits) / trials;
        table.rows.push_back({eps, f, wilson_interval(static_cast<double>(hits), static_cast<double>(trials))});
        if (hits > 0) {
            xs.push_back(n * eps * eps / (lipschitz * lipschitz));
            ys.push_back(std::log(f));
        }
    }
    if (xs.size() >= 2 && xs.front() != xs.back()) {
        const auto fit = least_squares(xs, ys);
        table.c_hat = -fit.slope;
        table.big_c_hat = std::exp(fit.intercept);
    }
    return table;
}

}  // namespace thinshell
