#pragma once

// Greedy eps-nets of Euclidean balls by farthest-point insertion over a
// fine grid of candidates.
//
// Candidates lie on a randomly offset cubic grid of spacing h covering the
// ball to within rho = h sqrt(l) / 2 = eps / 4 (points outside the ball are
// projected onto it). Farthest-point insertion stops once every candidate
// is within eps - rho of the net, so every point of the ball is within eps.

#include "thinshell/core.hpp"
#include "thinshell/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace thinshell {

struct BallNet {
    int dim;
    double radius;
    double eps;
    RowMatrix points;
    /// (1 + 2 radius / eps)^l, the volumetric bound for a maximal eps-separated set
    double volumetric_bound;
};

inline constexpr double kNetBudget = 1e7;

/// eps-net of the radius-ball in R^l, l <= 10.
inline BallNet ball_net(int l, double radius, double eps, std::uint64_t seed) {
    if (l < 1 || l > 10) throw PreconditionError("ball_net: dimension must be in [1, 10]");
    if (!(eps > 0.0) || !(radius > 0.0)) throw PreconditionError("ball_net: radius and eps must be positive");
    const double rho = 0.25 * eps, stop = eps - rho;
    const double h = 2.0 * rho / std::sqrt(static_cast<double>(l));
    const double projected = std::pow(1.0 + 2.0 * radius / stop, l);
    if (projected > kNetBudget)
        throw BudgetError("ball_net: projected cardinality " + std::to_string(projected) + " exceeds the budget of 1e7");
    const double per_axis = std::ceil(2.0 * (radius + rho) / h) + 2.0;
    if (std::pow(per_axis, l) > 5.0 * kNetBudget)
        throw BudgetError("ball_net: candidate grid of " + std::to_string(std::pow(per_axis, l)) + " points exceeds the budget");

    CounterRng rng(seed, "ball-net");
    std::vector<double> shift(static_cast<std::size_t>(l));
    for (double& s : shift) s = h * rng.uniform();
    const long m = static_cast<long>(per_axis);
    const long half = m / 2;
    std::size_t slots = 1;
    for (int i = 0; i < l; ++i) slots *= static_cast<std::size_t>(m);

    // slot s holds grid point ((idx - half) h + shift), projected onto the
    // ball; slots beyond radius + rho are not candidates
    std::vector<double> coord(slots * static_cast<std::size_t>(l));
    std::vector<char> valid(slots, 0);
    std::vector<long> idx(static_cast<std::size_t>(l), 0);
    for (std::size_t s = 0; s < slots; ++s) {
        double sq = 0.0;
        double* c = coord.data() + s * static_cast<std::size_t>(l);
        for (int i = 0; i < l; ++i) {
            c[i] = (idx[i] - half) * h + shift[i];
            sq += c[i] * c[i];
        }
        const double r = std::sqrt(sq);
        if (r <= radius + rho) {
            valid[s] = 1;
            if (r > radius)
                for (int i = 0; i < l; ++i) c[i] *= radius / r;
        }
        int k = 0;
        while (k < l && ++idx[k] == m) idx[k++] = 0;
    }
    auto at = [&](std::size_t s) { return coord.data() + s * static_cast<std::size_t>(l); };
    auto dist = [&](const double* a, const double* b) {
        double q = 0.0;
        for (int i = 0; i < l; ++i) q += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(q);
    };

    // farthest-point insertion with exact distances to the net; inserting p
    // only lowers distances of slots within the current maximum of p, which
    // are enumerated through their grid indices (projection moves a slot by
    // at most rho, hence the widened reach)
    std::vector<double> d(slots, std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, std::size_t>;
    auto worse = [](const Entry& a, const Entry& b) { return a.first < b.first || (a.first == b.first && a.second > b.second); };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
    std::vector<std::size_t> net;
    std::vector<long> centre(static_cast<std::size_t>(l)), off(static_cast<std::size_t>(l));
    auto insert = [&](std::size_t s, double reach_dist) {
        net.push_back(s);
        if (static_cast<double>(net.size()) > kNetBudget) throw BudgetError("ball_net: cardinality exceeded the budget");
        const double* p = at(s);
        const long reach = std::isfinite(reach_dist) ? static_cast<long>(std::ceil((reach_dist + rho) / h)) + 1 : m;
        for (int i = 0; i < l; ++i) {
            centre[i] = static_cast<long>(std::floor((p[i] - shift[i]) / h)) + half;
            off[i] = std::max(0L, centre[i] - reach);
        }
        for (;;) {
            std::size_t t = 0;
            for (int i = l - 1; i >= 0; --i) t = t * static_cast<std::size_t>(m) + static_cast<std::size_t>(off[i]);
            if (valid[t]) {
                const double q = dist(p, at(t));
                if (q < d[t]) {
                    d[t] = q;
                    if (q > stop) heap.emplace(q, t);
                }
            }
            int k = 0;
            while (k < l && ++off[k] > std::min(m - 1, centre[k] + reach)) {
                off[k] = std::max(0L, centre[k] - reach);
                ++k;
            }
            if (k == l) break;
        }
    };

    // start from the candidate closest to the centre
    std::size_t first = 0;
    double best_r = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < slots; ++s) {
        if (!valid[s]) continue;
        double q = 0.0;
        for (int i = 0; i < l; ++i) q += at(s)[i] * at(s)[i];
        if (q < best_r) best_r = q, first = s;
    }
    insert(first, std::numeric_limits<double>::infinity());
    while (!heap.empty()) {
        const auto [key, s] = heap.top();
        heap.pop();
        if (key != d[s]) continue;  // stale
        insert(s, key);
    }

    BallNet out{l, radius, eps, RowMatrix(static_cast<Eigen::Index>(net.size()), l), std::pow(1.0 + 2.0 * radius / eps, l)};
    for (std::size_t k = 0; k < net.size(); ++k)
        for (int d = 0; d < l; ++d) out.points(static_cast<Eigen::Index>(k), d) = at(net[k])[d];
    return out;
}

/// Largest distance from `probes` uniform points of the ball to the net.
inline double net_coverage(const BallNet& net, std::size_t probes, std::uint64_t seed) {
    const int l = net.dim;
    double worst = 0.0;
    Point x(l);
    for (std::size_t k = 0; k < probes; ++k) {
        CounterRng rng(seed, "net-probe", k);
        for (int d = 0; d < l; ++d) x[d] = rng.normal();
        x *= net.radius * std::pow(rng.uniform(), 1.0 / l) / x.norm();
        const double best = (net.points.rowwise() - x.transpose()).rowwise().squaredNorm().minCoeff();
        worst = std::max(worst, std::sqrt(best));
    }
    return worst;
}

}  // namespace thinshell
