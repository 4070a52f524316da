#pragma once

// Small statistical toolkit: binomial confidence intervals, goodness-of-fit
// tests, rank correlation, batch-means standard errors and least squares.

#include "thinshell/core.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace thinshell {

struct Interval {
    double lo;
    double hi;
};

/// Wilson score interval for a binomial proportion (z = 2.576 is 99%).
inline Interval wilson_interval(double successes, double trials, double z = 2.576) {
    if (!(trials > 0.0)) return {0.0, 1.0};
    const double p = successes / trials, z2 = z * z;
    const double centre = (p + z2 / (2.0 * trials)) / (1.0 + z2 / trials);
    const double half = z * std::sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / (1.0 + z2 / trials);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.3) {
        // small lambda: the alternating series converges slowly; use the theta-function form
        double s = 0.0;
        const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
        for (int k = 1; k < 50; k += 2) s += std::exp(-k * k * c);
        return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

struct TestResult {
    double statistic;
    double p_value;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with
/// Stephens' finite-sample correction of the asymptotic law.
inline TestResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw InsufficientData("ks_test: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

/// Two-sample Kolmogorov-Smirnov test.
inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InsufficientData("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

/// Pearson chi-square goodness of fit; df = bins - 1 - fitted_parameters.
inline TestResult chi_square_test(const std::vector<double>& observed, const std::vector<double>& expected, int fitted_parameters = 0) {
    if (observed.size() != expected.size() || observed.size() < 2) throw PreconditionError("chi_square_test: bad bins");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (!(expected[i] > 0.0)) throw PreconditionError("chi_square_test: non-positive expected count");
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    }
    const double df = static_cast<double>(observed.size()) - 1.0 - fitted_parameters;
    if (df < 1.0) throw PreconditionError("chi_square_test: no degrees of freedom");
    return {stat, boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat))};
}

/// Average ranks (ties share their mean rank), 1-based.
inline std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * (i + j) + 1.0;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("correlation: need two equal-length samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) { return pearson(ranks(x), ranks(y)); }

/// Mean and its standard error from non-overlapping batch means of a
/// correlated series (batches of equal length, remainder dropped).
struct MeanEstimate {
    double mean;
    double standard_error;
};

inline MeanEstimate batch_means(const std::vector<double>& series, std::size_t batches = 50) {
    if (series.size() < 2 * batches) throw InsufficientData("batch_means: series shorter than two points per batch");
    const std::size_t len = series.size() / batches;
    std::vector<double> m(batches);
    for (std::size_t b = 0; b < batches; ++b)
        m[b] = std::accumulate(series.begin() + static_cast<long>(b * len), series.begin() + static_cast<long>((b + 1) * len), 0.0) / len;
    const double mean = std::accumulate(m.begin(), m.end(), 0.0) / batches;
    double var = 0.0;
    for (double v : m) var += (v - mean) * (v - mean);
    var /= (batches - 1);
    return {mean, std::sqrt(var / batches)};
}

/// Mean and standard error of independent observations.
inline MeanEstimate iid_mean(const std::vector<double>& xs) {
    if (xs.size() < 2) throw InsufficientData("iid_mean: need two observations");
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / (n - 1.0) / n)};
}

struct LineFit {
    double intercept;
    double slope;
    double r_squared;
};

/// Ordinary least squares y = intercept + slope x.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("least_squares: need two equal-length samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw PreconditionError("least_squares: x values are all equal");
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (my + slope * (x[i] - mx));
        ss_res += r * r;
    }
    return {my - slope * mx, slope, syy > 0.0 ? 1.0 - ss_res / syy : 1.0};
}

}  // namespace thinshell
