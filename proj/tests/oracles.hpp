#pragma once

// Reference computations for the test suites. Everything here is
// deliberately independent of the library's own quadrature and estimators:
// integrals go through Boost's Gauss-Kronrod rule, and
// distributions through Boost.Math.

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double gk(const std::function<double(double)>& f, double a, double b, unsigned depth = 25, double tol = 1e-13) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol);
}

/// Integral over [a, b] split at the given interior breakpoints.
inline double gk_split(const std::function<double(double)>& f, double a, double b, std::vector<double> cuts,
                       unsigned depth = 25, double tol = 1e-13) {
    cuts.push_back(a);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i] >= a && cuts[i + 1] <= b && cuts[i + 1] > cuts[i]) total += gk(f, cuts[i], cuts[i + 1], depth, tol);
    return total;
}

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Density of (U_1 + ... + U_n) / sqrt(n) with U_i uniform on [-sqrt3, sqrt3],
/// tabulated by repeated convolution of box densities on a fine grid.
class IsotropicSumDensity {
public:
    IsotropicSumDensity(int n, double h = 2e-4) : n_(n) {
        const double a = std::sqrt(3.0);
        const int half_box = static_cast<int>(std::lround(a / h));
        h_ = a / half_box;
        // unscaled sum lives on [-n a, n a]
        offset_ = n * half_box;
        std::vector<double> pdf(2 * offset_ + 1, 0.0);
        // first factor: box density of width 2a
        for (int k = -half_box; k <= half_box; ++k) pdf[offset_ + k] = 1.0 / (2.0 * a);
        pdf[offset_ - half_box] *= 0.5;
        pdf[offset_ + half_box] *= 0.5;
        std::vector<double> prefix(pdf.size() + 1);
        for (int step = 1; step < n; ++step) {
            prefix[0] = 0.0;
            for (std::size_t i = 0; i < pdf.size(); ++i) prefix[i + 1] = prefix[i] + pdf[i];
            std::vector<double> next(pdf.size(), 0.0);
            for (std::size_t i = 0; i < pdf.size(); ++i) {
                const long lo = static_cast<long>(i) - half_box, hi = static_cast<long>(i) + half_box;
                const long clo = std::max(0L, lo), chi = std::min<long>(static_cast<long>(pdf.size()) - 1, hi);
                if (clo > chi) continue;
                // trapezoid rule over the window [i - half_box, i + half_box]
                double s = prefix[chi + 1] - prefix[clo];
                if (lo >= 0) s -= 0.5 * pdf[lo];
                if (hi < static_cast<long>(pdf.size())) s -= 0.5 * pdf[hi];
                next[i] = s * h_ / (2.0 * a);
            }
            pdf.swap(next);
        }
        pdf_ = std::move(pdf);
        cdf_.assign(pdf_.size(), 0.0);
        for (std::size_t k = 1; k < pdf_.size(); ++k) cdf_[k] = cdf_[k - 1] + 0.5 * (pdf_[k - 1] + pdf_[k]) * h_;
    }

    /// density of the normalized sum at t
    double operator()(double t) const {
        const double s = t * std::sqrt(static_cast<double>(n_));
        const double pos = s / h_ + offset_;
        if (pos <= 0.0 || pos >= static_cast<double>(pdf_.size() - 1)) return 0.0;
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - i;
        return std::sqrt(static_cast<double>(n_)) * ((1.0 - frac) * pdf_[i] + frac * pdf_[i + 1]);
    }

    /// CDF of the normalized sum at t by trapezoid summation of the table.
    double cdf(double t) const {
        const double s = t * std::sqrt(static_cast<double>(n_));
        const double pos = s / h_ + offset_;
        if (pos <= 0.0) return 0.0;
        if (pos >= static_cast<double>(pdf_.size() - 1)) return 1.0;
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - i;
        const double mid = pdf_[i] + frac * (pdf_[i + 1] - pdf_[i]) * 0.5;
        return cdf_[i] + mid * frac * h_;
    }

private:
    int n_;
    double h_;
    int offset_;
    std::vector<double> pdf_;
    std::vector<double> cdf_;
};

/// (d/dx) log of (uniform[-sqrt3, sqrt3] * gamma[v]) in one coordinate.
inline double smoothed_uniform_dlog(double x, double v) {
    const double a = std::sqrt(3.0), s = std::sqrt(v);
    const double num = phi((x + a) / s) - phi((x - a) / s);
    const double den = Phi((x + a) / s) - Phi((x - a) / s);
    return num / (s * den);
}

}  // namespace oracle
