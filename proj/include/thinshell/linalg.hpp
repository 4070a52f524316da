#pragma once

#include "thinshell/core.hpp"

#include <algorithm>

namespace thinshell {

struct SymmetricRoots {
    Matrix sqrt;
    Matrix inverse_sqrt;
    double min_eigenvalue;
    double max_eigenvalue;
};

/// Square root and inverse square root of a symmetric positive definite
/// matrix via eigendecomposition. Eigenvalues below floor * max(1, largest)
/// mean the matrix is treated as rank deficient.
inline SymmetricRoots symmetric_roots(const Matrix& cov, double floor = 1e-10) {
    if (cov.rows() != cov.cols()) throw PreconditionError("symmetric_roots: matrix must be square");
    const Matrix sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) throw RankDeficiencyError("symmetric_roots: eigendecomposition failed");
    const Point& lambda = eig.eigenvalues();
    const double hi = lambda.maxCoeff(), lo = lambda.minCoeff();
    if (!(lo > floor * std::max(1.0, hi)))
        throw RankDeficiencyError("covariance estimate is not positive definite (min eigenvalue " + std::to_string(lo) +
                                  ")");
    const Matrix& v = eig.eigenvectors();
    SymmetricRoots r;
    r.sqrt = v * lambda.cwiseSqrt().asDiagonal() * v.transpose();
    r.inverse_sqrt = v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
    r.min_eigenvalue = lo;
    r.max_eigenvalue = hi;
    return r;
}

}  // namespace thinshell
