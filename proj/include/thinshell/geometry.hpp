#pragma once

// Orthogonal frames: rotations in SO(n) and points of the Grassmannian.

#include "thinshell/core.hpp"

#include <cmath>
#include <string>

namespace thinshell {

inline double orthonormality_residual(const Matrix& frame) {
    const Matrix gram = frame.transpose() * frame;
    return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

/// An n x n orthogonal matrix with determinant +1.
class Rotation {
public:
    explicit Rotation(Matrix m) : matrix_(std::move(m)) {
        if (matrix_.rows() != matrix_.cols()) throw PreconditionError("Rotation: matrix must be square");
    }
    static Rotation identity(Eigen::Index n) { return Rotation(Matrix::Identity(n, n)); }

    const Matrix& matrix() const noexcept { return matrix_; }
    Eigen::Index dim() const noexcept { return matrix_.rows(); }

    double orthogonality_residual() const { return orthonormality_residual(matrix_); }
    double determinant() const { return matrix_.determinant(); }

    Point apply(const Point& x) const { return matrix_ * x; }

    friend Rotation operator*(const Rotation& a, const Rotation& b) { return Rotation(a.matrix_ * b.matrix_); }

private:
    Matrix matrix_;
};

/// An l-dimensional subspace of R^n given by an n x l orthonormal frame.
/// Points of the subspace are expressed in frame coordinates.
class Subspace {
public:
    explicit Subspace(Matrix frame, std::string id = {}) : frame_(std::move(frame)), id_(std::move(id)) {
        if (frame_.cols() > frame_.rows() || frame_.cols() < 1)
            throw PreconditionError("Subspace: frame must be n x l with 1 <= l <= n");
    }

    /// span of the first l coordinate vectors
    static Subspace coordinate(Eigen::Index n, Eigen::Index l) {
        return Subspace(Matrix::Identity(n, l), "coord" + std::to_string(l));
    }

    const Matrix& frame() const noexcept { return frame_; }
    Eigen::Index ambient_dim() const noexcept { return frame_.rows(); }
    Eigen::Index dim() const noexcept { return frame_.cols(); }
    const std::string& id() const noexcept { return id_; }

    double orthonormality_residual() const { return thinshell::orthonormality_residual(frame_); }

    /// Coordinates of Proj_E(x) in the frame.
    Point coordinates(const Point& x) const { return frame_.transpose() * x; }
    /// Embeds frame coordinates back into R^n.
    Point embed(const Point& coords) const { return frame_ * coords; }

    /// U(E), the image of the subspace under a rotation.
    Subspace rotated(const Rotation& u) const { return Subspace(u.matrix() * frame_, id_ + "*U"); }

    /// Orthonormal basis of the orthogonal complement (n x (n - l)).
    Matrix complement() const {
        const Eigen::Index n = frame_.rows(), l = frame_.cols();
        Eigen::HouseholderQR<Matrix> qr(frame_);
        const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
        return q.rightCols(n - l);
    }

private:
    Matrix frame_;
    std::string id_;
};

}  // namespace thinshell
