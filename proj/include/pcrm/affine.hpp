#pragma once

#include "pcrm/errors.hpp"
#include "pcrm/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pcrm {

/// One affine block U = {x : A x = b}.
///
/// The constructor factors A^T once with a column-pivoted Householder QR and
/// keeps an orthonormal basis Q of the row space together with the minimum
/// norm point x_p of U.  Projection is then
///
///     P_U(x) = x - Q Q^T (x - x_p),
///
/// which costs O(rank * n) per call.  Objects are immutable after
/// construction and may be shared between threads.
class AffineSubspace {
public:
    /// Factor and validate a block.  Throws dimension_mismatch on shape
    /// errors and inconsistent_system when b is not in range(A).
    static AffineSubspace build(Matrix A, Vector b, int label = 0)
    {
        return AffineSubspace(std::move(A), std::move(b), label);
    }

    Index ambient_dim() const { return A_.cols(); }
    Index rows() const { return A_.rows(); }
    Index rank() const { return row_basis_.cols(); }
    int label() const { return label_; }

    const Matrix& constraint_matrix() const { return A_; }
    const Vector& rhs() const { return b_; }

    /// Orthonormal basis of range(A^T), n x rank.
    const Matrix& row_basis() const { return row_basis_; }

    /// Minimum-norm point of U.
    const Vector& particular_point() const { return particular_; }

    /// ||A x_p - b|| measured when the block was built.
    double consistency_residual() const { return consistency_residual_; }

    Vector project(const Vector& x) const
    {
        check_point(x, "project");
        if (rank() == 0)
            return x;
        const Vector shifted = x - particular_;
        const Vector coeff   = row_basis_.transpose() * shifted;
        return x - row_basis_ * coeff;
    }

    Vector reflect(const Vector& x) const
    {
        check_point(x, "reflect");
        return 2.0 * project(x) - x;
    }

    double distance(const Vector& x) const
    {
        check_point(x, "distance");
        if (rank() == 0)
            return 0.0;
        // ||x - P(x)|| = ||Q^T (x - x_p)|| since Q has orthonormal columns.
        return (row_basis_.transpose() * (x - particular_)).norm();
    }

    /// ||A x - b||, the raw constraint violation.
    double constraint_residual(const Vector& x) const
    {
        check_point(x, "constraint_residual");
        return (A_ * x - b_).norm();
    }

private:
    AffineSubspace(Matrix A, Vector b, int label) : A_(std::move(A)), b_(std::move(b)), label_(label)
    {
        detail::require_dims(A_.rows() >= 1 && A_.cols() >= 1, "build_subspace",
                             "constraint matrix must have at least one row and one column");
        detail::require_dims(b_.size() == A_.rows(), "build_subspace",
                             "rhs length " + std::to_string(b_.size()) + " != row count " +
                                 std::to_string(A_.rows()));
        if (!A_.allFinite() || !b_.allFinite())
            throw error("build_subspace: non-finite entries");
        factor();
    }

    void factor()
    {
        const Index n = A_.cols();
        const Index m = A_.rows();

        Eigen::ColPivHouseholderQR<Matrix> qr;
        qr.setThreshold(static_cast<double>(std::max(m, n)) * machine_epsilon);
        qr.compute(A_.transpose());

        const Index r = qr.rank();
        if (r == 0) {
            row_basis_.resize(n, 0);
            particular_ = Vector::Zero(n);
        } else {
            row_basis_ = qr.householderQ() * Matrix::Identity(n, r);

            // A^T P = Q R  =>  R^T Q^T x = P^T b; with x = Q y solve the leading r x r block.
            const Vector permuted_rhs = qr.colsPermutation().transpose() * b_;
            const Matrix r11          = qr.matrixR().topLeftCorner(r, r);
            const Vector y = r11.triangularView<Eigen::Upper>().transpose().solve(permuted_rhs.head(r));
            particular_    = row_basis_ * y;
        }

        consistency_residual_ = (A_ * particular_ - b_).norm();
        if (!(consistency_residual_ <= consistency_tolerance * (1.0 + b_.norm())))
            throw inconsistent_system("build_subspace: rhs not in range of constraint matrix (residual " +
                                      std::to_string(consistency_residual_) + ")");
    }

    void check_point(const Vector& x, const char* where) const
    {
        detail::require_dims(x.size() == A_.cols(), where,
                             "point dimension " + std::to_string(x.size()) + " != ambient dimension " +
                                 std::to_string(A_.cols()));
    }

    Matrix A_;
    Vector b_;
    int label_ = 0;
    Matrix row_basis_;
    Vector particular_;
    double consistency_residual_ = 0.0;
};

using SubspaceList = std::span<const AffineSubspace>;

inline AffineSubspace build_subspace(Matrix A, Vector b, int label = 0)
{
    return AffineSubspace::build(std::move(A), std::move(b), label);
}

inline Vector project(const AffineSubspace& U, const Vector& x) { return U.project(x); }
inline Vector reflect(const AffineSubspace& U, const Vector& x) { return U.reflect(x); }
inline double distance(const AffineSubspace& U, const Vector& x) { return U.distance(x); }

/// Concatenate all blocks into one system [A_1; ...; A_m] x = [b_1; ...; b_m].
inline std::pair<Matrix, Vector> stack_blocks(SubspaceList subspaces)
{
    if (subspaces.empty())
        throw dimension_mismatch("stack_blocks: no subspaces");
    const Index n = subspaces.front().ambient_dim();
    Index total   = 0;
    for (const auto& U : subspaces) {
        detail::require_dims(U.ambient_dim() == n, "stack_blocks", "blocks disagree on ambient dimension");
        total += U.rows();
    }
    Matrix A(total, n);
    Vector b(total);
    Index offset = 0;
    for (const auto& U : subspaces) {
        A.middleRows(offset, U.rows()) = U.constraint_matrix();
        b.segment(offset, U.rows())    = U.rhs();
        offset += U.rows();
    }
    return {std::move(A), std::move(b)};
}

/// The intersection S of all blocks as one factored subspace.
/// Throws empty_intersection when the stacked system is inconsistent.
inline AffineSubspace intersection_subspace(SubspaceList subspaces)
{
    auto [A, b] = stack_blocks(subspaces);
    try {
        return AffineSubspace::build(std::move(A), std::move(b), -1);
    } catch (const inconsistent_system& e) {
        throw empty_intersection(std::string("intersection is empty: ") + e.what());
    }
}

/// Exact projection onto S = U_1 ∩ ... ∩ U_m by a single factorization of
/// the stacked system.  Reference answer for every iterative solver.
inline Vector project_intersection(SubspaceList subspaces, const Vector& x)
{
    return intersection_subspace(subspaces).project(x);
}

/// max_i dist(x, U_i)
inline double residual(SubspaceList subspaces, const Vector& x)
{
    double worst = 0.0;
    for (const auto& U : subspaces)
        worst = std::max(worst, U.distance(x));
    return worst;
}

} // namespace pcrm
