#pragma once

#include "pcrm/errors.hpp"
#include "pcrm/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace pcrm {

/// Gram system of a point set x_0, ..., x_m:
///
///     sum_j alpha_j <x_j - x_0, x_i - x_0> = 1/2 ||x_i - x_0||^2,   i = 1..m
///
/// Its solutions give the circumcenter x_0 + sum_j alpha_j (x_j - x_0).
struct CircumcenterSystem {
    Matrix gram;        ///< m x m, symmetric positive semidefinite
    Vector rhs;         ///< m
    Vector base_point;  ///< x_0
    Matrix differences; ///< n x m, column j-1 holds x_j - x_0
};

/// Relative residual above which a Gram system is reported as inconsistent.
inline constexpr double circumcenter_consistency_tolerance = 1e-6;

inline CircumcenterSystem gram_system(std::span<const Vector> points)
{
    if (points.empty())
        throw dimension_mismatch("gram_system: at least one point required");
    const Index n = points.front().size();
    const Index m = static_cast<Index>(points.size()) - 1;
    for (const auto& p : points)
        detail::require_dims(p.size() == n, "gram_system", "points have different dimensions");

    CircumcenterSystem sys;
    sys.base_point = points.front();
    sys.differences.resize(n, m);
    for (Index j = 0; j < m; ++j)
        sys.differences.col(j) = points[static_cast<std::size_t>(j + 1)] - sys.base_point;

    sys.gram = sys.differences.transpose() * sys.differences;
    // Symmetrize explicitly; the product is symmetric up to rounding only.
    sys.gram = (0.5 * (sys.gram + sys.gram.transpose())).eval();
    sys.rhs  = 0.5 * sys.gram.diagonal();
    return sys;
}

/// Minimum-norm least-squares coefficients of a Gram system, with singular
/// values below sigma_max * m * eps treated as zero.
inline Vector solve_gram_min_norm(const CircumcenterSystem& sys)
{
    const Index m = sys.gram.rows();
    if (m == 0)
        return Vector(0);

    Eigen::BDCSVD<Matrix> svd(sys.gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    const double cutoff = sigma.size() > 0 ? sigma(0) * static_cast<double>(m) * machine_epsilon : 0.0;

    Vector utb = svd.matrixU().transpose() * sys.rhs;
    for (Index k = 0; k < sigma.size(); ++k)
        utb(k) = (sigma(k) > cutoff && sigma(k) > 0.0) ? utb(k) / sigma(k) : 0.0;
    Vector alpha = svd.matrixV() * utb;

    const double res   = (sys.gram * alpha - sys.rhs).norm();
    const double scale = sys.gram.norm() * alpha.norm() + sys.rhs.norm();
    if (!(res <= circumcenter_consistency_tolerance * scale) && scale > 0.0)
        throw degenerate_system("circumcenter: Gram system inconsistent (residual " + std::to_string(res) +
                                ", scale " + std::to_string(scale) + ")");
    return alpha;
}

/// Point of the affine hull of `points` equidistant to all of them.  The first
/// point is the base; affinely dependent inputs are handled through the
/// minimum-norm solve.
///
/// Solves D^T v = 1/2 diag(D^T D) for the minimum-norm v directly rather than
/// through the Gram matrix, which would square the conditioning.
inline Vector circumcenter(std::span<const Vector> points)
{
    const CircumcenterSystem sys = gram_system(points);
    const Index m                = sys.gram.rows();
    if (m == 0)
        return sys.base_point;

    const Matrix Dt = sys.differences.transpose();
    // Reflection rounding is absolute, so near convergence it is large relative
    // to D.  sqrt(m eps) matches the cutoff the Gram route applies implicitly.
    // The threshold must be set before compute(); the decomposition is built there.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Dt.rows(), Dt.cols());
    cod.setThreshold(std::sqrt(static_cast<double>(m) * machine_epsilon));
    cod.compute(Dt);
    const Vector v = cod.solve(sys.rhs);

    const double res   = (Dt * v - sys.rhs).norm();
    const double scale = Dt.norm() * v.norm() + sys.rhs.norm();
    if (!(res <= circumcenter_consistency_tolerance * scale) && scale > 0.0)
        throw degenerate_system("circumcenter: equidistance system inconsistent (residual " + std::to_string(res) +
                                ", scale " + std::to_string(scale) + ")");
    return sys.base_point + v;
}

} // namespace pcrm
