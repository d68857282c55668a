#pragma once

#include "pcrm/affine.hpp"
#include "pcrm/errors.hpp"
#include "pcrm/problem_gen.hpp"
#include "pcrm/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace pcrm {

/// Singular values of B_U^T B_V at or above 1 - this are counted as the common subspace.
inline constexpr double intersection_cosine_cutoff = 1e-10;

/// Orthonormal basis (n x (n - rank)) of the null space of U's constraint
/// matrix, i.e. the direction space of U.
inline Matrix direction_basis(const AffineSubspace& U)
{
    const Index n = U.ambient_dim();
    const Index r = U.rank();
    if (r == n)
        return Matrix(n, 0);
    if (r == 0)
        return Matrix::Identity(n, n);
    Eigen::HouseholderQR<Matrix> qr(U.row_basis());
    const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    return q.rightCols(n - r);
}

struct AngleReport {
    double friedrichs_cosine    = 0.0;
    double error_bound_constant = std::sqrt(5.0);
    Index intersection_dim      = 0; ///< dim of the common direction space
    std::vector<double> principal_cosines; ///< descending
};

/// sqrt(1 + 4 / (1 - c^2)), the linear-regularity constant of two subspaces with Friedrichs cosine c.
inline double error_bound_constant_from_cosine(double cosine)
{
    return std::sqrt(1.0 + 4.0 / (1.0 - cosine * cosine));
}

/// Principal-angle analysis of a pair of intersecting affine subspaces.  The
/// Friedrichs cosine is the largest principal cosine once the directions
/// shared by both subspaces (cosine 1) are removed; it is 0 when nothing
/// remains.
inline AngleReport angle_report(const AffineSubspace& U, const AffineSubspace& V)
{
    detail::require_dims(U.ambient_dim() == V.ambient_dim(), "angle_report", "ambient dimensions differ");
    const std::array<AffineSubspace, 2> pair{U, V};
    (void)intersection_subspace(pair); // throws empty_intersection

    AngleReport report;
    const Matrix bu = direction_basis(U);
    const Matrix bv = direction_basis(V);
    if (bu.cols() > 0 && bv.cols() > 0) {
        const Matrix cross = bu.transpose() * bv;
        Eigen::JacobiSVD<Matrix> svd(cross);
        const Vector& sigma = svd.singularValues();
        for (Index k = 0; k < sigma.size(); ++k) {
            const double c = std::clamp(sigma(k), 0.0, 1.0);
            report.principal_cosines.push_back(c);
            if (c >= 1.0 - intersection_cosine_cutoff)
                ++report.intersection_dim;
            else if (report.friedrichs_cosine == 0.0)
                report.friedrichs_cosine = c;
        }
    }
    report.error_bound_constant = error_bound_constant_from_cosine(report.friedrichs_cosine);
    return report;
}

inline double friedrichs_cosine(const AffineSubspace& U, const AffineSubspace& V)
{
    return angle_report(U, V).friedrichs_cosine;
}

inline double error_bound_constant(const AffineSubspace& U, const AffineSubspace& V)
{
    return angle_report(U, V).error_bound_constant;
}

struct BoundCheck {
    int samples    = 0;
    int violations = 0;
    double worst_ratio = 0.0; ///< max dist(x, S) / max_i dist(x, U_i) seen
};

/// Samples x = P_S(0) + z with z standard normal and counts points where
/// dist(x, U ∩ V) > r (U, V) * max(dist(x, U), dist(x, V)) + slack * (1 + dist(x, U ∩ V)).
inline BoundCheck verify_error_bound(const AffineSubspace& U, const AffineSubspace& V, int samples,
                                     std::uint64_t seed, double slack = 1e-9)
{
    const double bound = error_bound_constant(U, V);
    const std::array<AffineSubspace, 2> pair{U, V};
    const AffineSubspace S = intersection_subspace(pair);
    const Vector anchor    = S.project(Vector::Zero(U.ambient_dim()));

    NormalStream stream(seed);
    BoundCheck check;
    for (int s = 0; s < samples; ++s) {
        const Vector x      = anchor + stream.vector(U.ambient_dim());
        const double lhs    = S.distance(x);
        const double worst  = std::max(U.distance(x), V.distance(x));
        ++check.samples;
        if (worst > 0.0)
            check.worst_ratio = std::max(check.worst_ratio, lhs / worst);
        if (lhs > bound * worst + slack * (1.0 + lhs))
            ++check.violations;
    }
    return check;
}

/// Empirical linear-regularity constant: max over sampled x of
/// dist(x, S) / max_i dist(x, U_i), skipping samples that lie in S.  This
/// only bounds the true constant from below.
inline double estimate_regularity(const ProblemInstance& instance, int samples, std::uint64_t seed)
{
    if (samples < 1)
        throw error("estimate_regularity: samples must be at least 1");
    const AffineSubspace S = intersection_subspace(instance.blocks());
    const Vector anchor    = S.project(Vector::Zero(instance.ambient_dim));

    NormalStream stream(seed);
    double best = 0.0;
    bool seen   = false;
    for (int s = 0; s < samples; ++s) {
        const Vector x    = anchor + stream.vector(instance.ambient_dim);
        const double worst = residual(instance.blocks(), x);
        if (worst <= 0.0)
            continue;
        best = std::max(best, S.distance(x) / worst);
        seen = true;
    }
    return seen ? best : 1.0;
}

} // namespace pcrm
