#pragma once

#include <Eigen/Dense>

#include <limits>

namespace pcrm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index  = Eigen::Index;

inline constexpr double machine_epsilon = std::numeric_limits<double>::epsilon();

/// Relative tolerance for deciding whether b lies in range(A): ||A x_ls - b|| <= tol * (1 + ||b||).
inline constexpr double consistency_tolerance = 1e-8;

inline bool all_finite(const Vector& v) { return v.allFinite(); }

} // namespace pcrm
