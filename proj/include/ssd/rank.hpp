#pragma once

#include <cstddef>

#include "ssd/tensor.hpp"

namespace ssd {

/// Numerical rank of a rank-2 tensor by Gaussian elimination with complete
/// pivoting. A pivot counts when its magnitude exceeds
/// `rel_tol * |first pivot|`, the first pivot being the largest entry of M.
/// Empty or all-zero matrices have rank 0.
///
/// `abs_floor` raises the threshold to at least that magnitude; submatrix
/// scans use it so that pure roundoff regions are not read as full rank.
std::size_t numerical_rank(const Tensor& m, double rel_tol, double abs_floor = 0.0);

}  // namespace ssd
