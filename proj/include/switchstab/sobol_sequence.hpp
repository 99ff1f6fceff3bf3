#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace switchstab {

/// Largest dimension with bundled direction numbers.
inline constexpr int kMaxSobolDimension = 16;

/// Base-2 Sobol' points (Joe-Kuo direction numbers, Gray-code order) as a
/// count x dim matrix in [0, 1). The first `skip` points are dropped.
Eigen::MatrixXd sobol_sequence(int dim, std::int64_t count, std::int64_t skip = 0);

}  // namespace switchstab
