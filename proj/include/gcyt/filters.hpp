#pragma once

#include <vector>

#include "gcyt/grid.hpp"

namespace gcyt {

/// Sampled Gaussian truncated at +-ceil(3 sigma), normalised to unit sum.
std::vector<double> gaussian_kernel(double sigma_px);

/// Index into [0, n) with mirror reflection about the edge pixels
/// (d c b | a b c d | c b a). Works for offsets larger than n.
std::size_t reflect_index(long i, std::size_t n) noexcept;

/// Separable convolution with the same odd-length kernel along both axes.
Grid convolve_separable(const Grid& src, const std::vector<double>& kernel);

}  // namespace gcyt
