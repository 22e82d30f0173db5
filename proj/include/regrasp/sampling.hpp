#ifndef REGRASP_SAMPLING_HPP
#define REGRASP_SAMPLING_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace regrasp
{

/// Radical inverse of `index` in `base`, in [0, 1).
double radical_inverse(std::uint64_t index, int base);

/// First `count` points of the Halton sequence in [0, 1)^dims, starting at
/// index 1. A nonzero `seed` applies a Cranley-Patterson shift (modulo 1)
/// drawn from that seed; seed 0 leaves the sequence unshifted.
std::vector<Eigen::VectorXd> halton_points(std::size_t count, int dims, std::uint64_t seed = 0);

}  // namespace regrasp

#endif  // REGRASP_SAMPLING_HPP
