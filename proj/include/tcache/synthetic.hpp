#pragma once

// Synthetic fixtures with known ground truth.

#include <cstdint>
#include <vector>

#include "tcache/tensor.hpp"

namespace tcache {

struct SyntheticTensor {
    SparseTensor observed;
    DenseTensor truth;
};

/// truth = sum_k fold(A_k B_k^T, (k, shift)) with Gaussian factors of rank
/// ranks[k] (0 skips a mode); observed = uniformly chosen round(fraction *
/// numel) cells of truth plus N(0, noise_sigma^2) noise.
SyntheticTensor synth_low_rank(const Shape& shape, const std::vector<std::size_t>& ranks, double noise_sigma,
                               double observe_fraction, std::uint64_t seed, std::size_t shift = 1);

/// Stationary Zipf popularity: each slot draws `requests_per_bs` requests per
/// base station and records them on the diagonal D(f, f, b).
std::vector<DenseTensor> synth_zipf_stream(std::size_t files, std::size_t num_bs, std::size_t slots,
                                           double exponent, std::size_t requests_per_bs, std::uint64_t seed);

struct SyntheticStream {
    std::vector<DenseTensor> observed;  // truth with most cells masked to zero
    std::vector<DenseTensor> truth;
};

/// Nonnegative low-rank demand D_t(f, i, b) = sum_r p_r(f) q_r(i) w_r(b) g_r(t)
/// with slowly drifting temporal weights; each cell survives in `observed`
/// with probability 1 - mask_fraction.
SyntheticStream synth_low_rank_stream(std::size_t files, std::size_t num_bs, std::size_t slots, std::size_t rank,
                                      double mask_fraction, std::uint64_t seed);

}  // namespace tcache
