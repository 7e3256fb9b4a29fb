#pragma once

#include <cstdint>

#include "tcache/tensor.hpp"

namespace tcache {

/// Top singular triplets, sigma nonincreasing. Each column pair is sign-fixed
/// so that the largest-magnitude entry of the U column is positive.
struct SvdTriplet {
    Matrix u;
    Vector sigma;
    Matrix v;

    Eigen::Index rank() const { return sigma.size(); }
    Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

struct SvdOptions {
    // Matrices whose smaller side is at most this use a dense bidiagonal SVD;
    // larger ones go through seeded randomized subspace iteration.
    Eigen::Index dense_limit = 512;
    Eigen::Index oversample = 10;
    double tolerance = 1e-10;
    int max_iterations = 1000;
};

SvdTriplet truncated_svd(const Matrix& m, Eigen::Index r, std::uint64_t seed, const SvdOptions& opts = {});

/// Largest singular value.
double dominant_sigma(const Matrix& m);

}  // namespace tcache
