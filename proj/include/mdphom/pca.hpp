#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mdphom/tensor.hpp"

namespace mdphom {

/// Top-2 principal components of a point set, computed by power iteration
/// with deflation on the covariance matrix.
struct Pca2 {
    std::vector<double> mean;                     // (D)
    std::array<std::vector<double>, 2> components;  // unit vectors (D)
    std::array<double, 2> eigenvalues = {0.0, 0.0};
};

/// `points` is (N, D) with N >= 2. Deterministic given the seed used for the
/// power-iteration start vectors.
Pca2 pca_top2(const Tensor& points, double tolerance = 1e-10, std::size_t max_iters = 10000,
              std::uint64_t seed = 0);

/// Projects (N, D) points onto the two components, returning (N, 2).
Tensor pca_project(const Pca2& pca, const Tensor& points);

}  // namespace mdphom
