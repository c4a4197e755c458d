#pragma once

#include <cstdint>

#include "dualtree/core.hpp"

namespace dualtree {

// Uniform points on [0,1]^dim.
Dataset generate_uniform(std::size_t n, std::size_t dim, std::uint64_t seed);

// Gaussian blobs around uniformly placed centers; clustered data makes
// pruning visible.
Dataset generate_clusters(std::size_t n, std::size_t dim, std::uint64_t seed,
                          std::size_t n_clusters = 8, double sigma = 0.02);

}  // namespace dualtree
