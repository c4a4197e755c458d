#include "dualtree/datagen.hpp"

#include <random>

namespace dualtree {

Dataset generate_uniform(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::vector<double> values(n * dim);
  for (double& v : values) v = coord(rng);
  return Dataset(n, dim, std::move(values));
}

Dataset generate_clusters(std::size_t n, std::size_t dim, std::uint64_t seed,
                          std::size_t n_clusters, double sigma) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> centers(n_clusters * dim);
  for (double& c : centers) c = coord(rng);
  std::uniform_int_distribution<std::size_t> pick(0, n_clusters - 1);
  std::vector<double> values(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    for (std::size_t d = 0; d < dim; ++d) {
      values[i * dim + d] = centers[c * dim + d] + noise(rng);
    }
  }
  return Dataset(n, dim, std::move(values));
}

}  // namespace dualtree
