#include "dualtree/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace dualtree {

NeighborResults brute_knn(const Dataset& query, const Dataset& reference,
                          NeighborMode mode, std::uint32_t k, bool exclude_self) {
  const std::uint32_t max_k = static_cast<std::uint32_t>(
      reference.size() - (exclude_self ? 1 : 0));
  if (k < 1 || k > max_k) {
    throw std::invalid_argument("brute_knn: k out of range");
  }
  NeighborResults results(mode, query.size(), k);
  for (std::uint32_t q = 0; q < query.size(); ++q) {
    for (std::uint32_t r = 0; r < reference.size(); ++r) {
      if (exclude_self && q == r) continue;
      results.insert(q, r, distance(query.row(q), reference.row(r)));
    }
  }
  return results;
}

RangeResults brute_range(const Dataset& query, const Dataset& reference,
                         const RangeSpec& spec) {
  RangeResults results(query.size());
  for (std::uint32_t q = 0; q < query.size(); ++q) {
    for (std::uint32_t r = 0; r < reference.size(); ++r) {
      const double d = distance(query.row(q), reference.row(r));
      if (spec.contains(d)) results.rows[q].emplace_back(r, d);
    }
  }
  return results;
}

EmstResult kruskal_mst(const Dataset& data) {
  const std::uint32_t n = static_cast<std::uint32_t>(data.size());
  std::vector<Edge> all;
  all.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = u + 1; v < n; ++v) {
      all.push_back({u, v, distance(data.row(u), data.row(v))});
    }
  }
  std::sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });

  ComponentForest forest(n);
  EmstResult result;
  for (const Edge& e : all) {
    if (forest.find(e.u) == forest.find(e.v)) continue;
    forest.unite(e.u, e.v);
    result.edges.push_back(e);
    result.total_weight += e.weight;
    if (result.edges.size() + 1 == n) break;
  }
  return result;
}

std::vector<double> brute_kde(const Dataset& query, const Dataset& reference,
                              const Kernel& kernel) {
  std::vector<double> densities(query.size(), 0.0);
  for (std::uint32_t q = 0; q < query.size(); ++q) {
    double sum = 0.0;
    for (std::uint32_t r = 0; r < reference.size(); ++r) {
      sum += kernel(distance(query.row(q), reference.row(r)));
    }
    densities[q] = sum;
  }
  return densities;
}

}  // namespace dualtree
