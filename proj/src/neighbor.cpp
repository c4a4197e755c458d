#include "dualtree/neighbor.hpp"

#include <stdexcept>

namespace dualtree {

NeighborResults::NeighborResults(NeighborMode mode, std::size_t n_queries,
                                 std::uint32_t k)
    : mode_(mode), k_(k) {
  if (k == 0) throw std::invalid_argument("neighbor lists need k >= 1");
  dists_.assign(n_queries * k,
                mode == NeighborMode::kNearest ? bounds::kInf : 0.0);
  indices_.assign(n_queries * k, -1);
  counts_.assign(n_queries, 0);
}

bool NeighborResults::insert(std::uint32_t q, std::uint32_t r, double d) {
  const std::size_t row = static_cast<std::size_t>(q) * k_;
  const std::uint32_t n = counts_[q];
  for (std::uint32_t i = 0; i < n; ++i) {
    if (indices_[row + i] == r) return false;
  }
  const auto precedes = [this](double d1, std::int64_t r1, double d2, std::int64_t r2) {
    if (d1 != d2) return mode_ == NeighborMode::kNearest ? d1 < d2 : d1 > d2;
    return r1 < r2;
  };
  std::uint32_t slot = n;
  if (n == k_) {
    if (!precedes(d, r, dists_[row + k_ - 1], indices_[row + k_ - 1])) return false;
    slot = k_ - 1;
  }
  while (slot > 0 && precedes(d, r, dists_[row + slot - 1], indices_[row + slot - 1])) {
    dists_[row + slot] = dists_[row + slot - 1];
    indices_[row + slot] = indices_[row + slot - 1];
    --slot;
  }
  dists_[row + slot] = d;
  indices_[row + slot] = r;
  if (n < k_) counts_[q] = n + 1;
  return true;
}

double bound_b1(const Tree& qt, const TreeNode& n, const NeighborResults& results,
                const std::vector<double>& cache) {
  return bounds::b1_nearest(qt, n, cache,
                            [&](std::uint32_t p) { return results.kth(p); });
}

double bound_b2(const Tree& qt, const TreeNode& n, const NeighborResults& results,
                const std::vector<double>& cache) {
  return bounds::b2_nearest(qt, n, cache,
                            [&](std::uint32_t p) { return results.kth(p); });
}

double bound_combined(const Tree& qt, const TreeNode& n, const NeighborResults& results,
                      bounds::BoundCaches& caches) {
  return bounds::evaluate(qt, n, caches,
                          [&](std::uint32_t p) { return results.kth(p); });
}

NeighborResults neighbor_search(const Dataset& query, const Dataset& reference,
                                NeighborMode mode, const NeighborSearchConfig& config,
                                TraversalStats* stats) {
  const std::uint32_t max_k = static_cast<std::uint32_t>(
      reference.size() - (config.exclude_self ? 1 : 0));
  if (config.k < 1 || config.k > max_k) {
    throw std::invalid_argument("neighbor_search: k out of range");
  }
  if (query.dim() != reference.dim()) {
    throw std::invalid_argument("neighbor_search: dimension mismatch");
  }

  const Tree ref_tree = config.tree == TreeKind::kKdTree
                            ? build_kd_tree(reference, config.leaf_size)
                            : build_cover_tree(reference, config.cover_base);
  NeighborResults results(mode, query.size(), config.k);
  TraversalStats total;

  if (config.traversal == TraversalKind::kSingleTree) {
    for (std::uint32_t qi = 0; qi < query.size(); ++qi) {
      const Tree point_tree = make_point_tree(query, qi, config.tree);
      auto caches = bounds::make_bound_caches(point_tree, mode, config.bound);
      NeighborRule rule{&query, &reference, &point_tree, &results, &caches,
                        mode,   config.exclude_self};
      total += single_tree(point_tree, ref_tree, rule);
    }
  } else {
    const Tree query_tree = config.tree == TreeKind::kKdTree
                                ? build_kd_tree(query, config.leaf_size)
                                : build_cover_tree(query, config.cover_base);
    auto caches = bounds::make_bound_caches(query_tree, mode, config.bound);
    NeighborRule rule{&query, &reference, &query_tree, &results, &caches,
                      mode,   config.exclude_self};
    switch (config.traversal) {
      case TraversalKind::kDualBreadthFirst:
        total = dual_breadth_first(query_tree, ref_tree, rule);
        break;
      case TraversalKind::kDualDepthFirstParallel:
        total = dual_depth_first_parallel(query_tree, ref_tree, rule, config.workers);
        break;
      default:
        total = dual_depth_first(query_tree, ref_tree, rule);
        break;
    }
  }
  if (stats) *stats = total;
  return results;
}

}  // namespace dualtree
