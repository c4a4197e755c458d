#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dualtree/core.hpp"
#include "dualtree/traversal.hpp"

namespace dualtree {

struct RangeSpec {
  double delta1 = 0.0;
  double delta2 = std::numeric_limits<double>::infinity();

  bool contains(double d) const { return delta1 <= d && d <= delta2; }
};

// Per-query unordered match lists. Each matching reference appears once per
// query; the traversal's pair suppression provides that for tree kinds that
// repeat points.
struct RangeResults {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows;

  explicit RangeResults(std::size_t n_queries = 0) : rows(n_queries) {}
};

struct RangeRule {
  static constexpr bool kPartitionable = true;

  const Dataset* qdata = nullptr;
  const Dataset* rdata = nullptr;
  RangeSpec spec;
  RangeResults* results = nullptr;
  // When set, prunes with the interval-membership test on d_min alone, which
  // wrongly discards overlapping nodes whose d_min falls below delta1. Kept
  // only for comparison; never the default.
  bool unsafe_min_only = false;

  double priority(const TreeNode& q, const TreeNode& r) const {
    return min_node_distance(q, r);
  }

  ScoreDecision score(const TreeNode& nq, const TreeNode& nr, PairFlags, double hint) {
    const double dmin = hint;
    if (unsafe_min_only) {
      return spec.contains(dmin) ? ScoreDecision::go(dmin) : ScoreDecision::prune();
    }
    if (dmin > spec.delta2) return ScoreDecision::prune();
    if (max_node_distance(nq, nr) < spec.delta1) return ScoreDecision::prune();
    return ScoreDecision::go(dmin);
  }

  double base_case(std::uint32_t pq, std::uint32_t pr) {
    const double d = distance(qdata->row(pq), rdata->row(pr));
    if (spec.contains(d)) results->rows[pq].emplace_back(pr, d);
    return d;
  }
};

struct RangeSearchConfig {
  TreeKind tree = TreeKind::kKdTree;
  TraversalKind traversal = TraversalKind::kDualDepthFirst;
  std::uint32_t leaf_size = 20;
  double cover_base = 2.0;
  int workers = 1;
  bool unsafe_min_only = false;
};

// All reference points within [delta1, delta2] of each query point.
RangeResults range_search(const Dataset& query, const Dataset& reference,
                          const RangeSpec& spec, const RangeSearchConfig& config,
                          TraversalStats* stats = nullptr);

}  // namespace dualtree
