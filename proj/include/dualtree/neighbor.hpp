#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dualtree/core.hpp"
#include "dualtree/traversal.hpp"

namespace dualtree {

enum class NeighborMode : std::uint8_t { kNearest, kFurthest };
enum class BoundMode : std::uint8_t { kCombined, kB1, kB2 };

// Per-query ordered candidate lists. Nearest mode keeps the k smallest
// distances ascending and an unfilled k-th slot reads as infinity; furthest
// mode keeps the k largest descending and an unfilled slot reads as zero.
// Equal distances are ordered by point index, so the retained set does not
// depend on insertion order.
class NeighborResults {
 public:
  NeighborResults(NeighborMode mode, std::size_t n_queries, std::uint32_t k);

  NeighborMode mode() const { return mode_; }
  std::uint32_t k() const { return k_; }
  std::size_t queries() const { return counts_.size(); }

  std::uint32_t size(std::uint32_t q) const { return counts_[q]; }
  std::int64_t neighbor(std::uint32_t q, std::uint32_t i) const {
    return indices_[static_cast<std::size_t>(q) * k_ + i];
  }
  double dist(std::uint32_t q, std::uint32_t i) const {
    return dists_[static_cast<std::size_t>(q) * k_ + i];
  }

  // Current k-th candidate distance for query q.
  double kth(std::uint32_t q) const {
    if (counts_[q] < k_) {
      return mode_ == NeighborMode::kNearest
                 ? std::numeric_limits<double>::infinity()
                 : 0.0;
    }
    return dists_[static_cast<std::size_t>(q) * k_ + k_ - 1];
  }

  // Inserts candidate (r, d) if it beats the k-th slot and r is not already
  // listed. Returns whether the list changed.
  bool insert(std::uint32_t q, std::uint32_t r, double d);

 private:
  NeighborMode mode_;
  std::uint32_t k_;
  std::vector<double> dists_;
  std::vector<std::int64_t> indices_;
  std::vector<std::uint32_t> counts_;
};

// ---- Pruning bounds over the query tree ----
//
// A bound caps, for every query point below the node, how far a useful
// reference candidate can still be (nearest mode; the furthest-mode mirror
// floors it instead). `value(p)` supplies the per-point candidate distance:
// the k-th list entry for neighbor search, the component candidate distance
// for the minimum-spanning-tree rule. `cache` holds previously computed
// per-node values and is indexed by node id.

namespace bounds {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Worst current k-th candidate distance below the node, by direct recursion:
// max over held points and cached child values.
template <typename PointValue>
double b1_nearest(const Tree& /*qt*/, const TreeNode& n, const std::vector<double>& cache,
                  PointValue&& value) {
  double acc = -kInf;
  bool any = false;
  for (std::uint32_t p : n.held) {
    acc = std::max(acc, value(p));
    any = true;
  }
  for (std::uint32_t c : n.children) {
    acc = std::max(acc, cache[c]);
    any = true;
  }
  return any ? acc : kInf;
}

// Triangle-inequality bound through the node centroid.
template <typename PointValue>
double b2_nearest(const Tree& qt, const TreeNode& n, const std::vector<double>& cache,
                  PointValue&& value) {
  double acc = kInf;
  for (std::uint32_t p : n.held) {
    acc = std::min(acc, value(p) + n.rho + n.lambda);
  }
  for (std::uint32_t c : n.children) {
    acc = std::min(acc, cache[c] + 2.0 * (n.lambda - qt.node(c).lambda));
  }
  return acc;
}

// The combined bound keeps the max-style and min-style recursions in their
// own caches; folding them into one would let a value produced by one family
// flow through the other's child offset, which does not telescope soundly.
struct BoundCaches {
  NeighborMode mode = NeighborMode::kNearest;
  BoundMode bound = BoundMode::kCombined;
  std::vector<double> first;     // max-style (B1) recursion
  std::vector<double> second;    // min-style (B2) recursion
  std::vector<double> combined;  // per-node pruning bound, parent-aware
};

inline BoundCaches make_bound_caches(const Tree& qt, NeighborMode mode,
                                     BoundMode bound) {
  const double init = mode == NeighborMode::kNearest ? kInf : 0.0;
  BoundCaches bc;
  bc.mode = mode;
  bc.bound = bound;
  bc.first.assign(qt.nodes.size(), init);
  bc.second.assign(qt.nodes.size(), init);
  bc.combined.assign(qt.nodes.size(), init);
  return bc;
}

template <typename PointValue>
double b1_furthest(const Tree& /*qt*/, const TreeNode& n, const std::vector<double>& cache,
                   PointValue&& value) {
  double acc = kInf;
  bool any = false;
  for (std::uint32_t p : n.held) {
    acc = std::min(acc, value(p));
    any = true;
  }
  for (std::uint32_t c : n.children) {
    acc = std::min(acc, cache[c]);
    any = true;
  }
  return any ? acc : 0.0;
}

template <typename PointValue>
double b2_furthest(const Tree& qt, const TreeNode& n, const std::vector<double>& cache,
                   PointValue&& value) {
  double acc = -kInf;
  bool any = false;
  for (std::uint32_t p : n.held) {
    acc = std::max(acc, value(p) - n.rho - n.lambda);
    any = true;
  }
  for (std::uint32_t c : n.children) {
    acc = std::max(acc, cache[c] - 2.0 * (n.lambda - qt.node(c).lambda));
    any = true;
  }
  return any ? std::max(0.0, acc) : 0.0;
}

// Evaluates the selected bound at n and folds it into the caches, which only
// ever tighten (down for nearest, up for furthest). Returns the value used
// for pruning.
template <typename PointValue>
double evaluate(const Tree& qt, const TreeNode& n, BoundCaches& bc,
                PointValue&& value) {
  const std::uint32_t id = n.id;
  if (bc.mode == NeighborMode::kNearest) {
    double v;
    switch (bc.bound) {
      case BoundMode::kB1:
        v = std::min(bc.first[id], b1_nearest(qt, n, bc.first, value));
        bc.first[id] = v;
        return v;
      case BoundMode::kB2:
        v = std::min(bc.second[id], b2_nearest(qt, n, bc.second, value));
        bc.second[id] = v;
        return v;
      default: {
        const double f = std::min(bc.first[id], b1_nearest(qt, n, bc.first, value));
        bc.first[id] = f;
        const double s = std::min(bc.second[id], b2_nearest(qt, n, bc.second, value));
        bc.second[id] = s;
        double b = std::min(f, s);
        if (n.parent != kNoParent) b = std::min(b, bc.combined[n.parent]);
        b = std::min(b, bc.combined[id]);
        bc.combined[id] = b;
        return b;
      }
    }
  }
  double v;
  switch (bc.bound) {
    case BoundMode::kB1:
      v = std::max(bc.first[id], b1_furthest(qt, n, bc.first, value));
      bc.first[id] = v;
      return v;
    case BoundMode::kB2:
      v = std::max(bc.second[id], b2_furthest(qt, n, bc.second, value));
      bc.second[id] = v;
      return v;
    default: {
      const double f = std::max(bc.first[id], b1_furthest(qt, n, bc.first, value));
      bc.first[id] = f;
      const double s = std::max(bc.second[id], b2_furthest(qt, n, bc.second, value));
      bc.second[id] = s;
      double b = std::max(f, s);
      if (n.parent != kNoParent) b = std::max(b, bc.combined[n.parent]);
      b = std::max(b, bc.combined[id]);
      bc.combined[id] = b;
      return b;
    }
  }
}

}  // namespace bounds

// Standalone evaluations over neighbor candidate lists (nearest mode).
double bound_b1(const Tree& qt, const TreeNode& n, const NeighborResults& results,
                const std::vector<double>& cache);
double bound_b2(const Tree& qt, const TreeNode& n, const NeighborResults& results,
                const std::vector<double>& cache);
// Four-term combined bound; stores the value, which never exceeds what was
// cached before.
double bound_combined(const Tree& qt, const TreeNode& n, const NeighborResults& results,
                      bounds::BoundCaches& caches);

// BaseCase/Score pair for k-nearest and k-furthest neighbor search.
struct NeighborRule {
  static constexpr bool kPartitionable = true;

  const Dataset* qdata = nullptr;
  const Dataset* rdata = nullptr;
  const Tree* qtree = nullptr;
  NeighborResults* results = nullptr;
  bounds::BoundCaches* caches = nullptr;
  NeighborMode mode = NeighborMode::kNearest;
  bool exclude_self = false;

  double priority(const TreeNode& q, const TreeNode& r) const {
    return mode == NeighborMode::kNearest ? min_node_distance(q, r)
                                          : -max_node_distance(q, r);
  }

  ScoreDecision score(const TreeNode& nq, const TreeNode&, PairFlags, double hint) {
    const auto value = [this](std::uint32_t p) { return results->kth(p); };
    const double b = bounds::evaluate(*qtree, nq, *caches, value);
    if (mode == NeighborMode::kNearest) {
      return hint < b ? ScoreDecision::go(hint) : ScoreDecision::prune();
    }
    return -hint > b ? ScoreDecision::go(hint) : ScoreDecision::prune();
  }

  double base_case(std::uint32_t pq, std::uint32_t pr) {
    if (exclude_self && pq == pr) return 0.0;
    const double d = distance(qdata->row(pq), rdata->row(pr));
    results->insert(pq, pr, d);
    return d;
  }
};

struct NeighborSearchConfig {
  TreeKind tree = TreeKind::kKdTree;
  TraversalKind traversal = TraversalKind::kDualDepthFirst;
  BoundMode bound = BoundMode::kCombined;
  std::uint32_t k = 1;
  bool exclude_self = false;
  std::uint32_t leaf_size = 20;
  double cover_base = 2.0;
  int workers = 1;
};

// Exact k-nearest (or k-furthest) neighbors of every query point.
// Throws std::invalid_argument when k is out of range.
NeighborResults neighbor_search(const Dataset& query, const Dataset& reference,
                                NeighborMode mode, const NeighborSearchConfig& config,
                                TraversalStats* stats = nullptr);

}  // namespace dualtree
