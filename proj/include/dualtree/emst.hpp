#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dualtree/core.hpp"
#include "dualtree/neighbor.hpp"
#include "dualtree/traversal.hpp"

namespace dualtree {

struct Edge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double weight = 0.0;
};

// Union-find over reference points plus the per-component candidate edge for
// the current round. The representative of a component is its smallest point
// index, which doubles as the component id.
class ComponentForest {
 public:
  explicit ComponentForest(std::size_t n);

  std::uint32_t find(std::uint32_t p) const;
  // Joins the two components; the smaller representative wins.
  void unite(std::uint32_t a, std::uint32_t b);
  std::size_t component_count() const { return components_; }

  void reset_candidates();
  double candidate_distance(std::uint32_t component) const {
    return cand_dist_[component];
  }
  std::uint32_t candidate_neighbor(std::uint32_t component) const {
    return cand_ref_[component];
  }
  std::uint32_t candidate_source(std::uint32_t component) const {
    return cand_src_[component];
  }

  // Records (src -> ref, d) as component `c`'s candidate when it improves it.
  // Ties prefer the smaller (neighbor component, neighbor, source) triple.
  void offer_candidate(std::uint32_t c, std::uint32_t src, std::uint32_t ref, double d);

  std::size_t size() const { return parent_.size(); }

 private:
  mutable std::vector<std::uint32_t> parent_;
  std::size_t components_;
  std::vector<double> cand_dist_;
  std::vector<std::uint32_t> cand_ref_;
  std::vector<std::uint32_t> cand_src_;
};

inline constexpr std::int64_t kMixedComponent = -1;

// Per-node component tags for the current round: the component id shared by
// every descendant point, or kMixedComponent.
std::vector<std::int64_t> component_tags(const Tree& tree, const ComponentForest& forest);

struct BoruvkaRule {
  // Candidates are shared across query points, so the state cannot be sliced
  // per query partition.
  static constexpr bool kPartitionable = false;

  const Dataset* data = nullptr;
  const Tree* tree = nullptr;
  ComponentForest* forest = nullptr;
  const std::vector<std::int64_t>* tags = nullptr;
  bounds::BoundCaches* caches = nullptr;

  double priority(const TreeNode& q, const TreeNode& r) const {
    return min_node_distance(q, r);
  }

  ScoreDecision score(const TreeNode& nq, const TreeNode& nr, PairFlags, double hint) {
    const std::int64_t tq = (*tags)[nq.id];
    if (tq != kMixedComponent && tq == (*tags)[nr.id]) return ScoreDecision::prune();
    const auto value = [this](std::uint32_t p) {
      return forest->candidate_distance(forest->find(p));
    };
    const double b = bounds::evaluate(*tree, nq, *caches, value);
    return hint < b ? ScoreDecision::go(hint) : ScoreDecision::prune();
  }

  double base_case(std::uint32_t pq, std::uint32_t pr) {
    if (pq == pr) return 0.0;
    const double d = distance(data->row(pq), data->row(pr));
    const std::uint32_t cq = forest->find(pq);
    if (cq != forest->find(pr)) forest->offer_candidate(cq, pq, pr, d);
    return d;
  }
};

struct EmstResult {
  std::vector<Edge> edges;  // sorted by (weight, u, v), u < v
  double total_weight = 0.0;
  std::size_t rounds = 0;
};

struct EmstConfig {
  TreeKind tree = TreeKind::kKdTree;
  TraversalKind traversal = TraversalKind::kDualDepthFirst;
  std::uint32_t leaf_size = 20;
  double cover_base = 2.0;
};

// Called after each round's traversal, before components merge.
using EmstRoundObserver = std::function<void(std::size_t round, const ComponentForest&)>;

// Euclidean minimum spanning tree by repeated pruned self-traversals, one
// candidate edge per component per round.
EmstResult emst(const Dataset& data, const EmstConfig& config,
                TraversalStats* stats = nullptr,
                const EmstRoundObserver& observer = nullptr);

}  // namespace dualtree
