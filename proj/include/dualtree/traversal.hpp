#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <vector>

#include "dualtree/spacetree.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dualtree {

enum class TraversalKind : std::uint8_t {
  kDualDepthFirst,
  kDualBreadthFirst,
  kSingleTree,
  kDualDepthFirstParallel,
};

// Prune, or continue with a priority (lower priorities are visited first).
struct ScoreDecision {
  double priority = 0.0;
  bool pruned = false;

  static ScoreDecision prune() { return {0.0, true}; }
  static ScoreDecision go(double priority) { return {priority, false}; }
};

// Whether every held point of the query/reference node was already held at
// the node's predecessor on the current recursion path. Only meaningful for
// tree kinds that repeat points (cover trees); used to run each point pair's
// base case exactly once and to keep score-side approximations consistent.
struct PairFlags {
  bool query_repeat = false;
  bool ref_repeat = false;
};

struct TraversalStats {
  std::uint64_t base_cases = 0;
  std::uint64_t scores = 0;
  std::uint64_t prunes = 0;

  TraversalStats& operator+=(const TraversalStats& o) {
    base_cases += o.base_cases;
    scores += o.scores;
    prunes += o.prunes;
    return *this;
  }
};

// A traversal rule supplies:
//   static constexpr bool kPartitionable;
//     true when its mutable state is sliced per query point, making the rule
//     eligible for the parallel traversal
//   double priority(const TreeNode& q, const TreeNode& r) const;
//     child-ordering key; also handed to score() so the dominant geometric
//     quantity is computed once per pair
//   ScoreDecision score(const TreeNode& q, const TreeNode& r, PairFlags f, double hint);
//   double base_case(std::uint32_t q_point, std::uint32_t r_point);

namespace detail {

inline bool point_repeats(const TreeNode& from, const TreeNode& to) {
  return !from.held.empty() && !to.held.empty() && from.held.front() == to.held.front();
}

struct ChildPair {
  double key;
  std::uint32_t cq, cr;
  PairFlags flags;
};

template <typename Rule>
void run_base_cases(const TreeNode& nq, const TreeNode& nr, PairFlags flags,
                    bool dedup, Rule& rule, TraversalStats& stats) {
  if (dedup && flags.query_repeat && flags.ref_repeat) return;
  for (std::uint32_t pq : nq.held) {
    for (std::uint32_t pr : nr.held) {
      rule.base_case(pq, pr);
      ++stats.base_cases;
    }
  }
}

// Child combinations of a node pair. When exactly one side is childless it is
// re-paired with each child of the other side.
template <typename Rule>
std::vector<ChildPair> child_pairs(const Tree& qt, const TreeNode& nq, const Tree& rt,
                                   const TreeNode& nr, const Rule& rule) {
  std::vector<ChildPair> pairs;
  if (nq.is_leaf() && nr.is_leaf()) return pairs;
  if (!nq.is_leaf() && !nr.is_leaf()) {
    pairs.reserve(nq.children.size() * nr.children.size());
    for (std::uint32_t cq : nq.children) {
      const TreeNode& qc = qt.node(cq);
      for (std::uint32_t cr : nr.children) {
        const TreeNode& rc = rt.node(cr);
        pairs.push_back({rule.priority(qc, rc), cq, cr,
                         {point_repeats(nq, qc), point_repeats(nr, rc)}});
      }
    }
  } else if (nq.is_leaf()) {
    pairs.reserve(nr.children.size());
    for (std::uint32_t cr : nr.children) {
      const TreeNode& rc = rt.node(cr);
      pairs.push_back({rule.priority(nq, rc), nq.id, cr, {true, point_repeats(nr, rc)}});
    }
  } else {
    pairs.reserve(nq.children.size());
    for (std::uint32_t cq : nq.children) {
      const TreeNode& qc = qt.node(cq);
      pairs.push_back({rule.priority(qc, nr), cq, nr.id, {point_repeats(nq, qc), true}});
    }
  }
  return pairs;
}

template <typename Rule>
void dual_visit(const Tree& qt, const TreeNode& nq, const Tree& rt, const TreeNode& nr,
                PairFlags flags, double hint, bool dedup, Rule& rule,
                TraversalStats& stats) {
  ++stats.scores;
  const ScoreDecision decision = rule.score(nq, nr, flags, hint);
  if (decision.pruned) {
    ++stats.prunes;
    return;
  }
  run_base_cases(nq, nr, flags, dedup, rule, stats);

  auto pairs = child_pairs(qt, nq, rt, nr, rule);
  std::sort(pairs.begin(), pairs.end(), [](const ChildPair& a, const ChildPair& b) {
    if (a.key != b.key) return a.key < b.key;
    if (a.cq != b.cq) return a.cq < b.cq;
    return a.cr < b.cr;
  });
  for (const ChildPair& p : pairs) {
    dual_visit(qt, qt.node(p.cq), rt, rt.node(p.cr), p.flags, p.key, dedup, rule, stats);
  }
}

inline bool want_dedup(const Tree& qt, const Tree& rt) {
  return !(qt.pairs_unique() && rt.pairs_unique());
}

}  // namespace detail

template <typename Rule>
TraversalStats dual_depth_first(const Tree& qt, const Tree& rt, Rule& rule) {
  TraversalStats stats;
  const TreeNode& nq = qt.root();
  const TreeNode& nr = rt.root();
  detail::dual_visit(qt, nq, rt, nr, PairFlags{}, rule.priority(nq, nr),
                     detail::want_dedup(qt, rt), rule, stats);
  return stats;
}

// Same pruning semantics with a FIFO frontier of node combinations.
template <typename Rule>
TraversalStats dual_breadth_first(const Tree& qt, const Tree& rt, Rule& rule) {
  TraversalStats stats;
  const bool dedup = detail::want_dedup(qt, rt);
  struct Entry {
    std::uint32_t nq, nr;
    PairFlags flags;
    double hint;
  };
  std::deque<Entry> frontier;
  frontier.push_back({qt.root_id, rt.root_id, PairFlags{},
                      rule.priority(qt.root(), rt.root())});
  while (!frontier.empty()) {
    const Entry e = frontier.front();
    frontier.pop_front();
    const TreeNode& nq = qt.node(e.nq);
    const TreeNode& nr = rt.node(e.nr);
    ++stats.scores;
    const ScoreDecision decision = rule.score(nq, nr, e.flags, e.hint);
    if (decision.pruned) {
      ++stats.prunes;
      continue;
    }
    detail::run_base_cases(nq, nr, e.flags, dedup, rule, stats);
    for (const auto& p : detail::child_pairs(qt, nq, rt, nr, rule)) {
      frontier.push_back({p.cq, p.cr, p.flags, p.key});
    }
  }
  return stats;
}

// Descent over the reference tree only; the query side is a one-node tree
// made by make_point_tree (a zero-extent region with lambda = rho = 0), so
// the generic machinery degenerates to a pruning single-tree traversal.
template <typename Rule>
TraversalStats single_tree(const Tree& point_tree, const Tree& rt, Rule& rule) {
  return dual_depth_first(point_tree, rt, rule);
}

// Query subtrees at the smallest depth giving at least `target` disjoint
// partitions; childless nodes above that depth become partitions of their own.
std::vector<std::uint32_t> query_partition_roots(const Tree& qt, std::size_t target);

// Runs one independent depth-first traversal per query partition. Each
// partition gets its own copy of the rule, whose mutable state must be sliced
// per query point (results merge trivially because the slices are disjoint).
template <typename Rule>
TraversalStats dual_depth_first_parallel(const Tree& qt, const Tree& rt,
                                         const Rule& prototype, int workers) {
  static_assert(Rule::kPartitionable,
                "rule state is not partitionable by query point");
  if (workers <= 1) {
    Rule rule = prototype;
    return dual_depth_first(qt, rt, rule);
  }
  const auto roots = query_partition_roots(qt, 4 * static_cast<std::size_t>(workers));
  std::vector<TraversalStats> stats(roots.size());
  const bool dedup = detail::want_dedup(qt, rt);
  const auto run_one = [&](std::size_t i) {
    Rule rule = prototype;
    const TreeNode& nq = qt.node(roots[i]);
    const TreeNode& nr = rt.root();
    detail::dual_visit(qt, nq, rt, nr, PairFlags{}, rule.priority(nq, nr), dedup,
                       rule, stats[i]);
  };
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(roots.size()); ++i) {
    run_one(static_cast<std::size_t>(i));
  }
#else
  for (std::size_t i = 0; i < roots.size(); ++i) run_one(i);
#endif
  TraversalStats total;
  for (const TraversalStats& s : stats) total += s;
  return total;
}

}  // namespace dualtree
