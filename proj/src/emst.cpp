#include "dualtree/emst.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dualtree {

ComponentForest::ComponentForest(std::size_t n)
    : parent_(n), components_(n), cand_dist_(n), cand_ref_(n), cand_src_(n) {
  std::iota(parent_.begin(), parent_.end(), 0);
  reset_candidates();
}

std::uint32_t ComponentForest::find(std::uint32_t p) const {
  std::uint32_t root = p;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[p] != root) {
    const std::uint32_t next = parent_[p];
    parent_[p] = root;
    p = next;
  }
  return root;
}

void ComponentForest::unite(std::uint32_t a, std::uint32_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  if (b < a) std::swap(a, b);
  parent_[b] = a;
  --components_;
}

void ComponentForest::reset_candidates() {
  std::fill(cand_dist_.begin(), cand_dist_.end(),
            std::numeric_limits<double>::infinity());
}

void ComponentForest::offer_candidate(std::uint32_t c, std::uint32_t src,
                                      std::uint32_t ref, double d) {
  if (d > cand_dist_[c]) return;
  if (d == cand_dist_[c]) {
    const std::uint32_t old_comp = find(cand_ref_[c]);
    const std::uint32_t new_comp = find(ref);
    const auto incoming = std::make_tuple(new_comp, ref, src);
    const auto held = std::make_tuple(old_comp, cand_ref_[c], cand_src_[c]);
    if (!(incoming < held)) return;
  }
  cand_dist_[c] = d;
  cand_ref_[c] = ref;
  cand_src_[c] = src;
}

std::vector<std::int64_t> component_tags(const Tree& tree,
                                         const ComponentForest& forest) {
  std::vector<std::int64_t> tags(tree.nodes.size(), kMixedComponent);
  // Children carry larger ids than their parents in both builders, so one
  // reverse pass is a postorder.
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    const TreeNode& n = tree.nodes[i];
    std::int64_t tag = -2;  // unset
    bool mixed = false;
    for (std::uint32_t p : n.held) {
      const std::int64_t c = forest.find(p);
      if (tag == -2) {
        tag = c;
      } else if (tag != c) {
        mixed = true;
      }
    }
    for (std::uint32_t child : n.children) {
      const std::int64_t c = tags[child];
      if (c == kMixedComponent) {
        mixed = true;
      } else if (tag == -2) {
        tag = c;
      } else if (tag != c) {
        mixed = true;
      }
    }
    tags[i] = mixed ? kMixedComponent : tag;
  }
  return tags;
}

EmstResult emst(const Dataset& data, const EmstConfig& config, TraversalStats* stats,
                const EmstRoundObserver& observer) {
  if (config.traversal != TraversalKind::kDualDepthFirst &&
      config.traversal != TraversalKind::kDualBreadthFirst) {
    throw std::invalid_argument("emst: requires a dual traversal");
  }
  const std::size_t n = data.size();
  EmstResult result;
  TraversalStats total;
  if (n == 1) {
    if (stats) *stats = total;
    result.rounds = 0;
    return result;
  }

  const Tree tree = config.tree == TreeKind::kKdTree
                        ? build_kd_tree(data, config.leaf_size)
                        : build_cover_tree(data, config.cover_base);
  ComponentForest forest(n);
  const std::size_t max_rounds =
      static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) + 2;

  while (forest.component_count() > 1) {
    ++result.rounds;
    if (result.rounds > max_rounds) {
      throw std::logic_error("emst: round limit exceeded");
    }
    forest.reset_candidates();
    const auto tags = component_tags(tree, forest);
    auto caches = bounds::make_bound_caches(tree, NeighborMode::kNearest,
                                            BoundMode::kCombined);
    BoruvkaRule rule{&data, &tree, &forest, &tags, &caches};
    if (config.traversal == TraversalKind::kDualBreadthFirst) {
      total += dual_breadth_first(tree, tree, rule);
    } else {
      total += dual_depth_first(tree, tree, rule);
    }
    if (observer) observer(result.rounds, forest);

    // Representatives as of the round start; merging must not hide a
    // component's candidate edge or the halving guarantee breaks.
    std::vector<std::uint32_t> reps;
    for (std::uint32_t p = 0; p < n; ++p) {
      if (forest.find(p) == p) reps.push_back(p);
    }
    bool progressed = false;
    for (std::uint32_t p : reps) {
      const double d = forest.candidate_distance(p);
      if (!std::isfinite(d)) continue;
      const std::uint32_t u = forest.candidate_source(p);
      const std::uint32_t v = forest.candidate_neighbor(p);
      if (forest.find(u) == forest.find(v)) continue;  // both ends already merged
      result.edges.push_back({std::min(u, v), std::max(u, v), d});
      forest.unite(u, v);
      progressed = true;
    }
    if (!progressed) {
      throw std::logic_error("emst: no progress in round");
    }
  }

  std::sort(result.edges.begin(), result.edges.end(), [](const Edge& a, const Edge& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  for (const Edge& e : result.edges) result.total_weight += e.weight;
  if (stats) *stats = total;
  return result;
}

}  // namespace dualtree
