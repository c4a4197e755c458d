#include <cmath>

#include "doctest.h"
#include "dualtree/datagen.hpp"
#include "dualtree/neighbor.hpp"
#include "dualtree/oracle.hpp"

using namespace dualtree;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_distances(const NeighborResults& a, const NeighborResults& b) {
  REQUIRE(a.queries() == b.queries());
  REQUIRE(a.k() == b.k());
  for (std::uint32_t q = 0; q < a.queries(); ++q) {
    REQUIRE(a.size(q) == b.size(q));
    for (std::uint32_t i = 0; i < a.size(q); ++i) {
      CHECK(a.dist(q, i) == b.dist(q, i));
    }
  }
}

TreeNode bare_node(double rho, double lambda) {
  TreeNode n;
  n.id = 0;
  n.held = {0};
  n.rho = rho;
  n.lambda = lambda;
  return n;
}

}  // namespace

TEST_CASE("candidate list insertion") {
  NeighborResults res(NeighborMode::kNearest, 1, 1);
  CHECK(res.kth(0) == kInf);
  CHECK(res.insert(0, 7, 5.0));
  CHECK(res.size(0) == 1);
  CHECK(res.neighbor(0, 0) == 7);
  CHECK(res.dist(0, 0) == 5.0);

  CHECK_FALSE(res.insert(0, 9, 5.0));  // not better than the k-th slot
  CHECK_FALSE(res.insert(0, 9, 6.0));
  CHECK(res.insert(0, 3, 5.0));  // equal distance, smaller index wins
  CHECK(res.neighbor(0, 0) == 3);
  CHECK_FALSE(res.insert(0, 3, 5.0));  // already present: idempotent
  CHECK(res.insert(0, 1, 2.0));
  CHECK(res.kth(0) == 2.0);
}

TEST_CASE("furthest-mode list reads missing entries as zero") {
  NeighborResults res(NeighborMode::kFurthest, 1, 2);
  CHECK(res.kth(0) == 0.0);
  CHECK(res.insert(0, 2, 5.0));
  CHECK(res.kth(0) == 0.0);  // still unfilled
  CHECK(res.insert(0, 4, 1.0));
  CHECK(res.kth(0) == 1.0);
  CHECK(res.dist(0, 0) == 5.0);  // descending
  CHECK(res.insert(0, 6, 3.0));
  CHECK(res.kth(0) == 3.0);
  CHECK_FALSE(res.insert(0, 8, 2.0));
}

TEST_CASE("bound B1 evaluates the recursive max form") {
  const Dataset one(1, 2, {0.0, 0.0});
  const Tree leaf = build_kd_tree(one, 1);
  std::vector<double> cache(leaf.nodes.size(), kInf);

  NeighborResults res(NeighborMode::kNearest, 1, 1);
  res.insert(0, 5, 2.5);
  CHECK(bound_b1(leaf, leaf.root(), res, cache) == 2.5);

  const Dataset two(2, 2, {0.0, 0.0, 1.0, 0.0});
  const Tree pair_leaf = build_kd_tree(two, 2);
  std::vector<double> cache2(pair_leaf.nodes.size(), kInf);
  NeighborResults partial(NeighborMode::kNearest, 2, 1);
  partial.insert(0, 5, 2.5);
  CHECK(bound_b1(pair_leaf, pair_leaf.root(), partial, cache2) == kInf);
}

TEST_CASE("bound B1 at the root matches the worst k-th distance") {
  const Dataset q = generate_uniform(80, 2, 51);
  const Dataset r = generate_uniform(70, 2, 52);
  const Tree qt = build_kd_tree(q, 4);

  NeighborResults res = brute_knn(q, r, NeighborMode::kNearest, 3, false);
  std::vector<double> cache(qt.nodes.size(), kInf);
  // Children carry larger ids, so a reverse pass evaluates bottom-up.
  for (std::size_t i = qt.nodes.size(); i-- > 0;) {
    cache[i] = bound_b1(qt, qt.nodes[i], res, cache);
  }
  double worst = 0.0;
  for (std::uint32_t i = 0; i < q.size(); ++i) worst = std::max(worst, res.kth(i));
  CHECK(cache[qt.root_id] == worst);
}

TEST_CASE("bound B2 evaluates the refined min form") {
  const Tree dummy;  // held/child access only touches the node
  NeighborResults res(NeighborMode::kNearest, 1, 1);
  res.insert(0, 9, 1.0);
  std::vector<double> cache(1, kInf);

  CHECK(bound_b2(dummy, bare_node(0.2, 0.5), res, cache) == doctest::Approx(1.7).epsilon(1e-15));

  // Cover-tree shape: rho = 0, lambda = 2^(s+1) = 4.
  NeighborResults res3(NeighborMode::kNearest, 1, 1);
  res3.insert(0, 9, 3.0);
  CHECK(bound_b2(dummy, bare_node(0.0, 4.0), res3, cache) == 7.0);

  NeighborResults empty(NeighborMode::kNearest, 1, 1);
  CHECK(bound_b2(dummy, bare_node(0.0, 4.0), empty, cache) == kInf);
}

TEST_CASE("combined bound folds all terms and caches") {
  const Dataset one(1, 2, {0.0, 0.0});
  const Tree leaf = build_kd_tree(one, 1);

  NeighborResults empty(NeighborMode::kNearest, 1, 1);
  auto bc = bounds::make_bound_caches(leaf, NeighborMode::kNearest, BoundMode::kCombined);
  CHECK(bound_combined(leaf, leaf.root(), empty, bc) == kInf);

  NeighborResults res(NeighborMode::kNearest, 1, 1);
  res.insert(0, 5, 1.0);
  auto bc2 = bounds::make_bound_caches(leaf, NeighborMode::kNearest, BoundMode::kCombined);
  CHECK(bound_combined(leaf, leaf.root(), res, bc2) == 1.0);
  CHECK(bc2.combined[leaf.root_id] == 1.0);
}

TEST_CASE("nearest score prunes on d_min >= B, strictly") {
  const Dataset q(1, 1, {0.0});
  const Dataset r3(1, 1, {3.0});
  const Dataset r1(1, 1, {1.0});
  const Dataset r2(1, 1, {2.0});
  for (const auto& [ref, expect_prune] :
       std::vector<std::pair<const Dataset*, bool>>{{&r3, true}, {&r1, false}, {&r2, true}}) {
    const Tree qt = make_point_tree(q, 0, TreeKind::kKdTree);
    const Tree rt = make_point_tree(*ref, 0, TreeKind::kKdTree);
    NeighborResults res(NeighborMode::kNearest, 1, 1);
    res.insert(0, 9, 2.0);  // B(N_q) = 2
    auto bc = bounds::make_bound_caches(qt, NeighborMode::kNearest, BoundMode::kCombined);
    NeighborRule rule{&q, ref, &qt, &res, &bc, NeighborMode::kNearest, false};
    const double hint = rule.priority(qt.root(), rt.root());
    const ScoreDecision s = rule.score(qt.root(), rt.root(), PairFlags{}, hint);
    CHECK(s.pruned == expect_prune);
    if (!s.pruned) CHECK(s.priority == hint);
  }
}

TEST_CASE("furthest score prunes unless d_max exceeds the mirrored bound") {
  const Dataset q(1, 1, {0.0});
  const Dataset r(1, 1, {1.0});
  const Tree qt = make_point_tree(q, 0, TreeKind::kKdTree);
  const Tree rt = make_point_tree(r, 0, TreeKind::kKdTree);
  NeighborResults res(NeighborMode::kFurthest, 1, 1);
  res.insert(0, 9, 2.0);  // mirrored bound = 2, d_max = 1
  auto bc = bounds::make_bound_caches(qt, NeighborMode::kFurthest, BoundMode::kCombined);
  NeighborRule rule{&q, &r, &qt, &res, &bc, NeighborMode::kFurthest, false};
  const double hint = rule.priority(qt.root(), rt.root());
  CHECK(rule.score(qt.root(), rt.root(), PairFlags{}, hint).pruned);
}

TEST_CASE("collinear self-query with exclusion") {
  const Dataset pts(3, 2, {0.0, 0.0, 1.0, 0.0, 5.0, 0.0});
  for (const TreeKind kind : {TreeKind::kKdTree, TreeKind::kCoverTree}) {
    for (const TraversalKind trav :
         {TraversalKind::kDualDepthFirst, TraversalKind::kDualBreadthFirst,
          TraversalKind::kSingleTree}) {
      NeighborSearchConfig cfg;
      cfg.tree = kind;
      cfg.traversal = trav;
      cfg.k = 1;
      cfg.exclude_self = true;
      cfg.leaf_size = 1;
      const NeighborResults res =
          neighbor_search(pts, pts, NeighborMode::kNearest, cfg);
      CHECK(res.neighbor(0, 0) == 1);
      CHECK(res.dist(0, 0) == 1.0);
      CHECK(res.neighbor(1, 0) == 0);
      CHECK(res.dist(1, 0) == 1.0);
      CHECK(res.neighbor(2, 0) == 1);
      CHECK(res.dist(2, 0) == 4.0);
    }
  }
}

TEST_CASE("degenerate k returns the whole reference set sorted") {
  const Dataset q = generate_uniform(6, 2, 61);
  const Dataset r = generate_uniform(9, 2, 62);
  NeighborSearchConfig cfg;
  cfg.k = 9;
  const NeighborResults res = neighbor_search(q, r, NeighborMode::kNearest, cfg);
  for (std::uint32_t i = 0; i < q.size(); ++i) {
    REQUIRE(res.size(i) == 9);
    for (std::uint32_t j = 1; j < 9; ++j) {
      CHECK(res.dist(i, j - 1) <= res.dist(i, j));
    }
  }
  CHECK_THROWS_AS(
      (void)neighbor_search(q, r, NeighborMode::kNearest,
                            [] { NeighborSearchConfig c; c.k = 10; return c; }()),
      std::invalid_argument);
}

TEST_CASE("every tree/traversal/bound combination matches brute force") {
  const Dataset q = generate_uniform(90, 3, 71);
  const Dataset r = generate_uniform(110, 3, 72);
  for (const NeighborMode mode : {NeighborMode::kNearest, NeighborMode::kFurthest}) {
    const NeighborResults oracle = brute_knn(q, r, mode, 5, false);
    for (const TreeKind kind : {TreeKind::kKdTree, TreeKind::kCoverTree}) {
      for (const TraversalKind trav :
           {TraversalKind::kDualDepthFirst, TraversalKind::kDualBreadthFirst,
            TraversalKind::kSingleTree}) {
        for (const BoundMode bound :
             {BoundMode::kCombined, BoundMode::kB1, BoundMode::kB2}) {
          NeighborSearchConfig cfg;
          cfg.tree = kind;
          cfg.traversal = trav;
          cfg.bound = bound;
          cfg.k = 5;
          cfg.leaf_size = 3;
          const NeighborResults res = neighbor_search(q, r, mode, cfg);
          check_same_distances(res, oracle);
        }
      }
    }
  }
}

// Runs the combined-bound traversal while evaluating all three bounds from
// the same candidate state at every score call.
namespace {

struct DominanceProbe {
  static constexpr bool kPartitionable = false;
  const Dataset* qdata;
  const Dataset* rdata;
  const Tree* qtree;
  NeighborResults* results;
  bounds::BoundCaches* combined;
  bounds::BoundCaches* only_b1;
  bounds::BoundCaches* only_b2;
  std::vector<double>* last_bound;  // per node, for monotonicity
  bool* ok;

  double priority(const TreeNode& a, const TreeNode& b) const {
    return min_node_distance(a, b);
  }
  ScoreDecision score(const TreeNode& nq, const TreeNode&, PairFlags, double hint) {
    const auto value = [this](std::uint32_t p) { return results->kth(p); };
    const double b = bounds::evaluate(*qtree, nq, *combined, value);
    const double b1 = bounds::evaluate(*qtree, nq, *only_b1, value);
    const double b2 = bounds::evaluate(*qtree, nq, *only_b2, value);
    if (!(b <= b1 && b <= b2)) *ok = false;
    if (b > (*last_bound)[nq.id]) *ok = false;  // must never grow
    (*last_bound)[nq.id] = b;
    return hint < b ? ScoreDecision::go(hint) : ScoreDecision::prune();
  }
  double base_case(std::uint32_t pq, std::uint32_t pr) {
    const double d = distance(qdata->row(pq), rdata->row(pr));
    results->insert(pq, pr, d);
    return d;
  }
};

}  // namespace

TEST_CASE("combined bound dominates B1 and B2 and never grows") {
  const Dataset q = generate_uniform(120, 2, 81);
  const Dataset r = generate_uniform(100, 2, 82);
  for (const TreeKind kind : {TreeKind::kKdTree, TreeKind::kCoverTree}) {
    const Tree qt = kind == TreeKind::kKdTree ? build_kd_tree(q, 3) : build_cover_tree(q);
    const Tree rt = kind == TreeKind::kKdTree ? build_kd_tree(r, 3) : build_cover_tree(r);
    NeighborResults res(NeighborMode::kNearest, q.size(), 2);
    auto c0 = bounds::make_bound_caches(qt, NeighborMode::kNearest, BoundMode::kCombined);
    auto c1 = bounds::make_bound_caches(qt, NeighborMode::kNearest, BoundMode::kB1);
    auto c2 = bounds::make_bound_caches(qt, NeighborMode::kNearest, BoundMode::kB2);
    std::vector<double> last(qt.nodes.size(), kInf);
    bool ok = true;
    DominanceProbe probe{&q, &r, &qt, &res, &c0, &c1, &c2, &last, &ok};
    dual_depth_first(qt, rt, probe);
    CHECK(ok);
    check_same_distances(res, brute_knn(q, r, NeighborMode::kNearest, 2, false));
  }
}

TEST_CASE("parent bounds dominate child bounds after a full pass") {
  const Dataset q = generate_uniform(64, 2, 91);
  const Dataset r = generate_uniform(64, 2, 92);
  for (const TreeKind kind : {TreeKind::kKdTree, TreeKind::kCoverTree}) {
    const Tree qt = kind == TreeKind::kKdTree ? build_kd_tree(q, 4) : build_cover_tree(q);
    const NeighborResults res = brute_knn(q, r, NeighborMode::kNearest, 2, false);
    std::vector<double> cache_b1_vals(qt.nodes.size(), kInf);
    std::vector<double> cache_b2_vals(qt.nodes.size(), kInf);
    for (std::size_t i = qt.nodes.size(); i-- > 0;) {
      cache_b1_vals[i] = bound_b1(qt, qt.nodes[i], res, cache_b1_vals);
      cache_b2_vals[i] = bound_b2(qt, qt.nodes[i], res, cache_b2_vals);
    }
    for (const TreeNode& n : qt.nodes) {
      for (const std::uint32_t c : n.children) {
        CHECK(cache_b1_vals[n.id] >= cache_b1_vals[c]);
        CHECK(cache_b2_vals[n.id] >= cache_b2_vals[c]);
      }
    }
  }
}

TEST_CASE("brute-force oracle basics") {
  const Dataset q(1, 2, {0.0, 0.0});
  const Dataset r(2, 2, {1.0, 0.0, 3.0, 0.0});
  const NeighborResults nn = brute_knn(q, r, NeighborMode::kNearest, 1, false);
  CHECK(nn.dist(0, 0) == 1.0);
  const NeighborResults fn = brute_knn(q, r, NeighborMode::kFurthest, 1, false);
  CHECK(fn.neighbor(0, 0) == 1);
  CHECK(fn.dist(0, 0) == 3.0);
}
