#include <cmath>

#include "doctest.h"
#include "dualtree/datagen.hpp"
#include "dualtree/kde.hpp"
#include "dualtree/oracle.hpp"

using namespace dualtree;

namespace {

double max_abs_error(const std::vector<double>& got, const std::vector<double>& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("kernel evaluation and monotonicity") {
  const Kernel gauss(KernelType::kGaussian, 1.0);
  CHECK(gauss(0.0) == 1.0);
  CHECK(gauss(1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

  const Kernel epan(KernelType::kEpanechnikov, 1.0);
  CHECK(epan(0.0) == 1.0);
  CHECK(epan(2.0) == 0.0);  // compact support

  for (const Kernel& k : {gauss, epan, Kernel(KernelType::kGaussian, 0.3)}) {
    double prev = k(0.0);
    for (double d = 0.05; d < 4.0; d += 0.05) {
      const double cur = k(d);
      CHECK(cur <= prev);
      prev = cur;
    }
  }
  CHECK_THROWS_AS(Kernel(KernelType::kGaussian, 0.0), std::invalid_argument);
}

TEST_CASE("kernel bound over node pairs") {
  const Dataset a(1, 1, {0.0});
  const Dataset b(1, 1, {1.5});
  const Tree ta = make_point_tree(a, 0, TreeKind::kKdTree);
  const Tree tb = make_point_tree(b, 0, TreeKind::kKdTree);
  const Kernel gauss(KernelType::kGaussian, 1.0);
  CHECK(kernel_bound(ta.root(), tb.root(), gauss) == 0.0);  // d_min == d_max

  // Wide reference node: variation approaches K(d_min) - K(d_max).
  const Dataset wide(2, 1, {1.0, 1e9});
  const Tree tw = build_kd_tree(wide, 2);
  const double bk = kernel_bound(ta.root(), tw.root(), gauss);
  CHECK(bk == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  const Dataset pair(2, 1, {1.0, 2.0});
  const Tree tp = build_kd_tree(pair, 2);
  CHECK(kernel_bound(ta.root(), tp.root(), gauss) ==
        doctest::Approx(std::exp(-0.5) - std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("kde base case accumulates kernel values once") {
  const Dataset q(1, 1, {0.0});
  const Dataset r(2, 1, {0.0, 2.0});
  DensityAccumulator acc(1, 0.0, 2);
  const Tree qt = make_point_tree(q, 0, TreeKind::kKdTree);
  const Tree rt = build_kd_tree(r, 2);
  KdeRule rule{&q, &r, &qt, &rt, Kernel(KernelType::kEpanechnikov, 1.0), &acc};
  CHECK(rule.base_case(0, 0) == 0.0);
  CHECK(rule.base_case(0, 1) == 2.0);  // outside support: contributes nothing
  CHECK(acc.finalize()[0] == 1.0);
}

TEST_CASE("score approximates and prunes tight pairs") {
  const Dataset q(1, 1, {0.0});
  const Dataset r(1, 1, {3.0});
  const Tree qt = make_point_tree(q, 0, TreeKind::kKdTree);
  const Tree rt = make_point_tree(r, 0, TreeKind::kKdTree);
  const Kernel gauss(KernelType::kGaussian, 1.0);

  // Two single-point nodes have zero kernel variation, so any positive
  // epsilon approximates exactly and prunes.
  DensityAccumulator acc(1, 0.5, 1);
  KdeRule rule{&q, &r, &qt, &rt, gauss, &acc};
  const double hint = rule.priority(qt.root(), rt.root());
  CHECK(rule.score(qt.root(), rt.root(), PairFlags{}, hint).pruned);
  CHECK(acc.finalize()[0] == gauss(3.0));

  // Epsilon zero never approximates.
  DensityAccumulator exact(1, 0.0, 1);
  KdeRule strict{&q, &r, &qt, &rt, gauss, &exact};
  CHECK_FALSE(strict.score(qt.root(), rt.root(), PairFlags{}, hint).pruned);
}

TEST_CASE("single reference at the query point") {
  const Dataset p(1, 2, {0.3, 0.7});
  KdeConfig cfg;
  const auto f = kde(p, p, Kernel(KernelType::kGaussian, 0.5), 0.1, cfg);
  CHECK(f[0] == 1.0);
}

TEST_CASE("exact mode matches the brute sum") {
  const Dataset q = generate_uniform(60, 2, 401);
  const Dataset r = generate_uniform(70, 2, 402);
  const Kernel kernel(KernelType::kGaussian, 0.4);
  const auto exact = brute_kde(q, r, kernel);
  for (const TreeKind kind : {TreeKind::kKdTree, TreeKind::kCoverTree}) {
    for (const TraversalKind trav :
         {TraversalKind::kDualDepthFirst, TraversalKind::kDualBreadthFirst,
          TraversalKind::kSingleTree}) {
      KdeConfig cfg;
      cfg.tree = kind;
      cfg.traversal = trav;
      cfg.leaf_size = 4;
      const auto f = kde(q, r, kernel, 0.0, cfg);
      for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(f[i] == doctest::Approx(exact[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("approximation stays inside the error budget") {
  const Dataset q = generate_uniform(90, 2, 411);
  const Dataset r = generate_uniform(100, 2, 412);
  for (const KernelType type : {KernelType::kGaussian, KernelType::kEpanechnikov}) {
    for (const double h : {0.1, 0.5}) {
      const Kernel kernel(type, h);
      const auto exact = brute_kde(q, r, kernel);
      for (const double eps : {0.1, 0.01, 0.001}) {
        for (const TreeKind kind : {TreeKind::kKdTree, TreeKind::kCoverTree}) {
          KdeConfig cfg;
          cfg.tree = kind;
          cfg.leaf_size = 4;
          const auto f = kde(q, r, kernel, eps, cfg);
          CHECK(max_abs_error(f, exact) <= eps);
        }
      }
    }
  }
}

TEST_CASE("clustered data prunes while holding the bound") {
  const Dataset q = generate_clusters(120, 2, 421);
  const Dataset r = generate_clusters(120, 2, 422);
  const Kernel kernel(KernelType::kGaussian, 0.05);
  TraversalStats stats;
  KdeConfig cfg;
  const auto f = kde(q, r, kernel, 0.05, cfg, &stats);
  CHECK(stats.prunes > 0);
  CHECK(max_abs_error(f, brute_kde(q, r, kernel)) <= 0.05);
}

TEST_CASE("every pruned pair honors the per-reference error bound") {
  const Dataset q = generate_uniform(40, 2, 431);
  const Dataset r = generate_uniform(45, 2, 432);
  const Kernel kernel(KernelType::kGaussian, 0.3);
  const double eps = 0.05;
  for (const TreeKind kind : {TreeKind::kKdTree, TreeKind::kCoverTree}) {
    const Tree qt = kind == TreeKind::kKdTree ? build_kd_tree(q, 3) : build_cover_tree(q);
    const Tree rt = kind == TreeKind::kKdTree ? build_kd_tree(r, 3) : build_cover_tree(r);
    DensityAccumulator acc(q.size(), eps, r.size());
    bool ok = true;
    std::size_t approximations = 0;
    const std::function<void(const TreeNode&, const TreeNode&)> hook =
        [&](const TreeNode& nq, const TreeNode& nr) {
          ++approximations;
          const double bk = kernel_bound(nq, nr, kernel);
          if (!(bk < acc.threshold())) ok = false;
          // Replaying the approximated contribution against the exact one:
          // every covered pair errs by at most bk.
          qt.for_each_descendant_point(nq, [&](std::uint32_t pq) {
            rt.for_each_descendant_point(nr, [&](std::uint32_t pr) {
              const double approx = kernel(distance(q.row(pq), nr.centroid));
              const double exact = kernel(distance(q.row(pq), r.row(pr)));
              if (std::abs(approx - exact) > bk + 1e-12) ok = false;
            });
          });
        };
    KdeRule rule{&q, &r, &qt, &rt, kernel, &acc, &hook};
    dual_depth_first(qt, rt, rule);
    CHECK(approximations > 0);
    CHECK(ok);
    CHECK(max_abs_error(acc.finalize(), brute_kde(q, r, kernel)) <= eps);
  }
}

TEST_CASE("tightening epsilon never reduces the work done") {
  const Dataset q = generate_uniform(64, 2, 441);
  const Dataset r = generate_uniform(64, 2, 442);
  const Kernel kernel(KernelType::kGaussian, 0.2);
  std::uint64_t prev = 0;
  for (const double eps : {0.1, 0.01, 0.001, 0.0}) {
    TraversalStats stats;
    KdeConfig cfg;
    (void)kde(q, r, kernel, eps, cfg, &stats);
    CHECK(stats.base_cases >= prev);
    prev = stats.base_cases;
  }
}

TEST_CASE("normalized densities integrate sensibly") {
  // A dense uniform sample in the unit square: the normalized estimate near
  // the center should be within a factor of two of the true density 1.
  const Dataset r = generate_uniform(400, 2, 451);
  const Dataset q(1, 2, {0.5, 0.5});
  KdeConfig cfg;
  cfg.normalize = true;
  const auto f = kde(q, r, Kernel(KernelType::kGaussian, 0.1), 0.0, cfg);
  CHECK(f[0] > 0.5);
  CHECK(f[0] < 2.0);
}
