#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "dualtree/core.hpp"
#include "dualtree/traversal.hpp"

namespace dualtree {

enum class KernelType : std::uint8_t { kGaussian, kEpanechnikov };

// Non-increasing kernel of distance; unnormalized, K(0) = 1.
class Kernel {
 public:
  Kernel(KernelType type, double bandwidth);

  double operator()(double d) const {
    const double z = d / bandwidth_;
    if (type_ == KernelType::kGaussian) return std::exp(-0.5 * z * z);
    return std::max(0.0, 1.0 - z * z);
  }

  KernelType type() const { return type_; }
  double bandwidth() const { return bandwidth_; }

  // Integral of the kernel over R^dim, for optional density normalization.
  double normalizer(std::size_t dim) const;

 private:
  KernelType type_;
  double bandwidth_;
};

// Kernel value variation over a node pair: K(d_min) - K(d_max), floored at
// zero against rounding.
double kernel_bound(const TreeNode& nq, const TreeNode& nr, const Kernel& kernel);

// Per-query kernel-sum accumulators. Contributions are buffered and summed in
// sorted order at the end, so a density does not depend on the traversal or
// on the parallel partitioning that produced its terms.
class DensityAccumulator {
 public:
  DensityAccumulator(std::size_t n_queries, double epsilon, std::size_t ref_count);

  void add(std::uint32_t q, double value) { contributions_[q].push_back(value); }
  std::vector<double> finalize() const;

  double epsilon() const { return epsilon_; }
  std::size_t ref_count() const { return ref_count_; }
  double threshold() const { return threshold_; }

 private:
  std::vector<std::vector<double>> contributions_;
  double epsilon_;
  std::size_t ref_count_;
  double threshold_;
};

struct KdeRule {
  static constexpr bool kPartitionable = true;

  const Dataset* qdata = nullptr;
  const Dataset* rdata = nullptr;
  const Tree* qtree = nullptr;
  const Tree* rtree = nullptr;
  Kernel kernel{KernelType::kGaussian, 1.0};
  DensityAccumulator* acc = nullptr;
  // Test hook, called on every approximating prune.
  const std::function<void(const TreeNode&, const TreeNode&)>* on_approximate = nullptr;

  double priority(const TreeNode& q, const TreeNode& r) const {
    return min_node_distance(q, r);
  }

  ScoreDecision score(const TreeNode& nq, const TreeNode& nr, PairFlags flags,
                      double hint) {
    const double bk = kernel_bound(nq, nr, kernel);
    if (bk < acc->threshold()) {
      // Close enough in kernel value: credit every pending pair under this
      // combination against the reference centroid, then prune. When both
      // nodes repeat their points from the parent combination, the pair of
      // held points was already counted by an earlier base case, so that one
      // reference is excluded for that one query.
      const double refs = static_cast<double>(nr.descendant_count);
      const bool held_pair_done = flags.query_repeat && flags.ref_repeat;
      qtree->for_each_descendant_point(nq, [&](std::uint32_t p) {
        double count = refs;
        if (held_pair_done && p == nq.held.front()) count -= 1.0;
        if (count <= 0.0) return;
        const double value = kernel(distance(qdata->row(p), nr.centroid));
        if (value > 0.0) acc->add(p, count * value);
      });
      if (on_approximate && *on_approximate) (*on_approximate)(nq, nr);
      return ScoreDecision::prune();
    }
    return ScoreDecision::go(hint);
  }

  double base_case(std::uint32_t pq, std::uint32_t pr) {
    const double d = distance(qdata->row(pq), rdata->row(pr));
    const double value = kernel(d);
    if (value > 0.0) acc->add(pq, value);
    return d;
  }
};

struct KdeConfig {
  TreeKind tree = TreeKind::kKdTree;
  TraversalKind traversal = TraversalKind::kDualDepthFirst;
  std::uint32_t leaf_size = 20;
  double cover_base = 2.0;
  int workers = 1;
  bool normalize = false;
};

// Kernel densities with per-query absolute error at most epsilon against the
// exact kernel sum (epsilon = 0 disables approximation entirely).
std::vector<double> kde(const Dataset& query, const Dataset& reference,
                        const Kernel& kernel, double epsilon, const KdeConfig& config,
                        TraversalStats* stats = nullptr,
                        const std::function<void(const TreeNode&, const TreeNode&)>*
                            on_approximate = nullptr);

}  // namespace dualtree
