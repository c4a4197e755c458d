#include "dualtree/kde.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace dualtree {

Kernel::Kernel(KernelType type, double bandwidth) : type_(type), bandwidth_(bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("kernel bandwidth must be positive");
  }
}

double Kernel::normalizer(std::size_t dim) const {
  const double d = static_cast<double>(dim);
  if (type_ == KernelType::kGaussian) {
    return std::pow(2.0 * std::numbers::pi * bandwidth_ * bandwidth_, d / 2.0);
  }
  // Epanechnikov: volume of the unit d-ball times 2/(d+2), scaled by h^d.
  const double unit_ball = std::pow(std::numbers::pi, d / 2.0) /
                           std::tgamma(d / 2.0 + 1.0);
  return std::pow(bandwidth_, d) * unit_ball * 2.0 / (d + 2.0);
}

double kernel_bound(const TreeNode& nq, const TreeNode& nr, const Kernel& kernel) {
  const double lo = kernel(min_node_distance(nq, nr));
  const double hi = kernel(max_node_distance(nq, nr));
  return std::max(0.0, lo - hi);
}

DensityAccumulator::DensityAccumulator(std::size_t n_queries, double epsilon,
                                       std::size_t ref_count)
    : contributions_(n_queries), epsilon_(epsilon), ref_count_(ref_count) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
  threshold_ = epsilon / static_cast<double>(ref_count);
}

std::vector<double> DensityAccumulator::finalize() const {
  std::vector<double> densities(contributions_.size(), 0.0);
  for (std::size_t q = 0; q < contributions_.size(); ++q) {
    std::vector<double> terms = contributions_[q];
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    densities[q] = sum;
  }
  return densities;
}

std::vector<double> kde(const Dataset& query, const Dataset& reference,
                        const Kernel& kernel, double epsilon, const KdeConfig& config,
                        TraversalStats* stats,
                        const std::function<void(const TreeNode&, const TreeNode&)>*
                            on_approximate) {
  if (query.dim() != reference.dim()) {
    throw std::invalid_argument("kde: dimension mismatch");
  }
  const Tree ref_tree = config.tree == TreeKind::kKdTree
                            ? build_kd_tree(reference, config.leaf_size)
                            : build_cover_tree(reference, config.cover_base);
  DensityAccumulator acc(query.size(), epsilon, reference.size());
  TraversalStats total;

  if (config.traversal == TraversalKind::kSingleTree) {
    for (std::uint32_t qi = 0; qi < query.size(); ++qi) {
      const Tree point_tree = make_point_tree(query, qi, config.tree);
      KdeRule rule{&query, &reference, &point_tree, &ref_tree,
                   kernel, &acc,       on_approximate};
      total += single_tree(point_tree, ref_tree, rule);
    }
  } else {
    const Tree query_tree = config.tree == TreeKind::kKdTree
                                ? build_kd_tree(query, config.leaf_size)
                                : build_cover_tree(query, config.cover_base);
    KdeRule rule{&query, &reference, &query_tree, &ref_tree,
                 kernel, &acc,       on_approximate};
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

  std::vector<double> densities = acc.finalize();
  if (config.normalize) {
    const double scale =
        static_cast<double>(reference.size()) * kernel.normalizer(reference.dim());
    for (double& f : densities) f /= scale;
  }
  if (stats) *stats = total;
  return densities;
}

}  // namespace dualtree
