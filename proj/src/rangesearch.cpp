#include "dualtree/rangesearch.hpp"

#include <stdexcept>

namespace dualtree {

RangeResults range_search(const Dataset& query, const Dataset& reference,
                          const RangeSpec& spec, const RangeSearchConfig& config,
                          TraversalStats* stats) {
  if (!(spec.delta1 >= 0.0) || !(spec.delta2 >= spec.delta1)) {
    throw std::invalid_argument("range_search: need 0 <= delta1 <= delta2");
  }
  if (query.dim() != reference.dim()) {
    throw std::invalid_argument("range_search: dimension mismatch");
  }

  const Tree ref_tree = config.tree == TreeKind::kKdTree
                            ? build_kd_tree(reference, config.leaf_size)
                            : build_cover_tree(reference, config.cover_base);
  RangeResults results(query.size());
  TraversalStats total;

  if (config.traversal == TraversalKind::kSingleTree) {
    for (std::uint32_t qi = 0; qi < query.size(); ++qi) {
      const Tree point_tree = make_point_tree(query, qi, config.tree);
      RangeRule rule{&query, &reference, spec, &results, config.unsafe_min_only};
      total += single_tree(point_tree, ref_tree, rule);
    }
  } else {
    const Tree query_tree = config.tree == TreeKind::kKdTree
                                ? build_kd_tree(query, config.leaf_size)
                                : build_cover_tree(query, config.cover_base);
    RangeRule rule{&query, &reference, spec, &results, config.unsafe_min_only};
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
