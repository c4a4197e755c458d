#include "dualtree/traversal.hpp"

namespace dualtree {

std::vector<std::uint32_t> query_partition_roots(const Tree& qt, std::size_t target) {
  std::vector<std::uint32_t> frontier{qt.root_id};
  while (frontier.size() < target) {
    std::vector<std::uint32_t> next;
    bool grew = false;
    for (std::uint32_t id : frontier) {
      const TreeNode& n = qt.node(id);
      if (n.is_leaf()) {
        next.push_back(id);
      } else {
        next.insert(next.end(), n.children.begin(), n.children.end());
        grew = true;
      }
    }
    if (!grew) break;
    frontier = std::move(next);
  }
  return frontier;
}

}  // namespace dualtree
