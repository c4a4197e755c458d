#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "dualtree/core.hpp"

namespace dualtree {

enum class TreeKind : std::uint8_t { kKdTree, kCoverTree };

// True when the builder guarantees that each point is held by exactly one
// node on any root-to-leaf path, so a dual traversal presents each point
// pair at most once and base cases need no deduplication.
constexpr bool pairs_unique(TreeKind kind) { return kind == TreeKind::kKdTree; }

inline constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

// Scale of cover-tree leaves (conceptually negative infinity).
inline constexpr int kLeafScale = std::numeric_limits<int>::min();

struct HyperRect {
  std::vector<double> lo, hi;
};

// Cover-tree node region: ball around the node's point. The radius is
// base^(scale+1) for base 2 and base^scale * base/(base-1) in general, which
// is what actually encloses all descendants.
struct Ball {
  int scale = kLeafScale;
  double radius = 0.0;
};

using Region = std::variant<HyperRect, Ball>;

struct TreeNode {
  std::uint32_t id = 0;
  std::uint32_t parent = kNoParent;
  std::vector<std::uint32_t> children;
  std::vector<std::uint32_t> held;  // point indices held at this node
  Region region;
  std::vector<double> centroid;
  double lambda = 0.0;  // max distance centroid -> any descendant point
  double rho = 0.0;     // max distance centroid -> any held point
  // Descendant points owned by this subtree: Tree::point_order[desc_begin, desc_end).
  std::uint32_t desc_begin = 0;
  std::uint32_t desc_end = 0;
  // Cover trees repeat a point down a chain of nodes; true on the topmost
  // occurrence. Always true for kd-tree nodes.
  bool self_owned = true;
  std::uint32_t descendant_count = 0;

  bool is_leaf() const { return children.empty(); }
  int scale() const { return std::get<Ball>(region).scale; }
};

class Tree {
 public:
  TreeKind kind = TreeKind::kKdTree;
  const Dataset* data = nullptr;  // not owned; must outlive the tree
  double cover_base = 2.0;
  std::uint32_t root_id = 0;
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> point_order;

  const TreeNode& root() const { return nodes[root_id]; }
  const TreeNode& node(std::uint32_t id) const { return nodes[id]; }
  bool pairs_unique() const { return dualtree::pairs_unique(kind); }

  // Distinct points below `n`, including its own held points.
  std::vector<std::uint32_t> descendant_points(const TreeNode& n) const;

  template <typename F>
  void for_each_descendant_point(const TreeNode& n, F&& fn) const {
    for (std::uint32_t i = n.desc_begin; i < n.desc_end; ++i) {
      fn(point_order[i]);
    }
    if (kind == TreeKind::kCoverTree && !n.self_owned) {
      fn(n.held.front());
    }
  }
};

// Widest-dimension midpoint splits with a median fallback; points live only
// in leaves and regions are tightened to the bounding box of descendants.
Tree build_kd_tree(const Dataset& data, std::uint32_t leaf_size = 20);

// Hierarchical greedy net construction; satisfies nesting, covering, and
// per-scale separation. Duplicate coordinates become leaves at the sentinel
// scale under their net point.
Tree build_cover_tree(const Dataset& data, double base = 2.0);

// Lower bound on the least distance between any two descendant points.
// Throws std::invalid_argument when the nodes' region kinds differ.
double min_node_distance(const TreeNode& a, const TreeNode& b);

// Upper bound on the greatest distance between any two descendant points.
double max_node_distance(const TreeNode& a, const TreeNode& b);

double node_lambda(const TreeNode& n);
double node_rho(const TreeNode& n);

// Structural checks; every violation becomes one description. Empty = valid.
std::vector<std::string> validate_tree(const Tree& tree, const Dataset& data);

// One-node tree holding a single point, used to drive single-tree traversals
// through the dual machinery. `kind` must match the reference tree.
Tree make_point_tree(const Dataset& data, std::uint32_t point_index, TreeKind kind);

// Debug dump, one line per node. Not a stable format.
std::string dump_tree(const Tree& tree);

}  // namespace dualtree
