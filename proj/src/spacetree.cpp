#include "dualtree/spacetree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace dualtree {

namespace {

// Sentinel scale for the node gathering exact-duplicate leaves. Deep enough
// that its radius underflows to zero.
constexpr int kDuplicateScale = -1100;

double ball_radius(int scale, double base) {
  if (scale == kLeafScale) return 0.0;
  if (base == 2.0) return std::ldexp(1.0, scale + 1);
  // base^scale * base/(base-1), rounded up a couple of ulps so the enclosing
  // region stays conservative under pow() rounding.
  double r = std::pow(base, scale) * base / (base - 1.0);
  r = std::nextafter(std::nextafter(r, 1e308), 1e308);
  return r;
}

double cover_threshold(int level, double base) {
  if (base == 2.0) return std::ldexp(1.0, level);
  return std::pow(base, level);
}

struct KdBuilder {
  const Dataset& data;
  std::uint32_t leaf_size;
  Tree tree;

  std::uint32_t build(std::uint32_t lo, std::uint32_t hi, std::uint32_t parent) {
    const std::uint32_t id = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::size_t dim = data.dim();

    HyperRect rect;
    rect.lo.assign(dim, std::numeric_limits<double>::infinity());
    rect.hi.assign(dim, -std::numeric_limits<double>::infinity());
    std::vector<double> mean(dim, 0.0);
    for (std::uint32_t i = lo; i < hi; ++i) {
      const auto p = data.row(tree.point_order[i]);
      for (std::size_t d = 0; d < dim; ++d) {
        rect.lo[d] = std::min(rect.lo[d], p[d]);
        rect.hi[d] = std::max(rect.hi[d], p[d]);
        mean[d] += p[d];
      }
    }
    for (double& v : mean) v /= static_cast<double>(hi - lo);

    double lambda = 0.0;
    for (std::uint32_t i = lo; i < hi; ++i) {
      lambda = std::max(lambda, distance(mean, data.row(tree.point_order[i])));
    }

    std::vector<std::uint32_t> children;
    std::vector<std::uint32_t> held;
    double rho = 0.0;
    if (hi - lo <= leaf_size) {
      held.assign(tree.point_order.begin() + lo, tree.point_order.begin() + hi);
      rho = lambda;
    } else {
      std::size_t axis = 0;
      double widest = -1.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double extent = rect.hi[d] - rect.lo[d];
        if (extent > widest) {
          widest = extent;
          axis = d;
        }
      }
      const double split = (rect.lo[axis] + rect.hi[axis]) / 2.0;
      auto begin = tree.point_order.begin() + lo;
      auto end = tree.point_order.begin() + hi;
      auto mid = std::stable_partition(begin, end, [&](std::uint32_t p) {
        return data.row(p)[axis] < split;
      });
      if (mid == begin || mid == end) {
        // Degenerate midpoint; fall back to a median split by (coord, index).
        std::sort(begin, end, [&](std::uint32_t a, std::uint32_t b) {
          const double ca = data.row(a)[axis], cb = data.row(b)[axis];
          return ca != cb ? ca < cb : a < b;
        });
        mid = begin + (hi - lo) / 2;
      }
      const auto cut = static_cast<std::uint32_t>(mid - tree.point_order.begin());
      children.push_back(build(lo, cut, id));
      children.push_back(build(cut, hi, id));
    }

    TreeNode& n = tree.nodes[id];
    n.id = id;
    n.parent = parent;
    n.children = std::move(children);
    n.held = std::move(held);
    n.region = std::move(rect);
    n.centroid = std::move(mean);
    n.lambda = lambda;
    n.rho = rho;
    n.desc_begin = lo;
    n.desc_end = hi;
    n.self_owned = true;
    n.descendant_count = hi - lo;
    return id;
  }
};

struct CoverBuilder {
  const Dataset& data;
  double base;
  Tree tree;

  CoverBuilder(const Dataset& d, double b) : data(d), base(b) {}

  // Per net point: event levels (descending) and the children joining there.
  std::map<std::uint32_t, std::map<int, std::vector<std::uint32_t>, std::greater<>>> events;
  std::map<std::uint32_t, std::vector<std::uint32_t>> duplicates;
  std::vector<bool> top_emitted;

  double dist(std::uint32_t a, std::uint32_t b) const {
    return distance(data.row(a), data.row(b));
  }

  // Largest integer l with base^l < x, for x > 0.
  int level_below(double x) const {
    int l = static_cast<int>(std::floor(std::log(x) / std::log(base))) + 2;
    while (cover_threshold(l, base) >= x) --l;
    return l;
  }

  void assign_structure() {
    const std::uint32_t n = static_cast<std::uint32_t>(data.size());
    std::vector<std::uint32_t> net{0};
    std::vector<std::uint32_t> unjoined;
    std::vector<double> mind(n, 0.0);
    for (std::uint32_t i = 1; i < n; ++i) {
      unjoined.push_back(i);
      mind[i] = dist(0, i);
    }

    while (true) {
      double far = 0.0;
      for (std::uint32_t i : unjoined) far = std::max(far, mind[i]);
      if (far == 0.0) break;  // only exact duplicates remain
      const int level = level_below(far);
      const double threshold = cover_threshold(level, base);
      const std::size_t snapshot = net.size();
      std::vector<std::uint32_t> still;
      still.reserve(unjoined.size());
      for (std::uint32_t i : unjoined) {
        if (!(mind[i] > threshold)) {
          still.push_back(i);
          continue;
        }
        // Parent: nearest member of the net as of the previous level.
        std::uint32_t parent = net[0];
        double best = dist(net[0], i);
        for (std::size_t j = 1; j < snapshot; ++j) {
          const double d = dist(net[j], i);
          if (d < best || (d == best && net[j] < parent)) {
            best = d;
            parent = net[j];
          }
        }
        events[parent][level + 1].push_back(i);
        net.push_back(i);
        for (std::uint32_t u : unjoined) {
          if (u != i) mind[u] = std::min(mind[u], dist(i, u));
        }
      }
      unjoined.swap(still);
    }

    for (std::uint32_t i : unjoined) {
      // mind[i] == 0: attach under the net point with identical coordinates.
      std::uint32_t host = 0;
      for (std::uint32_t m : net) {
        if (dist(m, i) == 0.0) {
          host = m;
          break;
        }
      }
      duplicates[host].push_back(i);
    }
  }

  std::uint32_t make_node(std::uint32_t point, int scale, std::uint32_t parent) {
    const std::uint32_t id = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& n = tree.nodes.back();
    n.id = id;
    n.parent = parent;
    n.held = {point};
    const auto row = data.row(point);
    n.centroid.assign(row.begin(), row.end());
    n.region = Ball{scale, ball_radius(scale, base)};
    n.lambda = ball_radius(scale, base);
    n.rho = 0.0;
    n.self_owned = !top_emitted[point];
    top_emitted[point] = true;
    n.desc_begin = static_cast<std::uint32_t>(tree.point_order.size());
    if (n.self_owned) tree.point_order.push_back(point);
    return id;
  }

  void finish_node(std::uint32_t id) {
    TreeNode& n = tree.nodes[id];
    n.desc_end = static_cast<std::uint32_t>(tree.point_order.size());
    n.descendant_count = n.desc_end - n.desc_begin + (n.self_owned ? 0 : 1);
  }

  // Chain node for `point` at position `k` of its event-level list.
  std::uint32_t build_chain(std::uint32_t point, std::size_t k, std::uint32_t parent) {
    const auto ev = events.find(point);
    const std::size_t n_events = ev == events.end() ? 0 : ev->second.size();
    const auto dup = duplicates.find(point);

    std::uint32_t id;
    if (k < n_events) {
      auto it = ev->second.begin();
      std::advance(it, k);
      id = make_node(point, it->first, parent);
      const std::uint32_t self = build_chain(point, k + 1, id);
      tree.nodes[id].children.push_back(self);
      for (std::uint32_t child : it->second) {
        const std::uint32_t top = build_chain(child, 0, id);  // may reallocate nodes
        tree.nodes[id].children.push_back(top);
      }
    } else if (dup != duplicates.end() && k == n_events) {
      id = make_node(point, kDuplicateScale, parent);
      const std::uint32_t self = build_chain(point, k + 1, id);
      tree.nodes[id].children.push_back(self);
      for (std::uint32_t d : dup->second) {
        const std::uint32_t leaf = make_node(d, kLeafScale, id);
        finish_node(leaf);
        tree.nodes[id].children.push_back(leaf);
      }
    } else {
      id = make_node(point, kLeafScale, parent);
    }
    finish_node(id);
    return id;
  }

  Tree build() {
    tree.kind = TreeKind::kCoverTree;
    tree.data = &data;
    tree.cover_base = base;
    top_emitted.assign(data.size(), false);
    assign_structure();
    tree.root_id = build_chain(0, 0, kNoParent);
    return std::move(tree);
  }
};

double rect_min_distance(const HyperRect& a, const HyperRect& b) {
  double sq = 0.0;
  for (std::size_t d = 0; d < a.lo.size(); ++d) {
    const double gap = std::max({0.0, a.lo[d] - b.hi[d], b.lo[d] - a.hi[d]});
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

double rect_max_distance(const HyperRect& a, const HyperRect& b) {
  double sq = 0.0;
  for (std::size_t d = 0; d < a.lo.size(); ++d) {
    const double gap = std::max(a.hi[d] - b.lo[d], b.hi[d] - a.lo[d]);
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

}  // namespace

std::vector<std::uint32_t> Tree::descendant_points(const TreeNode& n) const {
  std::vector<std::uint32_t> out;
  out.reserve(n.descendant_count);
  for_each_descendant_point(n, [&](std::uint32_t p) { out.push_back(p); });
  return out;
}

Tree build_kd_tree(const Dataset& data, std::uint32_t leaf_size) {
  if (leaf_size < 1) {
    throw std::invalid_argument("build_kd_tree: leaf_size must be at least 1");
  }
  KdBuilder builder{data, leaf_size, {}};
  builder.tree.kind = TreeKind::kKdTree;
  builder.tree.data = &data;
  builder.tree.point_order.resize(data.size());
  std::iota(builder.tree.point_order.begin(), builder.tree.point_order.end(), 0);
  builder.tree.root_id =
      builder.build(0, static_cast<std::uint32_t>(data.size()), kNoParent);
  return std::move(builder.tree);
}

Tree build_cover_tree(const Dataset& data, double base) {
  if (!(base > 1.0)) {
    throw std::invalid_argument("build_cover_tree: base must exceed 1");
  }
  CoverBuilder builder(data, base);
  return builder.build();
}

double min_node_distance(const TreeNode& a, const TreeNode& b) {
  if (a.region.index() != b.region.index()) {
    throw std::invalid_argument("node distance: mixed region kinds");
  }
  if (const auto* ra = std::get_if<HyperRect>(&a.region)) {
    return rect_min_distance(*ra, std::get<HyperRect>(b.region));
  }
  const auto& ba = std::get<Ball>(a.region);
  const auto& bb = std::get<Ball>(b.region);
  const double d = distance(a.centroid, b.centroid);
  return std::max(0.0, d - ba.radius - bb.radius);
}

double max_node_distance(const TreeNode& a, const TreeNode& b) {
  if (a.region.index() != b.region.index()) {
    throw std::invalid_argument("node distance: mixed region kinds");
  }
  if (const auto* ra = std::get_if<HyperRect>(&a.region)) {
    return rect_max_distance(*ra, std::get<HyperRect>(b.region));
  }
  const auto& ba = std::get<Ball>(a.region);
  const auto& bb = std::get<Ball>(b.region);
  return distance(a.centroid, b.centroid) + ba.radius + bb.radius;
}

double node_lambda(const TreeNode& n) { return n.lambda; }
double node_rho(const TreeNode& n) { return n.rho; }

Tree make_point_tree(const Dataset& data, std::uint32_t point_index, TreeKind kind) {
  Tree t;
  t.kind = kind;
  t.data = &data;
  t.root_id = 0;
  t.point_order = {point_index};
  TreeNode n;
  n.id = 0;
  n.parent = kNoParent;
  n.held = {point_index};
  const auto row = data.row(point_index);
  n.centroid.assign(row.begin(), row.end());
  if (kind == TreeKind::kKdTree) {
    n.region = HyperRect{n.centroid, n.centroid};
  } else {
    n.region = Ball{kLeafScale, 0.0};
  }
  n.lambda = 0.0;
  n.rho = 0.0;
  n.desc_begin = 0;
  n.desc_end = 1;
  n.descendant_count = 1;
  t.nodes.push_back(std::move(n));
  return t;
}

namespace {

struct Validator {
  const Tree& tree;
  const Dataset& data;
  std::vector<std::string> violations;

  void fail(const std::string& msg) { violations.push_back(msg); }

  void check_graph() {
    std::size_t roots = 0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& n = tree.nodes[i];
      if (n.id != i) fail("node " + std::to_string(i) + ": id mismatch");
      if (n.parent == kNoParent) {
        ++roots;
        if (n.id != tree.root_id) fail("node " + std::to_string(i) + ": parentless but not root");
      } else {
        const auto& kids = tree.nodes[n.parent].children;
        if (std::find(kids.begin(), kids.end(), n.id) == kids.end()) {
          fail("node " + std::to_string(i) + ": missing from parent's child list");
        }
      }
      for (std::uint32_t c : n.children) {
        if (c >= tree.nodes.size() || tree.nodes[c].parent != n.id) {
          fail("node " + std::to_string(i) + ": inconsistent child link");
        }
      }
    }
    if (roots != 1) fail("tree has " + std::to_string(roots) + " roots, expected 1");

    // Reachability: every node exactly once from the root.
    std::vector<bool> seen(tree.nodes.size(), false);
    std::vector<std::uint32_t> stack{tree.root_id};
    std::size_t visited = 0;
    while (!stack.empty()) {
      const std::uint32_t id = stack.back();
      stack.pop_back();
      if (seen[id]) {
        fail("node " + std::to_string(id) + ": visited twice (cycle)");
        return;
      }
      seen[id] = true;
      ++visited;
      for (std::uint32_t c : tree.nodes[id].children) stack.push_back(c);
    }
    if (visited != tree.nodes.size()) fail("tree is not connected");
  }

  void check_coverage() {
    std::vector<std::size_t> held_count(data.size(), 0);
    for (const TreeNode& n : tree.nodes) {
      for (std::uint32_t p : n.held) {
        if (p >= data.size()) {
          fail("node " + std::to_string(n.id) + ": held point out of range");
          return;
        }
        ++held_count[p];
      }
      if (tree.kind == TreeKind::kKdTree && !n.is_leaf() && !n.held.empty()) {
        fail("node " + std::to_string(n.id) + ": kd internal node holds points");
      }
      if (tree.kind == TreeKind::kCoverTree && n.held.size() != 1) {
        fail("node " + std::to_string(n.id) + ": cover node must hold exactly one point");
      }
    }
    for (std::size_t p = 0; p < data.size(); ++p) {
      if (held_count[p] == 0) fail("point " + std::to_string(p) + " uncovered");
      if (tree.kind == TreeKind::kKdTree && held_count[p] > 1) {
        fail("point " + std::to_string(p) + " held by more than one kd leaf");
      }
    }
  }

  bool point_in_region(const TreeNode& n, std::span<const double> p) const {
    if (const auto* r = std::get_if<HyperRect>(&n.region)) {
      for (std::size_t d = 0; d < p.size(); ++d) {
        if (p[d] < r->lo[d] || p[d] > r->hi[d]) return false;
      }
      return true;
    }
    const auto& b = std::get<Ball>(n.region);
    return distance(n.centroid, p) <= b.radius;
  }

  bool region_in_region(const TreeNode& outer, const TreeNode& inner) const {
    if (const auto* ro = std::get_if<HyperRect>(&outer.region)) {
      const auto& ri = std::get<HyperRect>(inner.region);
      for (std::size_t d = 0; d < ro->lo.size(); ++d) {
        if (ri.lo[d] < ro->lo[d] || ri.hi[d] > ro->hi[d]) return false;
      }
      return true;
    }
    const auto& bo = std::get<Ball>(outer.region);
    const auto& bi = std::get<Ball>(inner.region);
    return distance(outer.centroid, inner.centroid) + bi.radius <= bo.radius;
  }

  void check_regions() {
    for (const TreeNode& n : tree.nodes) {
      for (std::uint32_t p : n.held) {
        if (!point_in_region(n, data.row(p))) {
          fail("node " + std::to_string(n.id) + ": held point " + std::to_string(p) +
               " outside region");
        }
      }
      for (std::uint32_t c : n.children) {
        if (!region_in_region(n, tree.nodes[c])) {
          fail("node " + std::to_string(n.id) + ": child " + std::to_string(c) +
               " region not contained");
        }
      }
    }
  }

  void check_bounds_and_counts() {
    for (const TreeNode& n : tree.nodes) {
      if (!(n.lambda >= n.rho) || n.rho < 0.0) {
        fail("node " + std::to_string(n.id) + ": lambda/rho ordering violated");
      }
      const auto desc = tree.descendant_points(n);
      std::set<std::uint32_t> desc_set(desc.begin(), desc.end());
      if (desc_set.size() != desc.size()) {
        fail("node " + std::to_string(n.id) + ": duplicate descendant points");
      }

      // Reference: union of held points over the subtree.
      std::set<std::uint32_t> brute;
      std::vector<std::uint32_t> stack{n.id};
      while (!stack.empty()) {
        const TreeNode& m = tree.nodes[stack.back()];
        stack.pop_back();
        brute.insert(m.held.begin(), m.held.end());
        for (std::uint32_t c : m.children) stack.push_back(c);
      }
      if (brute != desc_set) {
        fail("node " + std::to_string(n.id) + ": descendant point range mismatch");
      }
      if (n.descendant_count != brute.size()) {
        fail("node " + std::to_string(n.id) + ": descendant count mismatch");
      }

      double max_desc = 0.0;
      for (std::uint32_t p : brute) {
        max_desc = std::max(max_desc, distance(n.centroid, data.row(p)));
      }
      double max_held = 0.0;
      for (std::uint32_t p : n.held) {
        max_held = std::max(max_held, distance(n.centroid, data.row(p)));
      }
      if (tree.kind == TreeKind::kKdTree) {
        if (n.lambda != max_desc) {
          fail("node " + std::to_string(n.id) + ": lambda not exact");
        }
        if (n.rho != max_held) {
          fail("node " + std::to_string(n.id) + ": rho not exact");
        }
      } else {
        if (n.lambda < max_desc) {
          fail("node " + std::to_string(n.id) + ": lambda below true descendant distance");
        }
        if (n.rho != 0.0) {
          fail("node " + std::to_string(n.id) + ": cover rho must be zero");
        }
      }
    }
  }

  void check_cover_invariants() {
    for (const TreeNode& n : tree.nodes) {
      const int s = n.scale();
      if (!n.is_leaf()) {
        bool has_self = false;
        for (std::uint32_t c : n.children) {
          if (tree.nodes[c].held.front() == n.held.front()) has_self = true;
          const double d =
              distance(n.centroid, tree.nodes[c].centroid);
          if (s != kLeafScale && d > cover_threshold(s, tree.cover_base)) {
            fail("node " + std::to_string(n.id) + ": covering violated for child " +
                 std::to_string(c));
          }
        }
        if (!has_self) {
          fail("node " + std::to_string(n.id) + ": nesting violated (no self child)");
        }
        if (s == kLeafScale) {
          fail("node " + std::to_string(n.id) + ": non-leaf at sentinel scale");
        }
      }
    }
    // Separation among explicit nodes of equal scale.
    std::map<int, std::vector<const TreeNode*>> by_scale;
    for (const TreeNode& n : tree.nodes) {
      if (n.scale() != kLeafScale) by_scale[n.scale()].push_back(&n);
    }
    for (const auto& [s, group] : by_scale) {
      const double sep = cover_threshold(s, tree.cover_base);
      for (std::size_t i = 0; i < group.size(); ++i) {
        for (std::size_t j = i + 1; j < group.size(); ++j) {
          if (!(distance(group[i]->centroid, group[j]->centroid) > sep)) {
            fail("scale " + std::to_string(s) + ": separation violated between nodes " +
                 std::to_string(group[i]->id) + " and " + std::to_string(group[j]->id));
          }
        }
      }
    }
  }

  std::vector<std::string> run() {
    check_graph();
    if (!violations.empty()) return violations;  // later checks assume a tree
    check_coverage();
    check_regions();
    check_bounds_and_counts();
    if (tree.kind == TreeKind::kCoverTree) check_cover_invariants();
    return violations;
  }
};

}  // namespace

std::vector<std::string> validate_tree(const Tree& tree, const Dataset& data) {
  Validator v{tree, data, {}};
  return v.run();
}

std::string dump_tree(const Tree& tree) {
  std::ostringstream out;
  for (const TreeNode& n : tree.nodes) {
    out << n.id << " parent=";
    if (n.parent == kNoParent) {
      out << "-";
    } else {
      out << n.parent;
    }
    out << " held=[";
    for (std::size_t i = 0; i < n.held.size(); ++i) {
      if (i) out << ",";
      out << n.held[i];
    }
    out << "]";
    if (const auto* r = std::get_if<HyperRect>(&n.region)) {
      out << " rect lo=(";
      for (std::size_t d = 0; d < r->lo.size(); ++d) {
        if (d) out << ",";
        out << r->lo[d];
      }
      out << ") hi=(";
      for (std::size_t d = 0; d < r->hi.size(); ++d) {
        if (d) out << ",";
        out << r->hi[d];
      }
      out << ")";
    } else {
      const auto& b = std::get<Ball>(n.region);
      out << " ball scale=";
      if (b.scale == kLeafScale) {
        out << "leaf";
      } else {
        out << b.scale;
      }
      out << " radius=" << b.radius;
    }
    out << " lambda=" << n.lambda << " rho=" << n.rho << "\n";
  }
  return out.str();
}

}  // namespace dualtree
