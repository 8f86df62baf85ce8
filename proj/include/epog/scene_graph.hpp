#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace epog {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Unique identifier of a node within one graph.
struct NodeId {
  std::string value;

  NodeId() = default;
  explicit NodeId(std::string v) : value(std::move(v)) {}

  auto operator<=>(const NodeId&) const = default;
  bool empty() const { return value.empty(); }
};

inline std::ostream& operator<<(std::ostream& os, const NodeId& id) {
  return os << id.value;
}

enum class NodeLevel { House, Room, Receptacle, Object };

inline const char* to_string(NodeLevel level) {
  switch (level) {
    case NodeLevel::House: return "house";
    case NodeLevel::Room: return "room";
    case NodeLevel::Receptacle: return "receptacle";
    case NodeLevel::Object: return "object";
  }
  return "?";
}

enum class SupportRelation { On, Contain };

inline const char* to_string(SupportRelation rel) {
  return rel == SupportRelation::On ? "on" : "contain";
}

enum class ContainerState { Opened, Closed };

inline const char* to_string(ContainerState s) {
  return s == ContainerState::Opened ? "opened" : "closed";
}

// Axis-aligned box, center + full extent, meters.
struct Aabb {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  std::array<double, 3> extent{0.0, 0.0, 0.0};

  bool operator==(const Aabb&) const = default;

  bool positive_extent() const {
    return extent[0] > 0.0 && extent[1] > 0.0 && extent[2] > 0.0;
  }
};

// Inert geometry metadata; carried through serialization, never interpreted.
struct GeometryPrimitive {
  std::string kind;
  std::vector<double> params;

  bool operator==(const GeometryPrimitive&) const = default;
};

struct SceneNode {
  NodeId id;
  std::string label;
  NodeLevel level = NodeLevel::Object;
  std::vector<GeometryPrimitive> geometry;
  Aabb bbox;

  bool operator==(const SceneNode&) const = default;
};

// Pose of the child in the parent frame: translation + yaw.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  bool operator==(const Pose&) const = default;
};

struct SceneEdge {
  NodeId parent;
  NodeId child;
  SupportRelation relation = SupportRelation::On;
  // Absent exactly when the edge is an unobserved estimate.
  std::optional<Pose> transform;

  bool operator==(const SceneEdge&) const = default;
};

struct NodeAttributes {
  bool supporting = false;
  std::optional<ContainerState> container;

  bool operator==(const NodeAttributes&) const = default;
};

using EdgeKey = std::pair<NodeId, NodeId>;  // (parent, child)

inline EdgeKey key_of(const SceneEdge& e) { return {e.parent, e.child}; }

struct Violation {
  std::string rule;     // short rule name, e.g. "not a tree"
  std::string subject;  // offending node or edge
  std::string detail;
};

// Rooted tree of House/Room/Receptacle/Object nodes with support edges.
// Value semantics; mutation happens by copy-and-update in the belief layer.
struct SceneGraph {
  std::map<NodeId, SceneNode> nodes;
  std::map<EdgeKey, SceneEdge> edges;
  std::map<NodeId, NodeAttributes> attributes;

  bool operator==(const SceneGraph&) const = default;

  bool has_node(const NodeId& id) const { return nodes.count(id) != 0; }

  const SceneNode& node(const NodeId& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw Error("unknown node id: " + id.value);
    return it->second;
  }

  NodeAttributes attrs(const NodeId& id) const {
    auto it = attributes.find(id);
    return it == attributes.end() ? NodeAttributes{} : it->second;
  }

  void add_node(SceneNode n, NodeAttributes a = {}) {
    attributes[n.id] = a;
    nodes[n.id] = std::move(n);
  }

  void add_edge(SceneEdge e) { edges[key_of(e)] = std::move(e); }

  void remove_edge(const NodeId& parent, const NodeId& child) {
    edges.erase(EdgeKey{parent, child});
  }

  // The unique incoming edge of `child`, if any.
  const SceneEdge* edge_to(const NodeId& child) const {
    for (const auto& [k, e] : edges)
      if (e.child == child) return &e;
    return nullptr;
  }

  std::vector<NodeId> children_of(const NodeId& parent) const {
    std::vector<NodeId> out;
    for (const auto& [k, e] : edges)
      if (e.parent == parent) out.push_back(e.child);
    return out;
  }

  bool is_container(const NodeId& id) const {
    return attrs(id).container.has_value();
  }

  bool is_closed_container(const NodeId& id) const {
    auto a = attrs(id);
    return a.container && *a.container == ContainerState::Closed;
  }

  std::optional<NodeId> root() const {
    for (const auto& [id, n] : nodes)
      if (n.level == NodeLevel::House) return id;
    return std::nullopt;
  }
};

inline std::optional<NodeId> parent_of(const SceneGraph& g, const NodeId& id) {
  if (!g.has_node(id)) throw Error("unknown node id: " + id.value);
  if (const SceneEdge* e = g.edge_to(id)) return e->parent;
  return std::nullopt;
}

// Chain of ancestors from the immediate parent upwards.
inline std::vector<NodeId> ancestors_of(const SceneGraph& g, const NodeId& id) {
  std::vector<NodeId> chain;
  std::set<NodeId> seen{id};
  std::optional<NodeId> cur = parent_of(g, id);
  while (cur) {
    if (seen.count(*cur)) break;  // cycle guard
    chain.push_back(*cur);
    seen.insert(*cur);
    cur = parent_of(g, *cur);
  }
  return chain;
}

inline NodeId enclosing_room(const SceneGraph& g, const NodeId& id) {
  const SceneNode& n = g.node(id);
  if (n.level == NodeLevel::House) throw Error("house root has no enclosing room");
  if (n.level == NodeLevel::Room) return id;
  for (const NodeId& a : ancestors_of(g, id))
    if (g.node(a).level == NodeLevel::Room) return a;
  throw Error("no room ancestor for node: " + id.value);
}

// Nearest ancestor-or-self at Receptacle level; the node the robot stands at
// to manipulate `id` or its children.
inline NodeId enclosing_receptacle(const SceneGraph& g, const NodeId& id) {
  const SceneNode& n = g.node(id);
  if (n.level == NodeLevel::Receptacle) return id;
  if (n.level == NodeLevel::Object) {
    for (const NodeId& a : ancestors_of(g, id))
      if (g.node(a).level == NodeLevel::Receptacle) return a;
  }
  throw Error("no receptacle ancestor for node: " + id.value);
}

// All nodes of the subtree rooted at `id`, including `id`.
inline std::vector<NodeId> subtree_of(const SceneGraph& g, const NodeId& id) {
  std::vector<NodeId> out{id};
  for (std::size_t i = 0; i < out.size(); ++i)
    for (const NodeId& c : g.children_of(out[i])) out.push_back(c);
  return out;
}

namespace detail {

inline std::string edge_name(const EdgeKey& k) {
  return k.first.value + "->" + k.second.value;
}

}  // namespace detail

// Structural validation. Violations are data, not failures.
inline std::vector<Violation> validate(const SceneGraph& g) {
  std::vector<Violation> out;
  auto add = [&out](std::string rule, std::string subject, std::string detail) {
    out.push_back({std::move(rule), std::move(subject), std::move(detail)});
  };

  // Exactly one House node.
  std::vector<NodeId> houses;
  for (const auto& [id, n] : g.nodes) {
    if (n.level == NodeLevel::House) houses.push_back(id);
    if (!n.bbox.positive_extent())
      add("bbox not positive", id.value, "extent must be > 0 on all axes");
  }
  if (houses.size() != 1)
    add("house count", "graph", "expected exactly one House node, found " +
                                    std::to_string(houses.size()));

  // Edge endpoints, parent multiplicity, level ordering, relation rules.
  std::map<NodeId, int> parent_count;
  for (const auto& [k, e] : g.edges) {
    const std::string name = detail::edge_name(k);
    if (!g.has_node(e.parent) || !g.has_node(e.child)) {
      add("dangling edge", name, "endpoint not in graph");
      continue;
    }
    if (e.parent == e.child) {
      add("not a tree", name, "self-loop");
      continue;
    }
    parent_count[e.child]++;

    NodeLevel pl = g.node(e.parent).level;
    NodeLevel cl = g.node(e.child).level;
    bool level_ok = (pl == NodeLevel::House && cl == NodeLevel::Room) ||
                    (pl == NodeLevel::Room && cl == NodeLevel::Receptacle) ||
                    (pl == NodeLevel::Receptacle && cl == NodeLevel::Object) ||
                    (pl == NodeLevel::Object && cl == NodeLevel::Object);
    if (!level_ok)
      add("level ordering", name,
          std::string(to_string(pl)) + " cannot support " + to_string(cl));

    if (e.relation == SupportRelation::Contain && !g.is_container(e.parent))
      add("container attribute missing", name,
          "contain edge from node without container attribute");
    if (e.relation == SupportRelation::On && !g.attrs(e.parent).supporting &&
        g.has_node(e.parent))
      add("supporting attribute missing", name,
          "on edge from node with supporting=false");
  }

  for (const auto& [id, cnt] : parent_count)
    if (cnt > 1)
      add("not a tree", id.value,
          std::to_string(cnt) + " parents for one node");

  // Reachability from the root and orphan/cycle detection.
  if (houses.size() == 1) {
    std::set<NodeId> reach;
    std::vector<NodeId> stack{houses[0]};
    while (!stack.empty()) {
      NodeId cur = stack.back();
      stack.pop_back();
      if (!reach.insert(cur).second) continue;
      for (const NodeId& c : g.children_of(cur)) stack.push_back(c);
    }
    for (const auto& [id, n] : g.nodes)
      if (!reach.count(id))
        add("not a tree", id.value, "unreachable from House root");
  }

  return out;
}

// Relaxed check for goal fragments: no root or reachability requirement,
// only local consistency of the stated edges and attributes.
inline std::vector<Violation> validate_fragment(const SceneGraph& g) {
  std::vector<Violation> out;
  std::map<NodeId, int> parent_count;
  for (const auto& [k, e] : g.edges) {
    const std::string name = detail::edge_name(k);
    if (!g.has_node(e.parent) || !g.has_node(e.child)) {
      out.push_back({"dangling edge", name, "endpoint not in graph"});
      continue;
    }
    if (e.parent == e.child)
      out.push_back({"not a tree", name, "self-loop"});
    parent_count[e.child]++;
  }
  for (const auto& [id, cnt] : parent_count)
    if (cnt > 1)
      out.push_back({"not a tree", id.value, "multiple goal parents"});
  return out;
}

}  // namespace epog
