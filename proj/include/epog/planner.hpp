#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "epog/actions.hpp"
#include "epog/belief.hpp"
#include "epog/grid.hpp"
#include "epog/scene_graph.hpp"

namespace epog {

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// Graph edit operations.

struct EditOp {
  enum class Kind { DeleteEdge, InsertEdge, SubstituteAttr };

  Kind kind = Kind::DeleteEdge;
  NodeId parent;  // DeleteEdge / InsertEdge
  NodeId child;
  SupportRelation relation = SupportRelation::On;  // InsertEdge
  NodeId node;                                     // SubstituteAttr
  ContainerState target_state = ContainerState::Opened;

  auto operator<=>(const EditOp&) const = default;

  static EditOp del(NodeId parent, NodeId child) {
    EditOp op;
    op.kind = Kind::DeleteEdge;
    op.parent = std::move(parent);
    op.child = std::move(child);
    return op;
  }
  static EditOp ins(NodeId parent, NodeId child, SupportRelation rel) {
    EditOp op;
    op.kind = Kind::InsertEdge;
    op.parent = std::move(parent);
    op.child = std::move(child);
    op.relation = rel;
    return op;
  }
  static EditOp sub(NodeId node, ContainerState state) {
    EditOp op;
    op.kind = Kind::SubstituteAttr;
    op.node = std::move(node);
    op.target_state = state;
    return op;
  }
};

namespace planner_detail {

// Closed containers on the belief path from `node` (inclusive) to its room.
inline std::vector<NodeId> closed_ancestors(const SceneGraph& g,
                                            const NodeId& node) {
  std::vector<NodeId> out;
  if (g.is_closed_container(node)) out.push_back(node);
  for (const NodeId& a : ancestors_of(g, node)) {
    if (g.node(a).level == NodeLevel::Room) break;
    if (g.is_closed_container(a)) out.push_back(a);
  }
  return out;
}

}  // namespace planner_detail

// Minimum edit set transforming the belief into the goal. Node identities
// are unique, so the minimum decomposes per object: one delete + insert per
// relocated object, one substitution per container state difference.
// Closed containers that must be traversed for access get an Opened +
// Closed substitution pair even when their goal state matches the belief.
inline std::vector<EditOp> ged(const BeliefGraph& belief,
                               const SceneGraph& goal) {
  std::vector<EditOp> ops;
  const SceneGraph& g = belief.graph;

  // Containers whose interior the plan must reach.
  std::set<NodeId> traversed;

  for (const auto& [k, ge] : goal.edges) {
    if (!g.has_node(ge.child))
      throw Error("goal references node absent from belief: " +
                  ge.child.value + " (estimation step skipped?)");
    if (!g.has_node(ge.parent))
      throw Error("goal references node absent from belief: " +
                  ge.parent.value);

    const SceneEdge* current = g.edge_to(ge.child);
    if (current != nullptr && current->parent == ge.parent) {
      // In place already. If only estimated, the location still needs to be
      // confirmed on site; mark its access chain as traversed.
      if (belief.is_estimated(k))
        for (const NodeId& c : planner_detail::closed_ancestors(g, ge.parent))
          traversed.insert(c);
      continue;
    }
    if (current != nullptr) {
      ops.push_back(EditOp::del(current->parent, ge.child));
      for (const NodeId& c :
           planner_detail::closed_ancestors(g, current->parent))
        traversed.insert(c);
    }
    ops.push_back(EditOp::ins(ge.parent, ge.child, ge.relation));
    for (const NodeId& c : planner_detail::closed_ancestors(g, ge.parent))
      traversed.insert(c);
  }

  // Container state differences demanded by the goal itself.
  std::set<NodeId> state_diff;
  for (const auto& [id, ga] : goal.attributes) {
    if (!ga.container) continue;
    NodeAttributes cur = g.attrs(id);
    if (!cur.container)
      throw Error("goal container state on non-container: " + id.value);
    if (*cur.container != *ga.container) {
      ops.push_back(EditOp::sub(id, *ga.container));
      state_diff.insert(id);
    }
  }

  // Access-induced pairs. A goal state of Opened is already produced above;
  // otherwise the container is opened for access and closed again.
  for (const NodeId& c : traversed) {
    if (state_diff.count(c)) continue;  // goal flips it anyway
    ops.push_back(EditOp::sub(c, ContainerState::Opened));
    ops.push_back(EditOp::sub(c, ContainerState::Closed));
  }

  std::sort(ops.begin(), ops.end());
  return ops;
}

// delete -> Pick, insert -> Place, substitute(opened) -> Open,
// substitute(closed) -> Close. Bijective on the input set.
inline std::vector<Action> edit_ops_to_actions(const std::vector<EditOp>& ops) {
  std::vector<Action> actions;
  actions.reserve(ops.size());
  for (const EditOp& op : ops) {
    switch (op.kind) {
      case EditOp::Kind::DeleteEdge:
        actions.push_back(make_pick(op.parent, op.child));
        break;
      case EditOp::Kind::InsertEdge:
        actions.push_back(make_place(op.parent, op.child));
        break;
      case EditOp::Kind::SubstituteAttr:
        actions.push_back(op.target_state == ContainerState::Opened
                              ? make_open(op.node)
                              : make_close(op.node));
        break;
    }
  }
  return actions;
}

// Partial order over K, as (before, after) index pairs.
struct ConstraintSet {
  std::set<std::pair<std::size_t, std::size_t>> pairs;

  bool satisfied_before(std::size_t idx, std::uint64_t done_mask) const {
    for (const auto& [before, after] : pairs)
      if (after == idx && !(done_mask & (std::uint64_t{1} << before)))
        return false;
    return true;
  }
};

namespace planner_detail {

inline bool inside(const SceneGraph& g, const NodeId& node,
                   const NodeId& container) {
  if (node == container) return true;
  for (const NodeId& a : ancestors_of(g, node))
    if (a == container) return true;
  return false;
}

inline bool acyclic(const ConstraintSet& c, std::size_t n) {
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& [b, a] : c.pairs) indegree[a]++;
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) queue.push_back(i);
  std::size_t seen = 0;
  while (!queue.empty()) {
    std::size_t cur = queue.back();
    queue.pop_back();
    ++seen;
    for (const auto& [b, a] : c.pairs)
      if (b == cur && --indegree[a] == 0) queue.push_back(a);
  }
  return seen == n;
}

}  // namespace planner_detail

// Temporal dependencies between the unsorted actions:
//   (i)   Pick of an object before its Place;
//   (ii)  Open(c) before any Pick/Place reaching inside c;
//   (iii) every Pick/Place reaching inside c before Close(c);
//   (iv)  Open(c) before Close(c);
//   (v)   actions stationed on a movable object before the Pick that moves
//         it, so every station is fixed at plan time (load the tray before
//         carrying it).
inline ConstraintSet get_constraints(const std::vector<Action>& actions,
                                     const SceneGraph& belief_graph) {
  ConstraintSet c;
  const std::size_t n = actions.size();

  auto reaches_inside = [&](const Action& a, const NodeId& container) {
    if (a.kind == ActionKind::Pick || a.kind == ActionKind::Place)
      return planner_detail::inside(belief_graph, a.place, container);
    return false;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Action& a = actions[i];
      const Action& b = actions[j];

      if (a.kind == ActionKind::Pick && b.kind == ActionKind::Place &&
          a.object == b.object)
        c.pairs.insert({i, j});

      if (a.kind == ActionKind::Open) {
        if (reaches_inside(b, a.place)) c.pairs.insert({i, j});
        if (b.kind == ActionKind::Close && b.place == a.place)
          c.pairs.insert({i, j});
      }
      if (b.kind == ActionKind::Close && reaches_inside(a, b.place))
        c.pairs.insert({i, j});

      if (b.kind == ActionKind::Pick && a.place == b.object)
        c.pairs.insert({i, j});
    }
  }

  if (!planner_detail::acyclic(c, n))
    throw InfeasibleError("constraint set has a cycle");
  return c;
}

// ---------------------------------------------------------------------------
// Stations and travel cost.

// The cell the robot stands at to perform an action.
inline Cell action_station(const Action& a, const SceneGraph& belief_graph,
                           const OccupancyGrid& grid) {
  switch (a.kind) {
    case ActionKind::Walk:
      return grid.anchor(a.place);
    case ActionKind::Pick:
    case ActionKind::Place:
    case ActionKind::Open:
    case ActionKind::Close:
      return grid.anchor(enclosing_receptacle(belief_graph, a.place));
  }
  throw Error("unreachable");
}

// Travel distance of a prefix: A* legs between consecutive stations from the
// robot's start. Monotone in prefix length.
inline double heuristic_cost(const std::vector<Action>& prefix,
                             DistanceCache& distances,
                             const SceneGraph& belief_graph,
                             const Cell& robot_start) {
  double total = 0.0;
  Cell cur = robot_start;
  for (const Action& a : prefix) {
    Cell st = action_station(a, belief_graph, distances.grid());
    total += distances.distance(cur, st);
    cur = st;
  }
  return total;
}

struct Plan {
  std::vector<Action> actions;  // with walks inserted
  double total_cost = 0.0;
};

// Inserts a Walk to the station's receptacle before every manipulation at a
// new station; consecutive duplicates collapse.
inline Plan insert_walk_actions(const std::vector<Action>& order,
                                DistanceCache& distances,
                                const SceneGraph& belief_graph,
                                const Cell& robot_start) {
  Plan plan;
  Cell cur = robot_start;
  for (const Action& a : order) {
    Cell st = action_station(a, belief_graph, distances.grid());
    if (st != cur) {
      plan.total_cost += distances.distance(cur, st);
      cur = st;
      if (a.kind != ActionKind::Walk) {
        NodeId station_node = enclosing_receptacle(belief_graph, a.place);
        plan.actions.push_back(make_walk(station_node));
      }
      plan.actions.push_back(a);
      continue;
    }
    if (a.kind == ActionKind::Walk) continue;  // already there
    plan.actions.push_back(a);
  }
  return plan;
}

struct PlannerOptions {
  bool prune = true;  // disable only to check pruning soundness
};

struct PlannerStats {
  std::size_t nodes_expanded = 0;
};

// Depth-first branch-and-bound over topological linearizations of (K, C),
// minimizing travel distance. Hand capacity is one grasped object: a Pick
// is only applicable with a free hand, a Place only for the held object.
// `held` seeds the hand state when replanning mid-carry.
inline Plan linearize(const std::vector<Action>& actions,
                      const ConstraintSet& constraints,
                      DistanceCache& distances,
                      const SceneGraph& belief_graph, const Cell& robot_start,
                      const std::optional<NodeId>& held = {},
                      const PlannerOptions& opts = {},
                      PlannerStats* stats = nullptr) {
  const std::size_t n = actions.size();
  if (n == 0) return {};
  if (n > 63) throw InfeasibleError("action set too large");

  std::vector<Cell> stations(n);
  for (std::size_t i = 0; i < n; ++i)
    stations[i] = action_station(actions[i], belief_graph, distances.grid());
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = format_action(actions[i]);

  struct Node {
    std::vector<std::size_t> prefix;
    std::uint64_t done = 0;
    double cost = 0.0;
    Cell cell;
    std::optional<NodeId> held;
  };

  double best_cost = std::numeric_limits<double>::infinity();
  std::optional<std::vector<std::size_t>> best_order;

  auto successors = [&](const Node& node) {
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < n; ++i) {
      if (node.done & (std::uint64_t{1} << i)) continue;
      if (!constraints.satisfied_before(i, node.done)) continue;
      const Action& a = actions[i];
      if (a.kind == ActionKind::Pick && node.held) continue;
      if (a.kind == ActionKind::Place &&
          (!node.held || *node.held != a.object))
        continue;
      next.push_back(i);
    }
    // Nearest station first, then lexicographic action identity; a strong
    // incumbent early maximizes pruning.
    std::sort(next.begin(), next.end(), [&](std::size_t x, std::size_t y) {
      double dx = distances.distance(node.cell, stations[x]);
      double dy = distances.distance(node.cell, stations[y]);
      if (dx != dy) return dx < dy;
      return keys[x] < keys[y];
    });
    return next;
  };

  std::vector<Node> stack;
  {
    Node root;
    root.cell = robot_start;
    root.held = held;
    std::vector<std::size_t> first = successors(root);
    for (auto it = first.rbegin(); it != first.rend(); ++it) {
      Node child = root;
      child.prefix.push_back(*it);
      child.done |= std::uint64_t{1} << *it;
      child.cost += distances.distance(root.cell, stations[*it]);
      child.cell = stations[*it];
      if (actions[*it].kind == ActionKind::Pick)
        child.held = actions[*it].object;
      else if (actions[*it].kind == ActionKind::Place)
        child.held.reset();
      stack.push_back(std::move(child));
    }
  }

  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    if (stats) stats->nodes_expanded++;

    if (opts.prune && node.cost >= best_cost) continue;

    if (node.prefix.size() == n) {
      if (node.cost < best_cost) {
        best_cost = node.cost;
        best_order = node.prefix;
      }
      continue;
    }

    std::vector<std::size_t> next = successors(node);
    for (auto it = next.rbegin(); it != next.rend(); ++it) {
      Node child = node;
      child.prefix.push_back(*it);
      child.done |= std::uint64_t{1} << *it;
      child.cost += distances.distance(node.cell, stations[*it]);
      child.cell = stations[*it];
      if (actions[*it].kind == ActionKind::Pick)
        child.held = actions[*it].object;
      else if (actions[*it].kind == ActionKind::Place)
        child.held.reset();
      stack.push_back(std::move(child));
    }
  }

  if (!best_order)
    throw InfeasibleError("no constraint-respecting executable order exists");

  std::vector<Action> order;
  order.reserve(n);
  for (std::size_t i : *best_order) order.push_back(actions[i]);
  return insert_walk_actions(order, distances, belief_graph, robot_start);
}

// Full pipeline: edit ops -> actions -> constraints -> optimal linearization,
// plus on-site confirmation visits for estimated locations that already
// coincide with the goal.
inline Plan plan(const BeliefGraph& belief, const SceneGraph& goal,
                 const OccupancyGrid& grid, const Cell& robot_start,
                 const std::optional<NodeId>& held = {},
                 const PlannerOptions& opts = {}) {
  std::vector<EditOp> ops = ged(belief, goal);
  std::vector<Action> actions = edit_ops_to_actions(ops);

  if (held) {
    bool covered = false;
    for (const Action& a : actions)
      if (a.kind == ActionKind::Place && a.object == *held) covered = true;
    if (!covered)
      throw InfeasibleError("held object '" + held->value +
                            "' has no goal placement");
  }

  // Unconfirmed estimates matching the goal still need a look: walk to the
  // predicted receptacle (its access Open/Close already comes from ged).
  std::set<NodeId> visit;
  for (const auto& [k, ge] : goal.edges) {
    auto it = belief.graph.edges.find(k);
    if (it == belief.graph.edges.end() || !belief.is_estimated(k)) continue;
    NodeId rcpt = enclosing_receptacle(belief.graph, ge.parent);
    if (planner_detail::closed_ancestors(belief.graph, ge.parent).empty())
      visit.insert(rcpt);
  }
  for (const NodeId& rcpt : visit) {
    bool covered = false;
    for (const Action& a : actions)
      if (action_station(a, belief.graph, grid) == grid.anchor(rcpt))
        covered = true;
    if (!covered) actions.push_back(make_walk(rcpt));
  }

  if (actions.empty()) return {};

  ConstraintSet constraints = get_constraints(actions, belief.graph);
  DistanceCache distances(grid);
  return linearize(actions, constraints, distances, belief.graph, robot_start,
                   held, opts);
}

}  // namespace epog
