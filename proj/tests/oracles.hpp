#pragma once

// Independent oracles the implementation is checked against. These stay
// deliberately naive: full-grid Dijkstra, exhaustive permutation search,
// iterative-deepening edit search.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "epog/belief.hpp"
#include "epog/grid.hpp"
#include "epog/planner.hpp"

namespace epog::testing {

// Dijkstra over every free cell, no heuristic, no early exit.
inline double dijkstra_distance(const OccupancyGrid& grid, const Cell& from,
                                const Cell& to) {
  if (!grid.free(from) || !grid.free(to))
    throw Error("dijkstra: blocked endpoint");
  std::map<Cell, double> dist;
  using Entry = std::pair<double, Cell>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  dist[from] = 0.0;
  pq.push({0.0, from});
  while (!pq.empty()) {
    auto [d, cell] = pq.top();
    pq.pop();
    if (d > dist[cell]) continue;
    for (const Cell& step :
         {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
      Cell next{cell.x + step.x, cell.y + step.y};
      if (!grid.free(next)) continue;
      double nd = d + grid.cell_size;
      auto it = dist.find(next);
      if (it == dist.end() || nd < it->second - 1e-12) {
        dist[next] = nd;
        pq.push({nd, next});
      }
    }
  }
  auto it = dist.find(to);
  return it == dist.end() ? kInfiniteDistance : it->second;
}

// Exhaustive minimum over every executable total order of `actions`:
// constraint-respecting and hand-feasible (one grasped object at a time).
struct BruteForceResult {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order;
  std::size_t orders_tried = 0;
};

inline void brute_force_rec(const std::vector<Action>& actions,
                            const ConstraintSet& constraints,
                            const std::vector<Cell>& stations,
                            DistanceCache& distances, std::uint64_t done,
                            std::vector<std::size_t>& prefix, double cost,
                            const Cell& cell,
                            const std::optional<NodeId>& held,
                            BruteForceResult& best) {
  if (prefix.size() == actions.size()) {
    best.orders_tried++;
    if (cost < best.cost) {
      best.cost = cost;
      best.order = prefix;
    }
    return;
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (done & (std::uint64_t{1} << i)) continue;
    if (!constraints.satisfied_before(i, done)) continue;
    const Action& a = actions[i];
    if (a.kind == ActionKind::Pick && held) continue;
    if (a.kind == ActionKind::Place && (!held || *held != a.object)) continue;
    std::optional<NodeId> next_held = held;
    if (a.kind == ActionKind::Pick) next_held = a.object;
    if (a.kind == ActionKind::Place) next_held.reset();
    prefix.push_back(i);
    brute_force_rec(actions, constraints, stations, distances,
                    done | (std::uint64_t{1} << i), prefix,
                    cost + distances.distance(cell, stations[i]), stations[i],
                    next_held, best);
    prefix.pop_back();
  }
}

inline BruteForceResult brute_force_best_order(
    const std::vector<Action>& actions, const ConstraintSet& constraints,
    DistanceCache& distances, const SceneGraph& belief_graph,
    const Cell& start, const std::optional<NodeId>& held = {}) {
  BruteForceResult best;
  std::vector<Cell> stations(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i)
    stations[i] = action_station(actions[i], belief_graph, distances.grid());
  std::vector<std::size_t> prefix;
  brute_force_rec(actions, constraints, stations, distances, 0, prefix, 0.0,
                  start, held, best);
  return best;
}

// ---------------------------------------------------------------------------
// Brute-force minimal edit count: iterative deepening over sequences drawn
// from the candidate op universe until the goal conditions hold.

namespace edit_detail {

struct EditState {
  std::map<NodeId, std::optional<NodeId>> parent;       // of goal objects
  std::map<NodeId, SupportRelation> relation;
  std::map<NodeId, ContainerState> containers;
};

inline bool goal_reached(const EditState& st, const SceneGraph& goal) {
  for (const auto& [k, ge] : goal.edges) {
    auto it = st.parent.find(ge.child);
    if (it == st.parent.end() || !it->second || *it->second != ge.parent)
      return false;
    if (st.relation.at(ge.child) != ge.relation) return false;
  }
  for (const auto& [id, ga] : goal.attributes) {
    if (!ga.container) continue;
    auto it = st.containers.find(id);
    if (it == st.containers.end() || it->second != *ga.container) return false;
  }
  return true;
}

inline bool dfs(EditState& st, const SceneGraph& goal,
                const std::vector<EditOp>& universe, std::size_t depth) {
  if (goal_reached(st, goal)) return true;
  if (depth == 0) return false;
  for (const EditOp& op : universe) {
    switch (op.kind) {
      case EditOp::Kind::DeleteEdge: {
        auto it = st.parent.find(op.child);
        if (it == st.parent.end() || !it->second || *it->second != op.parent)
          continue;
        auto saved = *it->second;
        auto saved_rel = st.relation[op.child];
        it->second.reset();
        if (dfs(st, goal, universe, depth - 1)) return true;
        it->second = saved;
        st.relation[op.child] = saved_rel;
        break;
      }
      case EditOp::Kind::InsertEdge: {
        auto it = st.parent.find(op.child);
        if (it == st.parent.end() || it->second) continue;  // must be detached
        it->second = op.parent;
        auto saved_rel = st.relation[op.child];
        st.relation[op.child] = op.relation;
        if (dfs(st, goal, universe, depth - 1)) return true;
        it->second.reset();
        st.relation[op.child] = saved_rel;
        break;
      }
      case EditOp::Kind::SubstituteAttr: {
        auto it = st.containers.find(op.node);
        if (it == st.containers.end() || it->second == op.target_state)
          continue;
        ContainerState saved = it->second;
        it->second = op.target_state;
        if (dfs(st, goal, universe, depth - 1)) return true;
        it->second = saved;
        break;
      }
    }
  }
  return false;
}

}  // namespace edit_detail

// Minimum number of edit ops transforming belief into a state satisfying the
// goal fragment, searched exhaustively by increasing depth.
inline std::size_t brute_force_min_edit_count(const BeliefGraph& belief,
                                              const SceneGraph& goal,
                                              std::size_t max_depth = 12) {
  edit_detail::EditState st;
  std::set<NodeId> tracked;
  for (const auto& [k, ge] : goal.edges) tracked.insert(ge.child);
  for (const NodeId& v : tracked) {
    const SceneEdge* e = belief.graph.edge_to(v);
    if (e != nullptr) {
      st.parent[v] = e->parent;
      st.relation[v] = e->relation;
    } else {
      st.parent[v] = std::nullopt;
      st.relation[v] = SupportRelation::On;
    }
  }
  for (const auto& [id, a] : belief.graph.attributes)
    if (a.container) st.containers[id] = *a.container;

  // Candidate universe: delete current edges of tracked objects, insert any
  // goal edge, flip any container either way.
  std::vector<EditOp> universe;
  for (const NodeId& v : tracked) {
    const SceneEdge* e = belief.graph.edge_to(v);
    if (e != nullptr) universe.push_back(EditOp::del(e->parent, v));
  }
  for (const auto& [k, ge] : goal.edges)
    universe.push_back(EditOp::ins(ge.parent, ge.child, ge.relation));
  for (const auto& [id, a] : belief.graph.attributes) {
    if (!a.container) continue;
    universe.push_back(EditOp::sub(id, ContainerState::Opened));
    universe.push_back(EditOp::sub(id, ContainerState::Closed));
  }

  for (std::size_t depth = 0; depth <= max_depth; ++depth) {
    edit_detail::EditState scratch = st;
    if (edit_detail::dfs(scratch, goal, universe, depth)) return depth;
  }
  throw Error("edit search exceeded max depth");
}

}  // namespace epog::testing
