#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "epog/actions.hpp"
#include "epog/oracle.hpp"
#include "epog/scene_graph.hpp"

namespace epog {

enum class EdgeSource { Observed, Estimated };

struct EdgeProvenance {
  EdgeSource source = EdgeSource::Observed;
  // Parents already disproven for this child; never contains the current one.
  std::set<NodeId> excluded_parents;

  bool operator==(const EdgeProvenance&) const = default;
};

// The robot's best-guess scene graph, mixing observed and estimated edges.
struct BeliefGraph {
  SceneGraph graph;
  std::map<EdgeKey, EdgeProvenance> provenance;

  bool operator==(const BeliefGraph&) const = default;

  EdgeProvenance provenance_of(const EdgeKey& k) const {
    auto it = provenance.find(k);
    return it == provenance.end() ? EdgeProvenance{} : it->second;
  }

  bool is_estimated(const EdgeKey& k) const {
    return provenance_of(k).source == EdgeSource::Estimated;
  }
};

// What the robot perceives after a rollout: everything in its current room
// except the interiors of closed containers.
struct Observation {
  std::map<NodeId, SceneNode> visible_nodes;
  std::map<EdgeKey, SceneEdge> visible_edges;
  std::map<NodeId, NodeAttributes> attributes;

  bool operator==(const Observation&) const = default;
};

inline BeliefGraph belief_from_initial(const SceneGraph& init) {
  BeliefGraph b;
  b.graph = init;
  for (const auto& [k, e] : init.edges)
    b.provenance[k] = EdgeProvenance{EdgeSource::Observed, {}};
  return b;
}

inline LocationQuery build_location_query(const SceneGraph& g,
                                          const std::string& object_label) {
  LocationQuery q;
  q.object_label = object_label;
  for (const auto& [id, n] : g.nodes) {
    if (n.level == NodeLevel::Room)
      q.candidate_rooms.push_back({id, n.label});
  }
  for (const auto& [id, n] : g.nodes) {
    if (n.level != NodeLevel::Receptacle) continue;
    NodeId room = enclosing_room(g, id);
    q.candidate_receptacles_by_room[room].push_back({id, n.label});
  }
  return q;
}

// Task-relevant Object nodes of a goal fragment.
inline std::set<NodeId> task_objects(const SceneGraph& goal) {
  std::set<NodeId> out;
  for (const auto& [id, n] : goal.nodes)
    if (n.level == NodeLevel::Object) out.insert(id);
  return out;
}

// Seeds the belief with every goal object missing from the initial graph,
// attached by one estimated edge under an oracle-predicted receptacle.
inline BeliefGraph estimate_belief_graph(const SceneGraph& init,
                                         const SceneGraph& goal,
                                         LocationOracle& oracle) {
  BeliefGraph belief = belief_from_initial(init);

  for (const auto& [id, goal_node] : goal.nodes) {
    if (goal_node.level != NodeLevel::Object) continue;
    if (belief.graph.has_node(id)) continue;

    LocationQuery query = build_location_query(belief.graph, goal_node.label);
    LocationAnswer answer = oracle.predict_location(query, {});
    if (!init.has_node(answer.receptacle) ||
        init.node(answer.receptacle).level != NodeLevel::Receptacle)
      throw Error("oracle predicted unknown receptacle '" +
                  answer.receptacle.value + "' for '" + goal_node.label + "'");

    NodeAttributes attrs;
    if (auto it = goal.attributes.find(id); it != goal.attributes.end())
      attrs = it->second;
    belief.graph.add_node(goal_node, attrs);

    SceneEdge edge;
    edge.parent = answer.receptacle;
    edge.child = id;
    edge.relation = belief.graph.is_container(answer.receptacle)
                        ? SupportRelation::Contain
                        : SupportRelation::On;
    edge.transform = std::nullopt;  // pose unknown until detection
    belief.graph.add_edge(edge);
    belief.provenance[key_of(edge)] = {EdgeSource::Estimated, {}};
  }
  return belief;
}

struct UpdateResult {
  BeliefGraph belief;
  bool replan = false;
};

// Reconciles the belief with one observation. Sets replan when a
// task-relevant node moved structurally: either observed somewhere new, or
// its estimated location was disproven and re-estimated via the oracle.
inline UpdateResult update_graph(const BeliefGraph& prior,
                                 const Observation& obs,
                                 LocationOracle& oracle,
                                 const std::set<NodeId>& task_nodes) {
  UpdateResult out{prior, false};
  BeliefGraph& belief = out.belief;

  // Adopt newly seen nodes immediately; they are free information.
  for (const auto& [id, node] : obs.visible_nodes) {
    if (!belief.graph.has_node(id)) {
      NodeAttributes a;
      if (auto it = obs.attributes.find(id); it != obs.attributes.end())
        a = it->second;
      belief.graph.add_node(node, a);
    } else if (auto it = obs.attributes.find(id); it != obs.attributes.end()) {
      belief.graph.attributes[id] = it->second;  // container states, etc.
    }
  }

  // Observed edges replace conflicting belief edges.
  for (const auto& [k, e] : obs.visible_edges) {
    const SceneEdge* existing = belief.graph.edge_to(e.child);
    if (existing != nullptr && existing->parent == e.parent) {
      belief.graph.edges[k] = e;  // refresh transform
      belief.provenance[k] = {EdgeSource::Observed, {}};
      continue;
    }
    if (existing != nullptr) {
      EdgeKey old_key = key_of(*existing);
      belief.graph.edges.erase(old_key);
      belief.provenance.erase(old_key);
      if (task_nodes.count(e.child)) out.replan = true;
    }
    belief.graph.edges[k] = e;
    belief.provenance[k] = {EdgeSource::Observed, {}};
  }

  // Disproof: an estimated parent is in plain view but the object is not
  // there. Exclude it and re-estimate, repeating while the fresh estimate
  // stays inside the observed area.
  for (const NodeId& v : task_nodes) {
    if (!belief.graph.has_node(v) || obs.visible_nodes.count(v)) continue;
    while (true) {
      const SceneEdge* e = belief.graph.edge_to(v);
      if (e == nullptr) break;  // detached (held); nothing to disprove
      EdgeKey k = key_of(*e);
      EdgeProvenance prov = belief.provenance_of(k);
      if (prov.source != EdgeSource::Estimated) break;
      const NodeId parent = e->parent;
      if (!obs.visible_nodes.count(parent)) break;
      if (belief.graph.is_closed_container(parent)) break;  // interior unseen

      belief.graph.edges.erase(k);
      belief.provenance.erase(k);
      std::set<NodeId> excluded = prov.excluded_parents;
      excluded.insert(parent);

      LocationQuery query =
          build_location_query(belief.graph, belief.graph.node(v).label);
      LocationAnswer answer = oracle.predict_location(query, excluded);

      SceneEdge fresh;
      fresh.parent = answer.receptacle;
      fresh.child = v;
      fresh.relation = belief.graph.is_container(answer.receptacle)
                           ? SupportRelation::Contain
                           : SupportRelation::On;
      belief.graph.add_edge(fresh);
      belief.provenance[key_of(fresh)] = {EdgeSource::Estimated, excluded};
      out.replan = true;
    }
  }

  return out;
}

// Mirrors the robot's own successful action into the belief. `placed_pose`
// is the pose the environment assigned on a Place.
inline void apply_action_effect(BeliefGraph& belief, const Action& action,
                                const std::optional<Pose>& placed_pose = {}) {
  switch (action.kind) {
    case ActionKind::Pick: {
      if (const SceneEdge* e = belief.graph.edge_to(action.object)) {
        EdgeKey k = key_of(*e);
        belief.graph.edges.erase(k);
        belief.provenance.erase(k);
      }
      break;
    }
    case ActionKind::Place: {
      SceneEdge e;
      e.parent = action.place;
      e.child = action.object;
      e.relation = belief.graph.is_container(action.place)
                       ? SupportRelation::Contain
                       : SupportRelation::On;
      e.transform = placed_pose;
      belief.graph.add_edge(e);
      belief.provenance[key_of(e)] = {EdgeSource::Observed, {}};
      break;
    }
    case ActionKind::Open:
    case ActionKind::Close: {
      NodeAttributes a = belief.graph.attrs(action.place);
      a.container = action.kind == ActionKind::Open ? ContainerState::Opened
                                                    : ContainerState::Closed;
      belief.graph.attributes[action.place] = a;
      break;
    }
    case ActionKind::Walk:
      break;
  }
}

// True iff every goal edge is present with matching relation and confirmed
// by observation, and every goal container state matches. An estimated
// match is a guess, not a satisfied goal.
inline bool goal_satisfied(const BeliefGraph& belief, const SceneGraph& goal) {
  for (const auto& [k, ge] : goal.edges) {
    auto it = belief.graph.edges.find(k);
    if (it == belief.graph.edges.end()) return false;
    if (it->second.relation != ge.relation) return false;
    if (belief.is_estimated(k)) return false;
  }
  for (const auto& [id, ga] : goal.attributes) {
    if (!ga.container) continue;
    NodeAttributes a = belief.graph.attrs(id);
    if (!a.container || *a.container != *ga.container) return false;
  }
  return true;
}

}  // namespace epog
