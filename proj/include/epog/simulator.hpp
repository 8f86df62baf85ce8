#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "epog/actions.hpp"
#include "epog/belief.hpp"
#include "epog/grid.hpp"
#include "epog/scene_graph.hpp"

namespace epog {

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(what) {}
};

// How close an obstacle must stand to the pick approach to block it.
constexpr double kApproachMargin = 0.10;
// Lattice pitch of the placement free-slot search.
constexpr double kSlotPitch = 0.05;

// Deterministic household world. `truth` holds the full ground-truth graph,
// including objects the robot has never seen.
struct WorldState {
  SceneGraph truth;
  OccupancyGrid grid;
  Cell robot_cell;
  std::optional<NodeId> held;  // grasped subtree root, detached in truth
  std::uint64_t rng_seed = 0;
  NodeId parking_place;  // designated drop-off for corrective sequences
};

// ---------------------------------------------------------------------------
// World-frame geometry.

struct WorldPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
};

struct FootprintRect {
  double cx = 0.0;
  double cy = 0.0;
  double hx = 0.0;  // half extents
  double hy = 0.0;
};

inline bool footprint_overlap(const FootprintRect& a, const FootprintRect& b) {
  return std::abs(a.cx - b.cx) < a.hx + b.hx &&
         std::abs(a.cy - b.cy) < a.hy + b.hy;
}

inline FootprintRect inflate(FootprintRect r, double margin) {
  r.hx += margin;
  r.hy += margin;
  return r;
}

// Pose of the node origin in the world frame, chained through edge
// transforms from the root. Throws when any edge on the path lacks one.
inline WorldPose world_pose(const SceneGraph& g, const NodeId& id) {
  const SceneEdge* e = g.edge_to(id);
  if (e == nullptr) return {};  // root (or detached): own frame is world frame
  if (!e->transform)
    throw Error("unknown transform on edge to '" + id.value + "'");
  WorldPose parent = world_pose(g, e->parent);
  const Pose& t = *e->transform;
  double c = std::cos(parent.yaw), s = std::sin(parent.yaw);
  return {parent.x + c * t.x - s * t.y, parent.y + s * t.x + c * t.y,
          parent.z + t.z, parent.yaw + t.yaw};
}

// Axis-aligned xy footprint of the node's bbox in the world frame.
inline FootprintRect node_footprint(const SceneGraph& g, const NodeId& id) {
  WorldPose p = world_pose(g, id);
  const Aabb& bb = g.node(id).bbox;
  double c = std::abs(std::cos(p.yaw)), s = std::abs(std::sin(p.yaw));
  double ex = bb.extent[0] / 2.0, ey = bb.extent[1] / 2.0;
  double cc = std::cos(p.yaw), ss = std::sin(p.yaw);
  return {p.x + cc * bb.center[0] - ss * bb.center[1],
          p.y + ss * bb.center[0] + cc * bb.center[1], c * ex + s * ey,
          s * ex + c * ey};
}

// ---------------------------------------------------------------------------
// Observation.

// The robot's current room: the node whose anchor it stands on (falling back
// to the nearest anchor), lifted to Room level.
inline NodeId current_room(const WorldState& world) {
  const OccupancyGrid& grid = world.grid;
  std::optional<NodeId> at;
  int best = std::numeric_limits<int>::max();
  for (const auto& [id, cell] : grid.anchors) {
    int d = std::abs(cell.x - world.robot_cell.x) +
            std::abs(cell.y - world.robot_cell.y);
    if (d < best) {
      best = d;
      at = id;
    }
  }
  if (!at) throw Error("grid has no anchors");
  return enclosing_room(world.truth, *at);
}

// Everything in the robot's room except the interiors of closed containers.
inline Observation observe(const WorldState& world) {
  Observation obs;
  const SceneGraph& g = world.truth;
  NodeId room = current_room(world);

  std::vector<NodeId> frontier{room};
  std::set<NodeId> included;
  while (!frontier.empty()) {
    NodeId cur = frontier.back();
    frontier.pop_back();
    if (!included.insert(cur).second) continue;
    obs.visible_nodes[cur] = g.node(cur);
    obs.attributes[cur] = g.attrs(cur);
    if (g.is_closed_container(cur)) continue;  // interior hidden
    for (const NodeId& c : g.children_of(cur)) frontier.push_back(c);
  }
  for (const auto& [k, e] : g.edges)
    if (included.count(e.parent) && included.count(e.child))
      obs.visible_edges[k] = e;
  return obs;
}

// ---------------------------------------------------------------------------
// Action execution.

struct RolloutResult {
  Observation obs;
  std::optional<ExceptionReport> exception;
  double travel_m = 0.0;            // walk legs only
  std::optional<Pose> placed_pose;  // pose assigned by a successful Place
};

namespace sim_detail {

// Outermost closed container strictly enclosing `id` (below Room level).
inline std::optional<NodeId> outermost_closed(const SceneGraph& g,
                                              const NodeId& id,
                                              bool include_self) {
  std::optional<NodeId> found;
  if (include_self && g.is_closed_container(id)) found = id;
  for (const NodeId& a : ancestors_of(g, id)) {
    if (g.node(a).level == NodeLevel::Room) break;
    if (g.is_closed_container(a)) found = a;
  }
  return found;
}

inline Cell station_cell(const WorldState& world, const NodeId& node) {
  return world.grid.anchor(enclosing_receptacle(world.truth, node));
}

inline void require_at_station(const WorldState& world, const NodeId& node,
                               const Action& a) {
  if (station_cell(world, node) != world.robot_cell)
    throw ContractViolation("robot not at station for " + format_action(a));
}

// Direct children footprints, used for slot search and collision checks.
inline std::vector<std::pair<NodeId, FootprintRect>> child_footprints(
    const SceneGraph& g, const NodeId& parent) {
  std::vector<std::pair<NodeId, FootprintRect>> out;
  for (const NodeId& c : g.children_of(parent))
    out.push_back({c, node_footprint(g, c)});
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace sim_detail

// Executes one action. Exception checks run before any state change; an
// exception-returning rollout leaves the world untouched. Contract
// violations (malformed requests) throw instead.
inline RolloutResult rollout(WorldState& world, const Action& action) {
  RolloutResult result;
  SceneGraph& g = world.truth;

  auto raise = [&](ExceptionKind kind, std::vector<NodeId> involved) {
    result.exception = ExceptionReport{kind, action, std::move(involved),
                                       world.parking_place};
    result.obs = observe(world);
  };

  switch (action.kind) {
    case ActionKind::Walk: {
      if (!world.grid.has_anchor(action.place))
        throw ContractViolation("walk target has no anchor: " +
                                action.place.value);
      std::vector<Cell> path =
          astar_path(world.grid, world.robot_cell, world.grid.anchor(action.place));
      if (path.empty())
        throw ContractViolation("walk target unreachable: " +
                                action.place.value);
      result.travel_m =
          static_cast<double>(path.size() - 1) * world.grid.cell_size;
      world.robot_cell = path.back();
      break;
    }

    case ActionKind::Pick: {
      const NodeId& obj = action.object;
      if (!g.has_node(obj))
        throw ContractViolation("pick of unknown object: " + obj.value);
      if (world.held)
        throw ContractViolation("pick with full hand: " + format_action(action));
      const SceneEdge* in_edge = g.edge_to(obj);
      if (in_edge == nullptr || in_edge->parent != action.place)
        throw ContractViolation("object '" + obj.value + "' is not at '" +
                                action.place.value + "'");
      sim_detail::require_at_station(world, action.place, action);

      if (auto closed = sim_detail::outermost_closed(g, obj, false)) {
        raise(ExceptionKind::Inaccessibility, {*closed});
        return result;
      }
      FootprintRect approach =
          inflate(node_footprint(g, obj), kApproachMargin);
      std::vector<NodeId> blockers;
      for (const auto& [sib, rect] :
           sim_detail::child_footprints(g, in_edge->parent)) {
        if (sib == obj) continue;
        if (footprint_overlap(approach, rect)) blockers.push_back(sib);
      }
      if (!blockers.empty()) {
        raise(ExceptionKind::Blocking, std::move(blockers));
        return result;
      }
      std::vector<NodeId> on_top;
      for (const NodeId& c : g.children_of(obj)) {
        auto it = g.edges.find(EdgeKey{obj, c});
        if (it != g.edges.end() && it->second.relation == SupportRelation::On)
          on_top.push_back(c);
      }
      std::sort(on_top.begin(), on_top.end());
      if (!on_top.empty()) {
        raise(ExceptionKind::Instability, std::move(on_top));
        return result;
      }

      g.edges.erase(key_of(*in_edge));
      world.held = obj;
      break;
    }

    case ActionKind::Place: {
      const NodeId& obj = action.object;
      const NodeId& target = action.place;
      if (!world.held || *world.held != obj)
        throw ContractViolation("place without holding: " +
                                format_action(action));
      if (!g.has_node(target))
        throw ContractViolation("place onto unknown node: " + target.value);
      sim_detail::require_at_station(world, target, action);

      if (auto closed = sim_detail::outermost_closed(g, target, true)) {
        raise(ExceptionKind::Inaccessibility, {*closed});
        return result;
      }

      FootprintRect surface = node_footprint(g, target);
      const Aabb& obb = g.node(obj).bbox;
      double ohx = obb.extent[0] / 2.0, ohy = obb.extent[1] / 2.0;
      auto siblings = sim_detail::child_footprints(g, target);

      double x0 = surface.cx - surface.hx + ohx;
      double x1 = surface.cx + surface.hx - ohx;
      double y0 = surface.cy - surface.hy + ohy;
      double y1 = surface.cy + surface.hy - ohy;

      std::optional<FootprintRect> slot;
      std::vector<NodeId> colliders;
      bool first_pose = true;
      for (double y = y0; y <= y1 + 1e-9 && !slot; y += kSlotPitch) {
        for (double x = x0; x <= x1 + 1e-9 && !slot; x += kSlotPitch) {
          FootprintRect candidate{x, y, ohx, ohy};
          bool free = true;
          for (const auto& [sib, rect] : siblings) {
            if (footprint_overlap(candidate, rect)) {
              free = false;
              if (first_pose) colliders.push_back(sib);
            }
          }
          first_pose = false;
          if (free) slot = candidate;
        }
      }
      if (!slot) {
        if (colliders.empty())
          for (const auto& [sib, rect] : siblings) colliders.push_back(sib);
        if (colliders.empty()) colliders.push_back(target);  // does not fit
        raise(ExceptionKind::Collision, std::move(colliders));
        return result;
      }

      WorldPose tp = world_pose(g, target);
      const Aabb& tbb = g.node(target).bbox;
      double wz = tp.z + tbb.center[2] + tbb.extent[2] / 2.0 + obb.extent[2] / 2.0;
      // World slot position back into the target's frame.
      double dx = slot->cx - tp.x, dy = slot->cy - tp.y;
      double c = std::cos(-tp.yaw), s = std::sin(-tp.yaw);
      Pose local{c * dx - s * dy, s * dx + c * dy, wz - tp.z, 0.0};

      SceneEdge e;
      e.parent = target;
      e.child = obj;
      e.relation = g.is_container(target) ? SupportRelation::Contain
                                          : SupportRelation::On;
      e.transform = local;
      g.add_edge(e);
      world.held.reset();
      result.placed_pose = local;
      break;
    }

    case ActionKind::Open:
    case ActionKind::Close: {
      const NodeId& node = action.place;
      if (!g.has_node(node) || !g.is_container(node))
        throw ContractViolation("open/close on non-container: " + node.value);
      sim_detail::require_at_station(world, node, action);
      NodeAttributes a = g.attrs(node);
      ContainerState want = action.kind == ActionKind::Open
                                ? ContainerState::Closed
                                : ContainerState::Opened;
      if (*a.container != want)
        throw ContractViolation("redundant " + format_action(action));
      a.container = action.kind == ActionKind::Open ? ContainerState::Opened
                                                    : ContainerState::Closed;
      g.attributes[node] = a;
      break;
    }
  }

  result.obs = observe(world);
  return result;
}

// ---------------------------------------------------------------------------
// Exception injection.

struct ExceptionInjectionSpec {
  int count_per_scene = 2;
  std::vector<ExceptionKind> kinds;   // drawn in order, cycled
  std::set<NodeId> task_objects;      // placement happens near these
  std::vector<NodeId> moved_objects;  // task objects the plan will pick
  std::vector<NodeId> place_targets;  // receptacles the plan will place onto
};

namespace sim_detail {

inline NodeId fresh_obstacle_id(const SceneGraph& g, int& counter) {
  while (true) {
    NodeId id{"obstacle_" + std::to_string(counter++)};
    if (!g.has_node(id)) return id;
  }
}

// Adds a small box as a child of `parent` at the given world position.
inline void add_obstacle(SceneGraph& g, const NodeId& parent, const NodeId& id,
                         double wx, double wy, double ex, double ey,
                         double ez) {
  SceneNode n;
  n.id = id;
  n.label = "obstacle";
  n.level = NodeLevel::Object;
  n.bbox = Aabb{{0.0, 0.0, ez / 2.0}, {ex, ey, ez}};
  g.add_node(n, NodeAttributes{false, std::nullopt});

  WorldPose pp = world_pose(g, parent);
  const Aabb& pbb = g.node(parent).bbox;
  double wz = pp.z + pbb.center[2] + pbb.extent[2] / 2.0 + ez / 2.0;
  double dx = wx - pp.x, dy = wy - pp.y;
  double c = std::cos(-pp.yaw), s = std::sin(-pp.yaw);

  SceneEdge e;
  e.parent = parent;
  e.child = id;
  e.relation = g.is_container(parent) ? SupportRelation::Contain
                                      : SupportRelation::On;
  e.transform = Pose{c * dx - s * dy, s * dx + c * dy, wz - pp.z, 0.0};
  g.add_edge(e);
}

}  // namespace sim_detail

// Seeded perturbation of the world so that the injected exceptions fire on
// the nominal plan: blockers appear next to task objects, containers close,
// placement targets get covered, stacks appear on pick targets.
inline WorldState inject_exceptions(const WorldState& world,
                                    const ExceptionInjectionSpec& spec,
                                    std::uint64_t seed) {
  WorldState out = world;
  if (spec.count_per_scene <= 0) return out;
  if (spec.kinds.empty()) throw Error("injection spec has no kinds");

  std::mt19937_64 rng(seed);
  auto pick_from = [&rng](const std::vector<NodeId>& pool,
                          const std::set<NodeId>& used) -> std::optional<NodeId> {
    std::vector<NodeId> avail;
    for (const NodeId& id : pool)
      if (!used.count(id)) avail.push_back(id);
    if (avail.empty()) return std::nullopt;
    return avail[rng() % avail.size()];
  };

  std::set<NodeId> used_sites;
  int obstacle_counter = 0;
  int injected = 0;

  for (int i = 0; injected < spec.count_per_scene; ++i) {
    if (i >= spec.count_per_scene + 8) break;  // sites exhausted
    ExceptionKind kind = spec.kinds[i % spec.kinds.size()];
    SceneGraph& g = out.truth;

    switch (kind) {
      case ExceptionKind::Inaccessibility: {
        std::vector<NodeId> candidates;
        for (const NodeId& obj : spec.moved_objects) {
          if (!g.has_node(obj) || used_sites.count(obj)) continue;
          for (const NodeId& a : ancestors_of(g, obj)) {
            if (g.node(a).level == NodeLevel::Room) break;
            auto attr = g.attrs(a);
            if (attr.container && *attr.container == ContainerState::Opened) {
              candidates.push_back(obj);
              break;
            }
          }
        }
        if (auto site = pick_from(candidates, used_sites)) {
          for (const NodeId& a : ancestors_of(g, *site)) {
            if (g.node(a).level == NodeLevel::Room) break;
            auto attr = g.attrs(a);
            if (attr.container && *attr.container == ContainerState::Opened) {
              attr.container = ContainerState::Closed;
              g.attributes[a] = attr;
              break;
            }
          }
          used_sites.insert(*site);
          ++injected;
        }
        break;
      }
      case ExceptionKind::Blocking: {
        std::vector<NodeId> pool =
            spec.moved_objects.empty()
                ? std::vector<NodeId>(spec.task_objects.begin(),
                                      spec.task_objects.end())
                : spec.moved_objects;
        std::vector<NodeId> candidates;
        for (const NodeId& obj : pool)
          if (g.has_node(obj) && g.edge_to(obj) != nullptr &&
              !used_sites.count(obj))
            candidates.push_back(obj);
        if (auto site = pick_from(candidates, used_sites)) {
          FootprintRect fr = node_footprint(g, *site);
          NodeId id = sim_detail::fresh_obstacle_id(g, obstacle_counter);
          // Just inside the approach margin, clear of the object itself.
          double gap = 0.02, ex = 0.12, ey = 0.12;
          sim_detail::add_obstacle(g, g.edge_to(*site)->parent, id,
                                   fr.cx + fr.hx + ex / 2.0 + gap, fr.cy, ex,
                                   ey, 0.12);
          used_sites.insert(*site);
          ++injected;
        }
        break;
      }
      case ExceptionKind::Collision: {
        std::vector<NodeId> candidates;
        for (const NodeId& t : spec.place_targets) {
          if (!g.has_node(t) || used_sites.count(t) ||
              g.node(t).level != NodeLevel::Receptacle || g.is_container(t))
            continue;
          bool holds_task = false;  // do not trip picks happening here too
          for (const NodeId& c : g.children_of(t))
            holds_task |= spec.task_objects.count(c) != 0;
          if (!holds_task) candidates.push_back(t);
        }
        if (auto site = pick_from(candidates, used_sites)) {
          FootprintRect fr = node_footprint(g, *site);
          NodeId id = sim_detail::fresh_obstacle_id(g, obstacle_counter);
          sim_detail::add_obstacle(g, *site, id, fr.cx, fr.cy, fr.hx * 1.9,
                                   fr.hy * 1.9, 0.2);
          used_sites.insert(*site);
          ++injected;
        }
        break;
      }
      case ExceptionKind::Instability: {
        std::vector<NodeId> candidates;
        for (const NodeId& obj : spec.moved_objects)
          if (g.has_node(obj) && g.edge_to(obj) != nullptr &&
              !used_sites.count(obj) &&
              !sim_detail::outermost_closed(g, obj, false))
            candidates.push_back(obj);
        if (auto site = pick_from(candidates, used_sites)) {
          FootprintRect fr = node_footprint(g, *site);
          NodeAttributes a = out.truth.attrs(*site);
          a.supporting = true;
          out.truth.attributes[*site] = a;
          NodeId id = sim_detail::fresh_obstacle_id(g, obstacle_counter);
          // On top: force the On relation regardless of container attrs.
          sim_detail::add_obstacle(g, *site, id, fr.cx, fr.cy, 0.08, 0.08,
                                   0.08);
          out.truth.edges[EdgeKey{*site, id}].relation = SupportRelation::On;
          used_sites.insert(*site);
          ++injected;
        }
        break;
      }
    }
  }

  if (injected < spec.count_per_scene)
    throw Error("insufficient sites to inject " +
                std::to_string(spec.count_per_scene) + " exceptions");
  return out;
}

}  // namespace epog
