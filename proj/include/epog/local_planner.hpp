#pragma once

#include <optional>
#include <string>
#include <vector>

#include "epog/actions.hpp"
#include "epog/oracle.hpp"
#include "epog/rule_resolver.hpp"
#include "epog/simulator.hpp"

namespace epog {

struct ResolutionContext {
  int depth = 0;
  int max_depth = 5;
  NodeId parking_place;
  Action pending_retry;
};

// Runs one action in the episode: rollout plus whatever bookkeeping the
// caller layers on (belief sync, trace rows). The local planner stays
// orchestration-only and testable against a thin fake.
class ActionExecutor {
 public:
  virtual ~ActionExecutor() = default;
  virtual RolloutResult execute(const Action& action) = 0;
  virtual const WorldState& world() const = 0;
  virtual std::string label_of(const NodeId& id) const = 0;
};

namespace local_detail {

// Dry-run of the basic action contracts (hand state, object locations,
// toggle direction). Oracle sequences that fail this are replaced by the
// rule resolver's.
inline bool sequence_valid(const WorldState& world,
                           const std::vector<Action>& seq) {
  SceneGraph g = world.truth;
  std::optional<NodeId> held = world.held;
  for (const Action& a : seq) {
    switch (a.kind) {
      case ActionKind::Pick: {
        if (held || !g.has_node(a.object)) return false;
        const SceneEdge* e = g.edge_to(a.object);
        if (e == nullptr || e->parent != a.place) return false;
        g.edges.erase(key_of(*e));
        held = a.object;
        break;
      }
      case ActionKind::Place: {
        if (!held || *held != a.object || !g.has_node(a.place)) return false;
        NodeAttributes attrs = g.attrs(a.place);
        if (!attrs.supporting && !attrs.container) return false;
        SceneEdge e;
        e.parent = a.place;
        e.child = a.object;
        e.relation = attrs.container ? SupportRelation::Contain
                                     : SupportRelation::On;
        e.transform = Pose{};
        g.add_edge(e);
        held.reset();
        break;
      }
      case ActionKind::Open:
      case ActionKind::Close: {
        if (!g.has_node(a.place) || !g.is_container(a.place)) return false;
        ContainerState want = a.kind == ActionKind::Open
                                  ? ContainerState::Closed
                                  : ContainerState::Opened;
        if (*g.attrs(a.place).container != want) return false;
        NodeAttributes attrs = g.attrs(a.place);
        attrs.container = a.kind == ActionKind::Open ? ContainerState::Opened
                                                     : ContainerState::Closed;
        g.attributes[a.place] = attrs;
        break;
      }
      case ActionKind::Walk:
        if (!world.grid.has_anchor(a.place)) return false;
        break;
    }
  }
  return true;
}

inline ExceptionQuery query_from_report(const ExceptionReport& report,
                                        const ActionExecutor& exec) {
  ExceptionQuery q;
  q.failed_action = report.failed_action;
  q.exception_kind = report.kind;
  for (const NodeId& id : report.involved)
    q.involved_nodes.push_back({id, exec.label_of(id)});
  q.parking_place = report.parking_place;
  return q;
}

}  // namespace local_detail

struct ResolveOutcome {
  bool success = false;
  std::vector<Action> actions_executed;
};

// Situated exception resolution: obtain a corrective sequence, execute it
// with walks inserted, recurse on nested exceptions up to ctx.max_depth.
// Success means the originally failed action was eventually re-run and
// succeeded.
inline ResolveOutcome resolve(ActionExecutor& exec,
                              const ExceptionReport& exception,
                              ExceptionResolver& resolver,
                              ResolutionContext ctx) {
  ResolveOutcome out;
  if (ctx.depth >= ctx.max_depth) return out;

  std::vector<Action> seq;
  try {
    seq = resolver.resolve_exception(
        local_detail::query_from_report(exception, exec));
  } catch (const Error&) {
    return out;  // no rule / unresolvable
  }
  if (seq.empty() || seq.back() != exception.failed_action)
    seq.push_back(exception.failed_action);
  if (!local_detail::sequence_valid(exec.world(), seq)) {
    try {
      seq = rule_resolve(exception);
    } catch (const Error&) {
      return out;
    }
  }

  for (const Action& action : seq) {
    // Move to the action's station first; corrective sequences carry no walks.
    if (action.kind != ActionKind::Walk) {
      NodeId station =
          enclosing_receptacle(exec.world().truth, action.place);
      if (exec.world().grid.anchor(station) != exec.world().robot_cell) {
        RolloutResult walk = exec.execute(make_walk(station));
        out.actions_executed.push_back(make_walk(station));
        (void)walk;
      }
    }
    RolloutResult r = exec.execute(action);
    out.actions_executed.push_back(action);
    if (r.exception) {
      ResolutionContext nested = ctx;
      nested.depth = ctx.depth + 1;
      nested.pending_retry = action;
      ResolveOutcome inner = resolve(exec, *r.exception, resolver, nested);
      for (const Action& a : inner.actions_executed)
        out.actions_executed.push_back(a);
      if (!inner.success) return out;
    }
  }
  out.success = true;
  return out;
}

}  // namespace epog
