#pragma once

#include <vector>

#include "epog/actions.hpp"

namespace epog {

// Deterministic corrective sequences per exception kind. Every sequence ends
// with a retry of the failed action; walks are inserted by the executor, not
// here. Throws when no rule applies.
inline std::vector<Action> rule_resolve(const ExceptionReport& e) {
  const Action& failed = e.failed_action;
  const NodeId& parking = e.parking_place;
  std::vector<Action> seq;

  switch (e.kind) {
    case ExceptionKind::Blocking: {
      // Blockers sit on the same support as the pick target; move each to
      // the parking place, then retry.
      if (failed.kind != ActionKind::Pick)
        throw Error("rule_resolve: blocking outside a pick context");
      for (const NodeId& off : e.involved) {
        seq.push_back(make_pick(failed.place, off));
        seq.push_back(make_place(parking, off));
      }
      break;
    }
    case ExceptionKind::Inaccessibility: {
      if (e.involved.empty())
        throw Error("rule_resolve: inaccessibility without a container");
      seq.push_back(make_open(e.involved.front()));
      break;
    }
    case ExceptionKind::Collision: {
      // The hand holds the object being placed: park it, clear the
      // colliders from the target, take it back, retry.
      if (failed.kind != ActionKind::Place)
        throw Error("rule_resolve: collision outside a place context");
      seq.push_back(make_place(parking, failed.object));
      for (const NodeId& off : e.involved) {
        seq.push_back(make_pick(failed.place, off));
        seq.push_back(make_place(parking, off));
      }
      seq.push_back(make_pick(parking, failed.object));
      break;
    }
    case ExceptionKind::Instability: {
      // Unstack the objects resting on the pick target first.
      if (failed.kind != ActionKind::Pick)
        throw Error("rule_resolve: instability outside a pick context");
      for (const NodeId& top : e.involved) {
        seq.push_back(make_pick(failed.object, top));
        seq.push_back(make_place(parking, top));
      }
      break;
    }
  }

  seq.push_back(failed);  // retry
  return seq;
}

}  // namespace epog
