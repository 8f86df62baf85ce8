#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "epog/actions.hpp"
#include "epog/rule_resolver.hpp"
#include "epog/scene_graph.hpp"

namespace epog {

class ExhaustionError : public Error {
 public:
  explicit ExhaustionError(const std::string& what) : Error(what) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(what) {}
};

struct LabeledNode {
  NodeId id;
  std::string label;

  auto operator<=>(const LabeledNode&) const = default;
};

struct LocationQuery {
  std::string object_label;
  std::vector<LabeledNode> candidate_rooms;
  std::map<NodeId, std::vector<LabeledNode>> candidate_receptacles_by_room;
};

struct LocationAnswer {
  NodeId room;
  NodeId receptacle;

  bool operator==(const LocationAnswer&) const = default;
};

struct ExceptionQuery {
  Action failed_action;
  ExceptionKind exception_kind = ExceptionKind::Blocking;
  std::vector<LabeledNode> involved_nodes;
  NodeId parking_place;
};

// Commonsense location prior: where might this object be?
class LocationOracle {
 public:
  virtual ~LocationOracle() = default;
  virtual LocationAnswer predict_location(const LocationQuery& query,
                                          const std::set<NodeId>& excluded) = 0;
};

// Produces a corrective action sequence for a motion exception.
class ExceptionResolver {
 public:
  virtual ~ExceptionResolver() = default;
  virtual std::vector<Action> resolve_exception(const ExceptionQuery& query) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mock backend.

struct MockOracleConfig {
  std::uint64_t seed = 0;
  // Ranked location hints per object label; the first resolvable entry is
  // the intended "true" location.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>>
      prior_table;
  // Probability that the top-ranked hint is actually answered first.
  double accuracy = 1.0;
};

namespace oracle_detail {

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t mix(std::uint64_t seed, const std::string& a,
                         const std::string& b) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  h = fnv1a64(a, h);
  h = fnv1a64(b, h);
  return h;
}

inline double u01(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace oracle_detail

// Pure function of (config, query, excluded): no mutable RNG state.
class MockLocationOracle : public LocationOracle {
 public:
  explicit MockLocationOracle(MockOracleConfig config)
      : config_(std::move(config)) {}

  // The full ranking the mock would answer from, before exclusions.
  std::vector<LocationAnswer> ranking(const LocationQuery& query) const {
    std::vector<LocationAnswer> ranked;
    std::set<NodeId> used;
    auto add = [&](const LocationAnswer& a) {
      if (used.insert(a.receptacle).second) ranked.push_back(a);
    };

    auto prior = config_.prior_table.find(query.object_label);
    if (prior != config_.prior_table.end()) {
      for (const auto& [room_label, rcpt_label] : prior->second) {
        for (const LabeledNode& room : query.candidate_rooms) {
          if (room.label != room_label && room.id.value != room_label) continue;
          auto it = query.candidate_receptacles_by_room.find(room.id);
          if (it == query.candidate_receptacles_by_room.end()) continue;
          for (const LabeledNode& rcpt : it->second)
            if (rcpt.label == rcpt_label || rcpt.id.value == rcpt_label)
              add({room.id, rcpt.id});
        }
      }
    }

    std::vector<LocationAnswer> rest;
    for (const LabeledNode& room : query.candidate_rooms) {
      auto it = query.candidate_receptacles_by_room.find(room.id);
      if (it == query.candidate_receptacles_by_room.end()) continue;
      for (const LabeledNode& rcpt : it->second)
        if (!used.count(rcpt.id)) rest.push_back({room.id, rcpt.id});
    }
    std::mt19937_64 rng(
        oracle_detail::mix(config_.seed, query.object_label, "shuffle"));
    std::shuffle(rest.begin(), rest.end(), rng);
    for (const LocationAnswer& a : rest) add(a);

    // With probability 1 - accuracy the top hint is answered second.
    double coin = oracle_detail::u01(
        oracle_detail::mix(config_.seed, query.object_label, "accuracy"));
    if (coin >= config_.accuracy && ranked.size() >= 2)
      std::swap(ranked[0], ranked[1]);
    return ranked;
  }

  LocationAnswer predict_location(const LocationQuery& query,
                                  const std::set<NodeId>& excluded) override {
    for (const LocationAnswer& a : ranking(query))
      if (!excluded.count(a.receptacle)) return a;
    throw ExhaustionError("all candidate receptacles excluded for '" +
                          query.object_label + "'");
  }

  const MockOracleConfig& config() const { return config_; }

 private:
  MockOracleConfig config_;
};

class MockExceptionResolver : public ExceptionResolver {
 public:
  std::vector<Action> resolve_exception(const ExceptionQuery& query) override {
    ExceptionReport report;
    report.kind = query.exception_kind;
    report.failed_action = query.failed_action;
    for (const LabeledNode& n : query.involved_nodes)
      report.involved.push_back(n.id);
    report.parking_place = query.parking_place;
    return rule_resolve(report);
  }
};

// ---------------------------------------------------------------------------
// Prompt templates. Loaded from a prompts/ directory when present, with
// compiled-in defaults so library use does not depend on the working
// directory. Placeholders use <angle_bracket> names.

struct PromptLibrary {
  std::string exception_system =
      "As an assistive robot, you must implement corrective actions to "
      "address errors that arise during task executions.";

  std::string exception_user =
      "Task description: You will resolve errors during task executions "
      "using the following primitives: Pick(x, y) to pick item x from y, "
      "Place(x, y) to place item x on y, Open(x) to open x, and Close(x) to "
      "close x. Additionally, you may temporarily place objects in a "
      "designated parking area.\n"
      "Example: The motion exception is: \"Placing v1 on v2 fails because "
      "v1 collides with v3. The parking place is v0.\"\n"
      "Analysis: Object v1 collides with v3, so v3 must be adjusted to allow "
      "v1 to be placed on v2.\n"
      "Robot Hand State: Since the failed action was a placement, my hand is "
      "occupied with v1.\n"
      "Steps to Resolve:\n"
      "1. Place v1 in the parking area: Place(1, 0).\n"
      "2. Remove the collision by picking v3: Pick(3, 2).\n"
      "3. Move v3 to the parking area: Place(3, 0).\n"
      "4. Pick v1 from the parking area: Pick(1, 0).\n"
      "5. Retry the failed action by placing v1 on v2: Place(1, 2).\n"
      "I summarize the action sequence: [Place(1, 0), Pick(3, 2), "
      "Place(3, 0), Pick(1, 0), Place(1, 2)]\n"
      "Question: You attempted to <failure_action>, but it failed due to "
      "<exception>. The parking place is <parking_place>.";

  std::string location_room =
      "You are an assistive robot searching a house. Which room most likely "
      "contains the <object>? Candidate rooms: <candidates>.\n"
      "Answer with a single line of the form `Room: <name>`.";

  std::string location_receptacle =
      "You are an assistive robot searching the <room>. Which receptacle "
      "most likely holds the <object>? Candidate receptacles: <candidates>.\n"
      "Answer with a single line of the form `Receptacle: <name>`.";

  static PromptLibrary load(const std::string& dir) {
    PromptLibrary lib;
    auto read = [&dir](const std::string& name, std::string& into) {
      std::ifstream in(dir + "/" + name);
      if (!in) return;
      std::ostringstream ss;
      ss << in.rdbuf();
      std::string text = ss.str();
      while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
        text.pop_back();
      if (!text.empty()) into = text;
    };
    read("exception_system.txt", lib.exception_system);
    read("exception_user.txt", lib.exception_user);
    read("location_room.txt", lib.location_room);
    read("location_receptacle.txt", lib.location_receptacle);
    return lib;
  }
};

inline std::string substitute_placeholder(std::string text,
                                          const std::string& name,
                                          const std::string& value) {
  const std::string token = "<" + name + ">";
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

// Human-readable phrasing used for the <failure_action> placeholder.
inline std::string describe_action(const Action& a) {
  switch (a.kind) {
    case ActionKind::Pick:
      return "pick " + a.object.value + " from " + a.place.value;
    case ActionKind::Place:
      return "place " + a.object.value + " on " + a.place.value;
    case ActionKind::Open: return "open " + a.place.value;
    case ActionKind::Close: return "close " + a.place.value;
    case ActionKind::Walk: return "walk to " + a.place.value;
  }
  return "?";
}

inline std::string describe_exception(const ExceptionQuery& q) {
  std::string subject =
      q.involved_nodes.empty() ? std::string("an obstacle")
                               : q.involved_nodes.front().label;
  switch (q.exception_kind) {
    case ExceptionKind::Blocking:
      return "blocking: " + subject + " blocks access to " +
             q.failed_action.object.value;
    case ExceptionKind::Inaccessibility:
      return "inaccessibility: " + subject + " is closed";
    case ExceptionKind::Collision:
      return "collision: " + q.failed_action.object.value + " collides with " +
             subject;
    case ExceptionKind::Instability:
      return "instability: " + subject + " is stacked on " +
             q.failed_action.object.value;
  }
  return "?";
}

}  // namespace epog
