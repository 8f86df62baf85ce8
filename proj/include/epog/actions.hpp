#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "epog/scene_graph.hpp"

namespace epog {

enum class ActionKind { Pick, Place, Open, Close, Walk };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Pick: return "Pick";
    case ActionKind::Place: return "Place";
    case ActionKind::Open: return "Open";
    case ActionKind::Close: return "Close";
    case ActionKind::Walk: return "Walk";
  }
  return "?";
}

// The five executable primitives. `place` is the non-object argument:
// Pick's source, Place's target, the node for Open/Close/Walk.
struct Action {
  ActionKind kind = ActionKind::Walk;
  NodeId object;  // manipulated object; empty for Open/Close/Walk
  NodeId place;

  auto operator<=>(const Action&) const = default;
};

inline Action make_pick(NodeId source, NodeId object) {
  return {ActionKind::Pick, std::move(object), std::move(source)};
}
inline Action make_place(NodeId target, NodeId object) {
  return {ActionKind::Place, std::move(object), std::move(target)};
}
inline Action make_open(NodeId node) {
  return {ActionKind::Open, NodeId{}, std::move(node)};
}
inline Action make_close(NodeId node) {
  return {ActionKind::Close, NodeId{}, std::move(node)};
}
inline Action make_walk(NodeId target) {
  return {ActionKind::Walk, NodeId{}, std::move(target)};
}

// Grammar order follows the prompt primitives: Pick(x, y) picks item x from
// y, Place(x, y) places item x on y.
inline std::string format_action(const Action& a) {
  switch (a.kind) {
    case ActionKind::Pick:
      return "Pick(" + a.object.value + ", " + a.place.value + ")";
    case ActionKind::Place:
      return "Place(" + a.object.value + ", " + a.place.value + ")";
    case ActionKind::Open: return "Open(" + a.place.value + ")";
    case ActionKind::Close: return "Close(" + a.place.value + ")";
    case ActionKind::Walk: return "Walk(" + a.place.value + ")";
  }
  return "?";
}

inline std::string format_action_list(const std::vector<Action>& actions) {
  std::string out = "[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ", ";
    out += format_action(actions[i]);
  }
  return out + "]";
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

// Parses one "Kind(arg)" or "Kind(arg, arg)" term. Case-insensitive on the
// kind; arguments are taken verbatim as node references.
inline std::optional<Action> parse_action(const std::string& text) {
  std::string s = detail::trim(text);
  std::size_t open = s.find('(');
  std::size_t close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    return std::nullopt;
  std::string name = detail::lower(detail::trim(s.substr(0, open)));
  std::string args = s.substr(open + 1, close - open - 1);

  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = args.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(detail::trim(args.substr(start)));
      break;
    }
    parts.push_back(detail::trim(args.substr(start, comma - start)));
    start = comma + 1;
  }
  if (parts.empty() || parts[0].empty()) return std::nullopt;

  if (name == "pick" && parts.size() == 2)
    return make_pick(NodeId{parts[1]}, NodeId{parts[0]});
  if (name == "place" && parts.size() == 2)
    return make_place(NodeId{parts[1]}, NodeId{parts[0]});
  if (name == "open" && parts.size() == 1) return make_open(NodeId{parts[0]});
  if (name == "close" && parts.size() == 1) return make_close(NodeId{parts[0]});
  if (name == "walk" && parts.size() == 1) return make_walk(NodeId{parts[0]});
  return std::nullopt;
}

// Extracts the final bracketed action list from free-form text, e.g.
// "... I summarize the action sequence: [Place(1, 0), Pick(3, 2)]".
// Returns nullopt unless every term inside the brackets parses.
inline std::optional<std::vector<Action>> parse_action_list(
    const std::string& text) {
  std::size_t rb = text.rfind(']');
  if (rb == std::string::npos) return std::nullopt;
  std::size_t lb = text.rfind('[', rb);
  if (lb == std::string::npos) return std::nullopt;
  std::string body = text.substr(lb + 1, rb - lb - 1);

  std::vector<Action> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    while (pos < body.size() &&
           (std::isspace(static_cast<unsigned char>(body[pos])) ||
            body[pos] == ','))
      ++pos;
    if (pos >= body.size()) break;
    std::size_t open = body.find('(', pos);
    if (open == std::string::npos) return std::nullopt;
    std::size_t close = body.find(')', open);
    if (close == std::string::npos) return std::nullopt;
    std::optional<Action> a = parse_action(body.substr(pos, close - pos + 1));
    if (!a) return std::nullopt;
    out.push_back(*a);
    pos = close + 1;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

enum class ExceptionKind { Blocking, Inaccessibility, Collision, Instability };

inline const char* to_string(ExceptionKind k) {
  switch (k) {
    case ExceptionKind::Blocking: return "blocking";
    case ExceptionKind::Inaccessibility: return "inaccessibility";
    case ExceptionKind::Collision: return "collision";
    case ExceptionKind::Instability: return "instability";
  }
  return "?";
}

// Typed motion-exception record raised by a rollout.
struct ExceptionReport {
  ExceptionKind kind = ExceptionKind::Blocking;
  Action failed_action;
  std::vector<NodeId> involved;  // non-empty; Inaccessibility names the container
  NodeId parking_place;

  bool operator==(const ExceptionReport&) const = default;
};

}  // namespace epog
