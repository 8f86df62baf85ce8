#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "epog/actions.hpp"

using namespace epog;

TEST_CASE("grammar formatting follows the prompt primitives") {
  CHECK(format_action(make_pick(NodeId{"counter"}, NodeId{"apple"})) ==
        "Pick(apple, counter)");
  CHECK(format_action(make_place(NodeId{"plate"}, NodeId{"apple"})) ==
        "Place(apple, plate)");
  CHECK(format_action(make_open(NodeId{"fridge"})) == "Open(fridge)");
  CHECK(format_action(make_walk(NodeId{"table"})) == "Walk(table)");
}

TEST_CASE("parse accepts the exemplar reply") {
  auto actions = parse_action_list(
      "Analysis: blah blah.\n"
      "I summarize the action sequence: "
      "[Place(1, 0), Pick(3, 2), Place(3, 0), Pick(1, 0), Place(1, 2)]");
  REQUIRE(actions);
  REQUIRE(actions->size() == 5);
  CHECK((*actions)[0] == make_place(NodeId{"0"}, NodeId{"1"}));
  CHECK((*actions)[1] == make_pick(NodeId{"2"}, NodeId{"3"}));
  CHECK((*actions)[4] == make_place(NodeId{"2"}, NodeId{"1"}));
}

TEST_CASE("parse uses the final bracketed list") {
  auto actions = parse_action_list(
      "[Open(x)] was considered. Final: [Close(cabinet_0)]");
  REQUIRE(actions);
  REQUIRE(actions->size() == 1);
  CHECK((*actions)[0] == make_close(NodeId{"cabinet_0"}));
}

TEST_CASE("garbage replies do not parse") {
  CHECK_FALSE(parse_action_list("no list here"));
  CHECK_FALSE(parse_action_list("[]"));
  CHECK_FALSE(parse_action_list("[Jump(3)]"));
  CHECK_FALSE(parse_action_list("[Pick(a, b, c)]"));
  CHECK_FALSE(parse_action("Pick()"));
}

TEST_CASE("format-parse-format is the identity on random actions") {
  std::mt19937_64 rng(42);
  auto random_id = [&rng]() {
    return NodeId{"node_" + std::to_string(rng() % 50)};
  };
  std::vector<Action> pool;
  for (int i = 0; i < 200; ++i) {
    switch (rng() % 5) {
      case 0: pool.push_back(make_pick(random_id(), random_id())); break;
      case 1: pool.push_back(make_place(random_id(), random_id())); break;
      case 2: pool.push_back(make_open(random_id())); break;
      case 3: pool.push_back(make_close(random_id())); break;
      default: pool.push_back(make_walk(random_id())); break;
    }
  }
  for (const Action& a : pool) {
    std::string text = format_action(a);
    auto parsed = parse_action(text);
    REQUIRE(parsed);
    CHECK(format_action(*parsed) == text);
    CHECK(*parsed == a);
  }
  std::string list = format_action_list(pool);
  auto parsed = parse_action_list(list);
  REQUIRE(parsed);
  CHECK(format_action_list(*parsed) == list);
}
