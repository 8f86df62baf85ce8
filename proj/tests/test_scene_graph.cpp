#include <catch2/catch_amalgamated.hpp>

#include "epog/scene_graph.hpp"
#include "epog/scene_io.hpp"

#include "helpers.hpp"

using namespace epog;
using epog::testing::id;
using epog::testing::SceneBuilder;

namespace {

SceneGraph minimal_tree() {
  SceneBuilder b;
  b.room("kitchen_0", 1.0, 1.0, Cell{0, 0});
  b.receptacle("table_0", "kitchen_0", 1.0, 0.5, Cell{1, 0});
  b.object("apple_0", "table_0");
  return b.scene.graph;
}

}  // namespace

TEST_CASE("minimal well-formed tree validates") {
  SceneGraph g = minimal_tree();
  CHECK(validate(g).empty());
}

TEST_CASE("self-loop is reported as not a tree") {
  SceneGraph g = minimal_tree();
  SceneEdge e;
  e.parent = id("apple_0");
  e.child = id("apple_0");
  e.relation = SupportRelation::On;
  e.transform = Pose{};
  g.add_edge(e);
  bool found = false;
  for (const Violation& v : validate(g))
    if (v.rule == "not a tree" && v.subject.find("apple_0") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("contain edge needs a container attribute") {
  SceneGraph g = minimal_tree();
  SceneEdge e = g.edges.at(EdgeKey{id("table_0"), id("apple_0")});
  e.relation = SupportRelation::Contain;
  g.edges[key_of(e)] = e;
  bool found = false;
  for (const Violation& v : validate(g))
    if (v.rule == "container attribute missing") found = true;
  CHECK(found);
}

TEST_CASE("two house roots are rejected") {
  SceneGraph g = minimal_tree();
  SceneNode second;
  second.id = id("house2");
  second.label = "house";
  second.level = NodeLevel::House;
  second.bbox = Aabb{{0, 0, 0}, {1, 1, 1}};
  g.add_node(second);
  bool found = false;
  for (const Violation& v : validate(g))
    if (v.rule == "house count") found = true;
  CHECK(found);
}

TEST_CASE("parent_of") {
  SceneGraph g = minimal_tree();
  CHECK(parent_of(g, id("apple_0")) == id("table_0"));
  CHECK_FALSE(parent_of(g, id("house")).has_value());
  CHECK_THROWS_AS(parent_of(g, id("nope")), Error);
}

TEST_CASE("enclosing_room") {
  SceneGraph g = minimal_tree();
  CHECK(enclosing_room(g, id("apple_0")) == id("kitchen_0"));
  CHECK(enclosing_room(g, id("kitchen_0")) == id("kitchen_0"));
  CHECK_THROWS_AS(enclosing_room(g, id("house")), Error);
}

TEST_CASE("enclosing_receptacle resolves through object stacks") {
  SceneBuilder b;
  b.room("kitchen_0", 1.0, 1.0, Cell{0, 0});
  b.receptacle("table_0", "kitchen_0", 1.0, 0.5, Cell{1, 0});
  b.object("plate_0", "table_0", 0, 0, 0.26, 0.26, 0.03, true);
  b.object("apple_0", "plate_0");
  CHECK(enclosing_receptacle(b.scene.graph, id("apple_0")) == id("table_0"));
  CHECK(enclosing_receptacle(b.scene.graph, id("table_0")) == id("table_0"));
}

TEST_CASE("serialization round trip is identity") {
  SceneBuilder b;
  b.grid(8, 8);
  b.room("kitchen_0", 1.0, 1.0, Cell{0, 0});
  b.receptacle("fridge_0", "kitchen_0", 1.0, 0.5, Cell{1, 0},
               ContainerState::Closed);
  b.object("cup_0", "fridge_0");
  b.scene.graph.nodes[id("cup_0")].geometry.push_back(
      GeometryPrimitive{"box", {0.1, 0.1, 0.1}});
  // One estimated edge: no transform.
  SceneNode missing;
  missing.id = id("cloth_0");
  missing.label = "cloth";
  missing.level = NodeLevel::Object;
  missing.bbox = Aabb{{0, 0, 0.025}, {0.2, 0.2, 0.05}};
  b.scene.graph.add_node(missing);
  SceneEdge est;
  est.parent = id("fridge_0");
  est.child = id("cloth_0");
  est.relation = SupportRelation::Contain;
  b.scene.graph.add_edge(est);

  std::string text = serialize_scene(b.scene);
  Scene back = deserialize_scene(text);
  CHECK(back.graph == b.scene.graph);
  CHECK(back.grid == b.scene.grid);
  CHECK_FALSE(
      back.graph.edges.at(EdgeKey{id("fridge_0"), id("cloth_0")}).transform);
  CHECK(serialize_scene(back) == text);
}

TEST_CASE("empty-object house round trips") {
  SceneBuilder b;
  b.grid(4, 4);
  b.room("kitchen_0", 1.0, 1.0, Cell{0, 0});
  Scene back = deserialize_scene(serialize_scene(b.scene));
  CHECK(back.graph == b.scene.graph);
}

TEST_CASE("malformed relation string is a schema error with a path") {
  SceneBuilder b;
  b.room("kitchen_0", 1.0, 1.0, Cell{0, 0});
  Json j = to_json(b.scene.graph);
  j["grid"] = to_json(b.scene.grid);
  j["edges"][0]["relation"] = "under";
  try {
    deserialize_scene(j.dump());
    FAIL("expected schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("edges[0].relation") != std::string::npos);
  }
}

TEST_CASE("validate matches the generator's well-formedness flag") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    epog::testing::RandomGraph rg = epog::testing::random_graph(rng);
    bool clean = validate(rg.graph).empty();
    INFO("iteration " << i);
    CHECK(clean == rg.well_formed);
  }
}

TEST_CASE("round trip holds on random well-formed graphs") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    epog::testing::RandomGraph rg = epog::testing::random_graph(rng);
    if (!rg.well_formed) continue;
    ++checked;
    Json j = to_json(rg.graph);
    CHECK(scene_graph_from_json(j) == rg.graph);
    // enclosing_room is a Room-level ancestor for every non-root node.
    for (const auto& [nid, n] : rg.graph.nodes) {
      if (n.level == NodeLevel::House) continue;
      NodeId room = enclosing_room(rg.graph, nid);
      CHECK(rg.graph.node(room).level == NodeLevel::Room);
    }
  }
  CHECK(checked > 50);
}
