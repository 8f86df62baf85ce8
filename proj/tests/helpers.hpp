#pragma once

// Shared scene fixtures for the test suites.

#include <random>
#include <string>
#include <vector>

#include "epog/belief.hpp"
#include "epog/scene_io.hpp"
#include "epog/simulator.hpp"

namespace epog::testing {

inline NodeId id(const std::string& s) { return NodeId{s}; }

struct SceneBuilder {
  Scene scene;

  SceneBuilder() {
    scene.grid.cell_size = 0.25;
    scene.grid.width = 1;
    scene.grid.height = 1;
    SceneNode house;
    house.id = id("house");
    house.label = "house";
    house.level = NodeLevel::House;
    house.bbox = Aabb{{5.0, 5.0, 1.25}, {10.0, 10.0, 2.5}};
    scene.graph.add_node(house, NodeAttributes{true, std::nullopt});
  }

  SceneBuilder& grid(int w, int h) {
    scene.grid.width = w;
    scene.grid.height = h;
    return *this;
  }

  SceneBuilder& room(const std::string& name, double x, double y,
                     Cell anchor) {
    SceneNode n;
    n.id = id(name);
    n.label = name.substr(0, name.find('_'));
    n.level = NodeLevel::Room;
    n.bbox = Aabb{{0, 0, 0}, {4.0, 4.0, 2.5}};
    scene.graph.add_node(n, NodeAttributes{true, std::nullopt});
    SceneEdge e;
    e.parent = id("house");
    e.child = n.id;
    e.relation = SupportRelation::Contain;
    e.transform = Pose{x - 5.0, y - 5.0, 0.0, 0.0};
    scene.graph.add_edge(e);
    scene.grid.anchors[n.id] = anchor;
    return *this;
  }

  SceneBuilder& receptacle(const std::string& name, const std::string& room,
                           double x, double y, Cell anchor,
                           std::optional<ContainerState> container = {},
                           double w = 0.6, double d = 0.6, double h = 0.8) {
    SceneNode n;
    n.id = id(name);
    n.label = name.substr(0, name.find('_'));
    n.level = NodeLevel::Receptacle;
    n.bbox = Aabb{{0, 0, h / 2.0}, {w, d, h}};
    scene.graph.add_node(n, NodeAttributes{true, container});
    WorldPose rp = world_pose(scene.graph, id(room));
    SceneEdge e;
    e.parent = id(room);
    e.child = n.id;
    e.relation = SupportRelation::Contain;
    e.transform = Pose{x - rp.x, y - rp.y, 0.0, 0.0};
    scene.graph.add_edge(e);
    scene.grid.anchors[n.id] = anchor;
    return *this;
  }

  // Object stacked onto any parent at a world offset from the parent center.
  SceneBuilder& object(const std::string& name, const std::string& parent,
                       double dx = 0.0, double dy = 0.0, double w = 0.1,
                       double d = 0.1, double h = 0.1, bool supporting = false) {
    SceneNode n;
    n.id = id(name);
    n.label = name.substr(0, name.find('_'));
    n.level = NodeLevel::Object;
    n.bbox = Aabb{{0, 0, h / 2.0}, {w, d, h}};
    scene.graph.add_node(n, NodeAttributes{supporting, std::nullopt});
    const SceneGraph& g = scene.graph;
    WorldPose pp = world_pose(g, id(parent));
    const Aabb& pbb = g.node(id(parent)).bbox;
    SceneEdge e;
    e.parent = id(parent);
    e.child = n.id;
    e.relation = g.is_container(id(parent)) ? SupportRelation::Contain
                                            : SupportRelation::On;
    e.transform = Pose{dx, dy,
                       pbb.center[2] + pbb.extent[2] / 2.0 + h / 2.0, 0.0};
    scene.graph.add_edge(e);
    return *this;
  }
};

// A kitchen/livingroom two-room house on a 26x10 grid with a wall and door.
//
//   kitchen (x 0..12)  |  livingroom (x 13..25)
//   fridge, countertop, table_k, sidetable | table_l, shelf
inline Scene two_room_scene(ContainerState fridge_state = ContainerState::Closed) {
  SceneBuilder b;
  b.grid(26, 10);
  for (int y = 0; y < 10; ++y) {
    b.scene.grid.blocked.insert({12, y});
  }
  b.scene.grid.blocked.erase({12, 5});

  b.room("kitchen_0", 1.5, 1.25, Cell{6, 5});
  b.room("livingroom_0", 4.75, 1.25, Cell{19, 5});
  b.receptacle("fridge_0", "kitchen_0", 0.5, 0.5, Cell{2, 3}, fridge_state);
  b.receptacle("countertop_0", "kitchen_0", 1.5, 0.5, Cell{6, 3});
  b.receptacle("table_0", "kitchen_0", 2.5, 0.5, Cell{10, 3});
  b.receptacle("sidetable_0", "kitchen_0", 0.5, 2.0, Cell{2, 7});
  b.receptacle("table_1", "livingroom_0", 4.0, 0.5, Cell{16, 3});
  b.receptacle("shelf_0", "livingroom_0", 5.5, 0.5, Cell{22, 3});

  // Receptacle footprints are blocked cells.
  auto block_rect = [&b](double cx, double cy) {
    int gx = static_cast<int>(cx / 0.25);
    int gy = static_cast<int>(cy / 0.25);
    for (int dx = -1; dx <= 0; ++dx)
      for (int dy = -1; dy <= 0; ++dy)
        b.scene.grid.blocked.insert({gx + dx, gy + dy});
  };
  block_rect(0.5, 0.5);
  block_rect(1.5, 0.5);
  block_rect(2.5, 0.5);
  block_rect(0.5, 2.0);
  block_rect(4.0, 0.5);
  block_rect(5.5, 0.5);
  return b.scene;
}

// Random well- or ill-formed graphs for the validate property test.
struct RandomGraph {
  SceneGraph graph;
  bool well_formed = true;
};

inline RandomGraph random_graph(std::mt19937_64& rng, int max_nodes = 30) {
  SceneBuilder b;
  int n_rooms = 1 + static_cast<int>(rng() % 3);
  std::vector<std::string> rooms, rcpts, objects;
  for (int r = 0; r < n_rooms; ++r) {
    std::string rm = "room_" + std::to_string(r);
    b.room(rm, 1.0 + r, 1.0, Cell{r, 0});
    rooms.push_back(rm);
    int n_rcpt = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < n_rcpt; ++k) {
      std::string rc = "rcpt_" + std::to_string(r) + "_" + std::to_string(k);
      bool container = rng() % 3 == 0;
      b.receptacle(rc, rm, 1.0 + r, 0.5, Cell{r, k + 1},
                   container ? std::optional<ContainerState>(
                                   rng() % 2 ? ContainerState::Opened
                                             : ContainerState::Closed)
                             : std::nullopt);
      rcpts.push_back(rc);
    }
  }
  int n_obj = static_cast<int>(rng() % 8);
  for (int i = 0; i < n_obj && static_cast<int>(b.scene.graph.nodes.size()) <
                                   max_nodes;
       ++i) {
    std::string o = "obj_" + std::to_string(i);
    const std::string& parent =
        (i > 0 && rng() % 4 == 0) ? objects[rng() % objects.size()]
                                  : rcpts[rng() % rcpts.size()];
    if (i > 0 && rng() % 4 == 0) {
      // Stacking onto an object requires a supporting parent; flip it on.
      NodeAttributes a = b.scene.graph.attrs(id(parent));
      a.supporting = true;
      b.scene.graph.attributes[id(parent)] = a;
    }
    b.object(o, parent, 0.01 * i, 0.0);
    objects.push_back(o);
  }

  RandomGraph out{b.scene.graph, true};

  // Sometimes break the graph on purpose.
  switch (rng() % 8) {
    case 0: {  // self-loop
      if (!objects.empty()) {
        SceneEdge e;
        e.parent = id(objects[0]);
        e.child = id(objects[0]);
        e.relation = SupportRelation::On;
        e.transform = Pose{};
        out.graph.add_edge(e);
        out.well_formed = false;
      }
      break;
    }
    case 1: {  // second parent
      if (!objects.empty() && rcpts.size() >= 2) {
        const SceneEdge* cur = out.graph.edge_to(id(objects[0]));
        NodeId other = id(rcpts[0]) == cur->parent ? id(rcpts[1]) : id(rcpts[0]);
        SceneEdge e;
        e.parent = other;
        e.child = id(objects[0]);
        e.relation = SupportRelation::On;
        e.transform = Pose{};
        out.graph.add_edge(e);
        out.well_formed = false;
      }
      break;
    }
    case 2: {  // level inversion: object supports a receptacle
      if (!objects.empty() && !rcpts.empty()) {
        NodeId rc = id(rcpts[0]);
        EdgeKey old = key_of(*out.graph.edge_to(rc));
        out.graph.edges.erase(old);
        SceneEdge e;
        e.parent = id(objects[0]);
        e.child = rc;
        e.relation = SupportRelation::On;
        e.transform = Pose{};
        out.graph.add_edge(e);
        out.well_formed = false;
      }
      break;
    }
    case 3: {  // contain edge without container attribute
      if (!objects.empty()) {
        const SceneEdge* cur = out.graph.edge_to(id(objects[0]));
        if (cur != nullptr &&
            !out.graph.is_container(cur->parent)) {
          SceneEdge e = *cur;
          e.relation = SupportRelation::Contain;
          out.graph.edges[key_of(e)] = e;
          out.well_formed = false;
        }
      }
      break;
    }
    case 4: {  // bad bbox
      if (!objects.empty()) {
        out.graph.nodes[id(objects[0])].bbox.extent[1] = 0.0;
        out.well_formed = false;
      }
      break;
    }
    default:
      break;
  }
  return out;
}

}  // namespace epog::testing
