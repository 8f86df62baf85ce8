#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "epog/scene_io.hpp"
#include "epog/simulator.hpp"

namespace epog {

// Procedurally generated desk-scale households: 2-4 rooms in a strip,
// 3-6 receptacles per room along the walls, task objects seeded onto
// receptacles or into containers. Same seed, same bytes.

struct GeneratedCase {
  Scene scene;
  Json task;  // task file contents
};

namespace gen_detail {

struct ReceptacleType {
  std::string label;
  bool container = false;
  double height = 0.8;
};

struct RoomType {
  std::string label;
  std::vector<ReceptacleType> required;
  std::vector<ReceptacleType> optional;
};

inline const std::vector<RoomType>& room_library() {
  static const std::vector<RoomType> lib{
      {"kitchen",
       {{"countertop", false, 0.9},
        {"diningtable", false, 0.75},
        {"fridge", true, 1.8}},
       {{"cabinet", true, 1.0}, {"sink", false, 0.85}, {"shelf", false, 1.2}}},
      {"livingroom",
       {{"sofa", false, 0.45}, {"coffeetable", false, 0.45}},
       {{"tvstand", false, 0.5},
        {"cabinet", true, 1.0},
        {"shelf", false, 1.2},
        {"sidetable", false, 0.6}}},
      {"bedroom",
       {{"bed", false, 0.5}, {"desk", false, 0.75}},
       {{"nightstand", false, 0.55},
        {"dresser", true, 1.1},
        {"shelf", false, 1.2},
        {"sidetable", false, 0.6}}},
      {"bathroom",
       {{"faucet", false, 0.85}},
       {{"bathtub", false, 0.5},
        {"cabinet", true, 1.0},
        {"shelf", false, 1.2}}}};
  return lib;
}

struct ObjectType {
  std::array<double, 3> extent{0.1, 0.1, 0.1};
  bool supporting = false;
};

inline const std::map<std::string, ObjectType>& object_library() {
  static const std::map<std::string, ObjectType> lib{
      {"apple", {{0.10, 0.10, 0.10}, false}},
      {"bread", {{0.20, 0.10, 0.10}, false}},
      {"fork", {{0.15, 0.04, 0.02}, false}},
      {"plate", {{0.26, 0.26, 0.03}, true}},
      {"alarmclock", {{0.10, 0.08, 0.10}, false}},
      {"cd", {{0.12, 0.12, 0.01}, false}},
      {"laptop", {{0.30, 0.24, 0.03}, false}},
      {"pencil", {{0.15, 0.02, 0.02}, false}},
      {"remote", {{0.15, 0.05, 0.03}, false}},
      {"kettle", {{0.20, 0.20, 0.25}, false}},
      {"cup", {{0.08, 0.08, 0.10}, false}},
      {"soapbottle", {{0.07, 0.07, 0.20}, false}},
      {"cloth", {{0.20, 0.20, 0.05}, false}},
      {"book", {{0.20, 0.15, 0.03}, false}},
      {"vase", {{0.10, 0.10, 0.30}, false}},
      {"can", {{0.07, 0.07, 0.12}, false}},
      {"box", {{0.20, 0.20, 0.15}, false}},
      {"bottle", {{0.07, 0.07, 0.25}, false}}};
  return lib;
}

// Goal predicates of one benchmark family: children -> parent label.
struct FamilyGoal {
  std::vector<std::string> children;
  std::string parent;
};

struct Family {
  int id;
  std::string name;
  std::vector<std::string> required_rooms;
  std::vector<FamilyGoal> goals;
};

inline const std::vector<Family>& families() {
  static const std::vector<Family> fams{
      {1,
       "breakfast",
       {"kitchen"},
       {{{"apple", "bread", "fork"}, "plate"}, {{"plate"}, "diningtable"}}},
      {2,
       "bedroom_work",
       {"bedroom"},
       {{{"alarmclock", "cd", "laptop", "pencil"}, "desk"}}},
      {3,
       "movie_snack",
       {"livingroom", "kitchen"},
       {{{"remote"}, "sofa"},
        {{"bread"}, "plate"},
        {{"plate"}, "diningtable"}}},
      {4,
       "tea_relax",
       {"kitchen", "livingroom"},
       {{{"kettle"}, "countertop"},
        {{"cup"}, "diningtable"},
        {{"remote"}, "sofa"}}},
      {5, "bath_prep", {"bathroom"}, {{{"soapbottle", "cloth"}, "faucet"}}}};
  return fams;
}

inline const Family& family(int id) {
  for (const Family& f : families())
    if (f.id == id) return f;
  throw Error("unknown task family " + std::to_string(id));
}

constexpr int kRoomCells = 12;  // interior width/height per room
constexpr int kRoomPitch = 13;  // interior + shared wall
constexpr double kCellSize = 0.25;

inline double cell_center(int c) { return (c + 0.5) * kCellSize; }

// Six 2x2 wall slots per room: {footprint corner, anchor cell}, local coords.
struct Slot {
  int lx, ly, ax, ay;
};

inline const std::array<Slot, 6>& room_slots() {
  static const std::array<Slot, 6> slots{Slot{1, 10, 2, 9}, Slot{5, 10, 6, 9},
                                         Slot{9, 10, 10, 9}, Slot{1, 1, 2, 3},
                                         Slot{5, 1, 6, 3}, Slot{9, 1, 10, 3}};
  return slots;
}

}  // namespace gen_detail

inline GeneratedCase generate_scene(int family_id, std::uint64_t seed) {
  using namespace gen_detail;
  const Family& fam = family(family_id);
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + family_id);

  // --- rooms ----------------------------------------------------------------
  std::vector<std::string> rooms = fam.required_rooms;
  {
    std::vector<std::string> pool;
    for (const RoomType& rt : room_library()) {
      bool used = false;
      for (const std::string& r : rooms) used |= (r == rt.label);
      if (!used) pool.push_back(rt.label);
    }
    std::size_t target = 2 + rng() % 3;  // 2..4
    if (target < rooms.size()) target = rooms.size();
    while (rooms.size() < target && !pool.empty()) {
      std::size_t i = rng() % pool.size();
      rooms.push_back(pool[i]);
      pool.erase(pool.begin() + static_cast<long>(i));
    }
  }
  const int n_rooms = static_cast<int>(rooms.size());

  // Receptacle rosters, with a guaranteed empty parking surface somewhere.
  std::vector<std::vector<ReceptacleType>> rosters(n_rooms);
  for (int r = 0; r < n_rooms; ++r) {
    const RoomType* rt = nullptr;
    for (const RoomType& cand : room_library())
      if (rooms[r] == cand.label) rt = &cand;
    rosters[r] = rt->required;
    std::vector<ReceptacleType> opts = rt->optional;
    std::size_t want = 3 + rng() % 4;  // 3..6
    if (want < rosters[r].size()) want = rosters[r].size();
    while (rosters[r].size() < want && !opts.empty()) {
      std::size_t i = rng() % opts.size();
      rosters[r].push_back(opts[i]);
      opts.erase(opts.begin() + static_cast<long>(i));
    }
  }
  {
    bool have_sidetable = false;
    for (const auto& roster : rosters)
      for (const ReceptacleType& rc : roster)
        have_sidetable |= (rc.label == "sidetable");
    if (!have_sidetable) {
      ReceptacleType side{"sidetable", false, 0.6};
      if (rosters[0].size() < 6)
        rosters[0].push_back(side);
      else
        rosters[0].back() = side;  // required types sit at the front
    }
  }

  // --- grid -----------------------------------------------------------------
  GeneratedCase out;
  OccupancyGrid& grid = out.scene.grid;
  grid.cell_size = kCellSize;
  grid.width = n_rooms * kRoomPitch + 1;
  grid.height = kRoomCells + 2;
  for (int x = 0; x < grid.width; ++x) {
    grid.blocked.insert({x, 0});
    grid.blocked.insert({x, grid.height - 1});
  }
  for (int r = 0; r <= n_rooms; ++r) {
    int wx = r * kRoomPitch;
    for (int y = 0; y < grid.height; ++y) grid.blocked.insert({wx, y});
    if (r > 0 && r < n_rooms) {
      grid.blocked.erase({wx, 6});
      grid.blocked.erase({wx, 7});
    }
  }

  // --- graph ----------------------------------------------------------------
  SceneGraph& g = out.scene.graph;
  const double house_w = grid.width * kCellSize;
  const double house_h = grid.height * kCellSize;
  SceneNode house;
  house.id = NodeId{"house"};
  house.label = "house";
  house.level = NodeLevel::House;
  house.bbox =
      Aabb{{house_w / 2.0, house_h / 2.0, 1.25}, {house_w, house_h, 2.5}};
  g.add_node(house, NodeAttributes{true, std::nullopt});

  std::map<std::string, int> label_counter;
  auto fresh_id = [&label_counter](const std::string& label) {
    return NodeId{label + "_" + std::to_string(label_counter[label]++)};
  };

  struct PlacedRcpt {
    NodeId id;
    std::string label;
    bool container = false;
    NodeId room;
  };
  std::vector<PlacedRcpt> receptacles;
  std::vector<NodeId> room_ids;

  for (int r = 0; r < n_rooms; ++r) {
    NodeId room_id = fresh_id(rooms[r]);
    room_ids.push_back(room_id);
    const double cx =
        cell_center(r * kRoomPitch) + (kRoomCells + 1) * kCellSize / 2.0;
    const double cy = house_h / 2.0;
    SceneNode room;
    room.id = room_id;
    room.label = rooms[r];
    room.level = NodeLevel::Room;
    room.bbox = Aabb{{0.0, 0.0, 0.0},
                     {kRoomCells * kCellSize, kRoomCells * kCellSize, 2.5}};
    g.add_node(room, NodeAttributes{true, std::nullopt});
    SceneEdge re;
    re.parent = house.id;
    re.child = room_id;
    re.relation = SupportRelation::Contain;
    re.transform =
        Pose{cx - house.bbox.center[0], cy - house.bbox.center[1], 0.0, 0.0};
    g.add_edge(re);
    grid.anchors[room_id] = Cell{r * kRoomPitch + 6, 6};

    for (std::size_t s = 0; s < rosters[r].size() && s < room_slots().size();
         ++s) {
      const ReceptacleType& rc = rosters[r][s];
      const Slot& slot = room_slots()[s];
      NodeId rid = fresh_id(rc.label);
      int gx = r * kRoomPitch + slot.lx;
      int gy = slot.ly;
      for (int dx = 0; dx < 2; ++dx)
        for (int dy = 0; dy < 2; ++dy) grid.blocked.insert({gx + dx, gy + dy});
      grid.anchors[rid] = Cell{r * kRoomPitch + slot.ax, slot.ay};

      SceneNode node;
      node.id = rid;
      node.label = rc.label;
      node.level = NodeLevel::Receptacle;
      node.bbox = Aabb{{0.0, 0.0, rc.height / 2.0}, {0.5, 0.5, rc.height}};
      NodeAttributes attrs;
      attrs.supporting = true;
      if (rc.container)
        attrs.container =
            rng() % 2 == 0 ? ContainerState::Opened : ContainerState::Closed;
      g.add_node(node, attrs);

      double wx = cell_center(gx) + kCellSize / 2.0;
      double wy = cell_center(gy) + kCellSize / 2.0;
      SceneEdge e;
      e.parent = room_id;
      e.child = rid;
      e.relation = SupportRelation::Contain;
      e.transform = Pose{wx - cx, wy - cy, 0.0, 0.0};
      g.add_edge(e);
      receptacles.push_back({rid, rc.label, rc.container, room_id});
    }
  }

  // --- objects ---------------------------------------------------------------
  // Deterministic on-surface placement: next free lattice offset.
  auto place_object = [&g](const NodeId& obj, const NodeId& parent) {
    static const std::array<std::pair<double, double>, 9> offsets{
        std::pair<double, double>{0.0, 0.0}, {0.16, 0.0},  {-0.16, 0.0},
        {0.0, 0.16},                         {0.0, -0.16}, {0.16, 0.16},
        {-0.16, 0.16},                       {0.16, -0.16}, {-0.16, -0.16}};
    FootprintRect surface = node_footprint(g, parent);
    const Aabb& bb = g.node(obj).bbox;
    FootprintRect want{0, 0, bb.extent[0] / 2.0, bb.extent[1] / 2.0};
    auto siblings = g.children_of(parent);
    for (const auto& [ox, oy] : offsets) {
      want.cx = surface.cx + ox;
      want.cy = surface.cy + oy;
      bool free = true;
      for (const NodeId& sib : siblings) {
        if (sib == obj) continue;
        if (footprint_overlap(want, node_footprint(g, sib))) free = false;
      }
      if (!free) continue;
      WorldPose pp = world_pose(g, parent);
      const Aabb& pbb = g.node(parent).bbox;
      double wz =
          pp.z + pbb.center[2] + pbb.extent[2] / 2.0 + bb.extent[2] / 2.0;
      SceneEdge e;
      e.parent = parent;
      e.child = obj;
      e.relation = g.is_container(parent) ? SupportRelation::Contain
                                          : SupportRelation::On;
      e.transform = Pose{want.cx - pp.x, want.cy - pp.y, wz - pp.z, 0.0};
      g.add_edge(e);
      return true;
    }
    return false;
  };

  // Task objects, scattered away from their goal receptacles.
  std::set<std::string> task_labels;
  for (const FamilyGoal& goal : fam.goals)
    for (const std::string& c : goal.children) task_labels.insert(c);
  std::map<std::string, NodeId> object_ids;

  auto make_object = [&](const std::string& label) {
    const ObjectType& ot = object_library().at(label);
    NodeId id = fresh_id(label);
    SceneNode node;
    node.id = id;
    node.label = label;
    node.level = NodeLevel::Object;
    node.bbox = Aabb{{0.0, 0.0, ot.extent[2] / 2.0}, ot.extent};
    g.add_node(node, NodeAttributes{ot.supporting, std::nullopt});
    return id;
  };

  std::set<std::string> goal_parent_labels;
  for (const FamilyGoal& goal : fam.goals)
    goal_parent_labels.insert(goal.parent);

  for (const std::string& label : task_labels) {
    NodeId id = make_object(label);
    object_ids[label] = id;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < receptacles.size(); ++i) {
      const PlacedRcpt& rc = receptacles[i];
      if (rc.label == "sidetable") continue;  // keep the parking surface free
      if (goal_parent_labels.count(rc.label)) continue;
      candidates.push_back(i);
    }
    bool placed = false;
    while (!placed && !candidates.empty()) {
      std::size_t pick = rng() % candidates.size();
      placed = place_object(id, receptacles[candidates[pick]].id);
      if (!placed) candidates.erase(candidates.begin() + static_cast<long>(pick));
    }
    if (!placed) throw Error("no free surface for task object " + label);
  }

  // Distractors.
  static const std::array<const char*, 5> distractor_pool{"book", "vase",
                                                          "can", "box",
                                                          "bottle"};
  int n_distractors = 2 + static_cast<int>(rng() % 3);
  for (int d = 0; d < n_distractors; ++d) {
    const std::string label = distractor_pool[rng() % distractor_pool.size()];
    NodeId id = make_object(label);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < receptacles.size(); ++i)
      if (receptacles[i].label != "sidetable") candidates.push_back(i);
    while (!candidates.empty()) {
      std::size_t pick = rng() % candidates.size();
      if (place_object(id, receptacles[candidates[pick]].id)) break;
      candidates.erase(candidates.begin() + static_cast<long>(pick));
    }
  }

  // --- task file --------------------------------------------------------------
  Json goal_edges = Json::array();
  Json task_nodes = Json::array();
  Json task_attrs = Json::object();
  std::set<std::string> emitted;
  for (const FamilyGoal& goal : fam.goals) {
    for (const std::string& child : goal.children) {
      const NodeId& cid = object_ids.at(child);
      std::string parent =
          object_ids.count(goal.parent) ? object_ids.at(goal.parent).value
                                        : goal.parent;  // receptacle label
      bool contain = false;
      if (!object_ids.count(goal.parent))
        for (const PlacedRcpt& rc : receptacles)
          if (rc.label == goal.parent) contain = rc.container;
      goal_edges.push_back(Json{{"parent", parent},
                                {"child", cid.value},
                                {"relation", contain ? "contain" : "on"}});
      if (emitted.insert(child).second) {
        const SceneNode& n = g.node(cid);
        task_nodes.push_back(
            Json{{"id", n.id.value},
                 {"label", n.label},
                 {"level", "object"},
                 {"bbox",
                  {n.bbox.center[0], n.bbox.center[1], n.bbox.center[2],
                   n.bbox.extent[0], n.bbox.extent[1], n.bbox.extent[2]}}});
        if (g.attrs(cid).supporting)
          task_attrs[cid.value] = Json{{"supporting", true}, {"container", nullptr}};
      }
    }
  }
  out.task = Json{{"goal_edges", goal_edges},
                  {"task_nodes", task_nodes},
                  {"goal_attributes", Json::array()}};
  if (!task_attrs.empty()) out.task["task_attributes"] = task_attrs;

  return out;
}

}  // namespace epog
