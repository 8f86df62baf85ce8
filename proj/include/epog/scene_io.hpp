#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "epog/grid.hpp"
#include "epog/scene_graph.hpp"

namespace epog {

using Json = nlohmann::json;

class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error("schema error at " + path + ": " + what) {}
};

// A scene file bundles the graph with its navigation grid.
struct Scene {
  SceneGraph graph;
  OccupancyGrid grid;
};

namespace io_detail {

inline const Json& member(const Json& j, const char* key,
                          const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError(path, std::string("missing key '") + key + "'");
  return j.at(key);
}

inline std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected string");
  return j.get<std::string>();
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected number");
  return j.get<double>();
}

inline int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected integer");
  return j.get<int>();
}

inline NodeLevel parse_level(const std::string& s, const std::string& path) {
  if (s == "house") return NodeLevel::House;
  if (s == "room") return NodeLevel::Room;
  if (s == "receptacle") return NodeLevel::Receptacle;
  if (s == "object") return NodeLevel::Object;
  throw SchemaError(path, "unknown level '" + s + "'");
}

inline SupportRelation parse_relation(const std::string& s,
                                      const std::string& path) {
  if (s == "on") return SupportRelation::On;
  if (s == "contain") return SupportRelation::Contain;
  throw SchemaError(path, "unknown relation '" + s + "'");
}

inline ContainerState parse_container_state(const std::string& s,
                                            const std::string& path) {
  if (s == "opened") return ContainerState::Opened;
  if (s == "closed") return ContainerState::Closed;
  throw SchemaError(path, "unknown container state '" + s + "'");
}

}  // namespace io_detail

inline Json to_json(const SceneGraph& g) {
  Json nodes = Json::array();
  for (const auto& [id, n] : g.nodes) {
    Json jn{{"id", n.id.value},
            {"label", n.label},
            {"level", to_string(n.level)},
            {"bbox",
             {n.bbox.center[0], n.bbox.center[1], n.bbox.center[2],
              n.bbox.extent[0], n.bbox.extent[1], n.bbox.extent[2]}}};
    if (!n.geometry.empty()) {
      Json geo = Json::array();
      for (const GeometryPrimitive& p : n.geometry)
        geo.push_back(Json{{"kind", p.kind}, {"params", p.params}});
      jn["geometry"] = geo;
    }
    nodes.push_back(jn);
  }

  Json edges = Json::array();
  for (const auto& [k, e] : g.edges) {
    Json je{{"parent", e.parent.value},
            {"child", e.child.value},
            {"relation", to_string(e.relation)}};
    if (e.transform)
      je["transform"] = {e.transform->x, e.transform->y, e.transform->z,
                         e.transform->yaw};
    edges.push_back(je);
  }

  Json attrs = Json::object();
  for (const auto& [id, a] : g.attributes) {
    Json ja{{"supporting", a.supporting}};
    ja["container"] =
        a.container ? Json{{"state", to_string(*a.container)}} : Json(nullptr);
    attrs[id.value] = ja;
  }

  return Json{{"nodes", nodes}, {"edges", edges}, {"attributes", attrs}};
}

inline SceneGraph scene_graph_from_json(const Json& j,
                                        const std::string& root_path = "") {
  using namespace io_detail;
  SceneGraph g;

  const Json& nodes = member(j, "nodes", root_path.empty() ? "." : root_path);
  if (!nodes.is_array()) throw SchemaError(root_path + "nodes", "expected array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::string p = root_path + "nodes[" + std::to_string(i) + "]";
    const Json& jn = nodes[i];
    SceneNode n;
    n.id = NodeId{as_string(member(jn, "id", p), p + ".id")};
    n.label = as_string(member(jn, "label", p), p + ".label");
    n.level = parse_level(as_string(member(jn, "level", p), p + ".level"),
                          p + ".level");
    const Json& bb = member(jn, "bbox", p);
    if (!bb.is_array() || bb.size() != 6)
      throw SchemaError(p + ".bbox", "expected 6 floats");
    for (int k = 0; k < 3; ++k) {
      n.bbox.center[k] = as_number(bb[k], p + ".bbox");
      n.bbox.extent[k] = as_number(bb[k + 3], p + ".bbox");
    }
    if (jn.contains("geometry")) {
      const Json& geo = jn.at("geometry");
      if (!geo.is_array()) throw SchemaError(p + ".geometry", "expected array");
      for (std::size_t k = 0; k < geo.size(); ++k) {
        std::string gp = p + ".geometry[" + std::to_string(k) + "]";
        GeometryPrimitive prim;
        prim.kind = as_string(member(geo[k], "kind", gp), gp + ".kind");
        const Json& params = member(geo[k], "params", gp);
        if (!params.is_array()) throw SchemaError(gp + ".params", "expected array");
        for (const Json& v : params)
          prim.params.push_back(as_number(v, gp + ".params"));
        n.geometry.push_back(std::move(prim));
      }
    }
    if (g.has_node(n.id)) throw SchemaError(p + ".id", "duplicate node id");
    g.nodes[n.id] = std::move(n);
  }

  const Json& edges = member(j, "edges", root_path.empty() ? "." : root_path);
  if (!edges.is_array()) throw SchemaError(root_path + "edges", "expected array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::string p = root_path + "edges[" + std::to_string(i) + "]";
    const Json& je = edges[i];
    SceneEdge e;
    e.parent = NodeId{as_string(member(je, "parent", p), p + ".parent")};
    e.child = NodeId{as_string(member(je, "child", p), p + ".child")};
    e.relation = parse_relation(
        as_string(member(je, "relation", p), p + ".relation"), p + ".relation");
    if (je.contains("transform") && !je.at("transform").is_null()) {
      const Json& t = je.at("transform");
      if (!t.is_array() || t.size() != 4)
        throw SchemaError(p + ".transform", "expected [x, y, z, yaw]");
      e.transform = Pose{as_number(t[0], p), as_number(t[1], p),
                         as_number(t[2], p), as_number(t[3], p)};
    }
    g.edges[key_of(e)] = std::move(e);
  }

  if (j.contains("attributes")) {
    const Json& attrs = j.at("attributes");
    if (!attrs.is_object())
      throw SchemaError(root_path + "attributes", "expected object");
    for (const auto& [id, ja] : attrs.items()) {
      std::string p = root_path + "attributes." + id;
      NodeAttributes a;
      const Json& sup = member(ja, "supporting", p);
      if (!sup.is_boolean())
        throw SchemaError(p + ".supporting", "expected bool");
      a.supporting = sup.get<bool>();
      const Json& c = member(ja, "container", p);
      if (!c.is_null())
        a.container = parse_container_state(
            as_string(member(c, "state", p), p + ".container.state"),
            p + ".container.state");
      g.attributes[NodeId{id}] = a;
    }
  }

  return g;
}

inline Json to_json(const OccupancyGrid& grid) {
  Json blocked = Json::array();
  for (const Cell& c : grid.blocked) blocked.push_back({c.x, c.y});
  Json anchors = Json::object();
  for (const auto& [id, c] : grid.anchors) anchors[id.value] = {c.x, c.y};
  return Json{{"width", grid.width},
              {"height", grid.height},
              {"cell_size", grid.cell_size},
              {"blocked", blocked},
              {"anchors", anchors}};
}

inline OccupancyGrid grid_from_json(const Json& j) {
  using namespace io_detail;
  OccupancyGrid grid;
  grid.width = as_int(member(j, "width", "grid"), "grid.width");
  grid.height = as_int(member(j, "height", "grid"), "grid.height");
  grid.cell_size = as_number(member(j, "cell_size", "grid"), "grid.cell_size");
  const Json& blocked = member(j, "blocked", "grid");
  if (!blocked.is_array()) throw SchemaError("grid.blocked", "expected array");
  for (std::size_t i = 0; i < blocked.size(); ++i) {
    const Json& c = blocked[i];
    std::string p = "grid.blocked[" + std::to_string(i) + "]";
    if (!c.is_array() || c.size() != 2) throw SchemaError(p, "expected [x, y]");
    grid.blocked.insert(Cell{as_int(c[0], p), as_int(c[1], p)});
  }
  const Json& anchors = member(j, "anchors", "grid");
  if (!anchors.is_object()) throw SchemaError("grid.anchors", "expected object");
  for (const auto& [id, c] : anchors.items()) {
    std::string p = "grid.anchors." + id;
    if (!c.is_array() || c.size() != 2) throw SchemaError(p, "expected [x, y]");
    grid.anchors[NodeId{id}] = Cell{as_int(c[0], p), as_int(c[1], p)};
  }
  return grid;
}

inline std::string serialize_scene(const Scene& scene) {
  Json j = to_json(scene.graph);
  j["grid"] = to_json(scene.grid);
  return j.dump(2) + "\n";
}

inline Scene deserialize_scene(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(".", e.what());
  }
  Scene scene;
  scene.graph = scene_graph_from_json(j);
  scene.grid = grid_from_json(io_detail::member(j, "grid", "."));
  return scene;
}

inline Scene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_scene(ss.str());
}

// ---------------------------------------------------------------------------
// Task / goal files.
//
// The goal is a scene-graph fragment: task nodes plus the referenced parent
// nodes, the goal edges, and the goal container states. Parent references
// may be labels, resolved against the scene (smallest matching id wins).

struct Task {
  SceneGraph goal;               // fragment, see validate_fragment
  std::set<NodeId> task_nodes;   // the task-relevant Object nodes
};

namespace io_detail {

inline NodeId resolve_node_ref(const std::string& ref, const SceneGraph& scene,
                               const SceneGraph& goal, const std::string& path) {
  NodeId as_id{ref};
  if (goal.has_node(as_id) || scene.has_node(as_id)) return as_id;
  for (const auto& [id, n] : scene.nodes)  // label lookup, ordered by id
    if (n.label == ref) return id;
  for (const auto& [id, n] : goal.nodes)
    if (n.label == ref) return id;
  throw SchemaError(path, "unresolvable node reference '" + ref + "'");
}

}  // namespace io_detail

inline Task task_from_json(const Json& j, const SceneGraph& scene) {
  using namespace io_detail;
  Task task;

  if (j.contains("task_nodes")) {
    Json wrapper{{"nodes", j.at("task_nodes")}, {"edges", Json::array()}};
    SceneGraph parsed = scene_graph_from_json(wrapper, "task_");
    for (auto& [id, n] : parsed.nodes) {
      task.goal.nodes[id] = n;
      task.task_nodes.insert(id);
    }
  }

  const Json& edges = member(j, "goal_edges", ".");
  if (!edges.is_array()) throw SchemaError("goal_edges", "expected array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::string p = "goal_edges[" + std::to_string(i) + "]";
    const Json& je = edges[i];
    const Json& jparent = je.contains("parent_label_or_id")
                              ? je.at("parent_label_or_id")
                              : member(je, "parent", p);
    SceneEdge e;
    e.parent = resolve_node_ref(as_string(jparent, p + ".parent"), scene,
                                task.goal, p + ".parent");
    e.child = resolve_node_ref(as_string(member(je, "child", p), p + ".child"),
                               scene, task.goal, p + ".child");
    e.relation = parse_relation(
        as_string(member(je, "relation", p), p + ".relation"), p + ".relation");
    // Copy referenced scene nodes into the fragment so it is self-contained.
    for (const NodeId& id : {e.parent, e.child}) {
      if (!task.goal.has_node(id)) {
        if (!scene.has_node(id))
          throw SchemaError(p, "node '" + id.value + "' not in scene");
        task.goal.nodes[id] = scene.node(id);
        task.goal.attributes[id] = scene.attrs(id);
      }
    }
    if (task.goal.node(e.child).level == NodeLevel::Object)
      task.task_nodes.insert(e.child);
    task.goal.add_edge(e);
  }

  if (j.contains("task_attributes")) {
    const Json& tas = j.at("task_attributes");
    if (!tas.is_object())
      throw SchemaError("task_attributes", "expected object");
    for (const auto& [id, ja] : tas.items()) {
      std::string p = "task_attributes." + id;
      NodeAttributes a;
      if (!member(ja, "supporting", p).is_boolean())
        throw SchemaError(p + ".supporting", "expected bool");
      a.supporting = ja.at("supporting").get<bool>();
      const Json& c = member(ja, "container", p);
      if (!c.is_null())
        a.container = parse_container_state(
            as_string(member(c, "state", p), p + ".container.state"),
            p + ".container.state");
      task.goal.attributes[NodeId{id}] = a;
    }
  }

  if (j.contains("goal_attributes")) {
    const Json& gas = j.at("goal_attributes");
    if (!gas.is_array()) throw SchemaError("goal_attributes", "expected array");
    for (std::size_t i = 0; i < gas.size(); ++i) {
      std::string p = "goal_attributes[" + std::to_string(i) + "]";
      const Json& ja = gas[i];
      NodeId id = resolve_node_ref(as_string(member(ja, "id", p), p + ".id"),
                                   scene, task.goal, p + ".id");
      ContainerState state = parse_container_state(
          as_string(member(ja, "container_state", p), p + ".container_state"),
          p + ".container_state");
      if (!task.goal.has_node(id)) {
        task.goal.nodes[id] = scene.node(id);
        task.goal.attributes[id] = scene.attrs(id);
      }
      NodeAttributes a = task.goal.attrs(id);
      a.container = state;
      task.goal.attributes[id] = a;
    }
  }

  std::vector<Violation> bad = validate_fragment(task.goal);
  if (!bad.empty())
    throw SchemaError("goal_edges", bad.front().rule + ": " + bad.front().subject);
  return task;
}

inline Task load_task_file(const std::string& path, const SceneGraph& scene) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open task file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(".", e.what());
  }
  return task_from_json(j, scene);
}

}  // namespace epog
