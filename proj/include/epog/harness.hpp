#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "epog/belief.hpp"
#include "epog/llm_client.hpp"
#include "epog/local_planner.hpp"
#include "epog/oracle.hpp"
#include "epog/planner.hpp"
#include "epog/scene_io.hpp"
#include "epog/simulator.hpp"

namespace epog {

enum class Method { Epog, ExploreThenPlan, ExploreThenRule };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Epog: return "epog";
    case Method::ExploreThenPlan: return "explore_then_plan";
    case Method::ExploreThenRule: return "explore_then_rule";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "epog") return Method::Epog;
  if (s == "explore_then_plan") return Method::ExploreThenPlan;
  if (s == "explore_then_rule") return Method::ExploreThenRule;
  throw Error("unknown method: " + s);
}

enum class OracleBackend { Mock, Llm };

struct BenchConfig {
  Method method = Method::Epog;
  OracleBackend oracle = OracleBackend::Mock;
  std::vector<std::uint64_t> seeds{0};
  int exceptions_per_scene = 0;
  std::vector<ExceptionKind> exception_kinds{
      ExceptionKind::Blocking, ExceptionKind::Inaccessibility,
      ExceptionKind::Collision, ExceptionKind::Instability};
  int retry_cap = 20;  // local resolutions per episode
  double mock_accuracy = 1.0;
  int max_steps = 500;
  std::string prompts_dir;
  std::string llm_model;
};

struct TraceStep {
  int step = 0;
  std::string actor;  // "global" | "local"
  Action action;
  NodeId station;
  double travel_delta_m = 0.0;
  std::optional<ExceptionKind> exception;
  bool replan = false;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  std::string status;        // "success" | "failure:<reason>"
  std::string method;
  std::string scene_name;
  std::uint64_t seed = 0;
  std::map<std::string, int> en_by_level;
};

struct Metrics {
  double success = 0.0;  // 0/1 per episode
  double en = 0.0;       // newly explored nodes
  double td = 0.0;       // travel distance, meters
};

struct EpisodeResult {
  EpisodeTrace trace;
  Metrics metrics;
};

// ---------------------------------------------------------------------------
// Scene-derived defaults.

// Initial knowledge: House, Rooms and Receptacles only; no Object nodes.
inline SceneGraph initial_graph(const SceneGraph& truth) {
  SceneGraph init;
  for (const auto& [id, n] : truth.nodes) {
    if (n.level == NodeLevel::Object) continue;
    init.nodes[id] = n;
    init.attributes[id] = truth.attrs(id);
  }
  for (const auto& [k, e] : truth.edges)
    if (init.has_node(e.parent) && init.has_node(e.child)) init.edges[k] = e;
  return init;
}

// Parking: nearest always-free receptacle (supporting, not a container,
// empty) to the scene centroid; falls back to any supporting receptacle.
inline NodeId choose_parking(const SceneGraph& g) {
  double sx = 0.0, sy = 0.0;
  int count = 0;
  for (const auto& [id, n] : g.nodes) {
    if (n.level != NodeLevel::Receptacle) continue;
    WorldPose p = world_pose(g, id);
    sx += p.x;
    sy += p.y;
    ++count;
  }
  if (count == 0) throw Error("scene has no receptacles");
  const double cx = sx / count, cy = sy / count;

  std::optional<NodeId> best;
  double best_d = 0.0;
  bool best_free = false;
  for (const auto& [id, n] : g.nodes) {
    if (n.level != NodeLevel::Receptacle) continue;
    NodeAttributes a = g.attrs(id);
    if (!a.supporting || a.container) continue;
    bool free = g.children_of(id).empty();
    WorldPose p = world_pose(g, id);
    double d = std::hypot(p.x - cx, p.y - cy);
    if (!best || (free && !best_free) || (free == best_free && d < best_d)) {
      best = id;
      best_d = d;
      best_free = free;
    }
  }
  if (!best) throw Error("scene has no parking candidate");
  return *best;
}

// Room anchor the episode starts from: the lexicographically first room.
inline Cell start_cell(const Scene& scene) {
  for (const auto& [id, n] : scene.graph.nodes)
    if (n.level == NodeLevel::Room && scene.grid.has_anchor(id))
      return scene.grid.anchor(id);
  throw Error("scene has no room anchor");
}

// Location hints for the mock oracle: the true placement of each task
// object, keyed by label.
inline MockOracleConfig mock_config_for(const Scene& scene, const Task& task,
                                        std::uint64_t seed, double accuracy) {
  MockOracleConfig cfg;
  cfg.seed = seed;
  cfg.accuracy = accuracy;
  const SceneGraph& g = scene.graph;
  for (const NodeId& id : task.task_nodes) {
    if (!g.has_node(id)) continue;
    NodeId rcpt = enclosing_receptacle(g, id);
    NodeId room = enclosing_room(g, rcpt);
    cfg.prior_table[g.node(id).label].push_back(
        {g.node(room).label, g.node(rcpt).label});
  }
  return cfg;
}

inline ExceptionInjectionSpec injection_spec_for(const Scene& scene,
                                                 const Task& task,
                                                 const BenchConfig& config,
                                                 std::uint64_t seed) {
  ExceptionInjectionSpec spec;
  spec.count_per_scene = config.exceptions_per_scene;
  spec.kinds = config.exception_kinds;
  if (!spec.kinds.empty()) {
    std::mt19937_64 rng(seed ^ 0xabcdef1234567890ULL);
    std::shuffle(spec.kinds.begin(), spec.kinds.end(), rng);
  }
  spec.task_objects = task.task_nodes;
  const SceneGraph& g = scene.graph;
  for (const auto& [k, ge] : task.goal.edges) {
    if (!task.task_nodes.count(ge.child)) continue;
    auto truth_parent = g.has_node(ge.child) ? parent_of(g, ge.child)
                                             : std::nullopt;
    if (!truth_parent || *truth_parent != ge.parent)
      spec.moved_objects.push_back(ge.child);
    if (g.has_node(ge.parent) &&
        g.node(ge.parent).level == NodeLevel::Receptacle)
      spec.place_targets.push_back(ge.parent);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Episode runner: the bilevel loop wiring belief, planner, simulator and
// local planner together.

class EpisodeRunner final : public ActionExecutor {
 public:
  EpisodeRunner(const Scene& scene, const Task& task, const BenchConfig& config,
                std::uint64_t seed, LocationOracle& location_oracle,
                ExceptionResolver& resolver)
      : config_(config),
        task_(task),
        location_oracle_(location_oracle),
        resolver_(resolver) {
    world_.truth = scene.graph;
    world_.grid = scene.grid;
    world_.robot_cell = start_cell(scene);
    world_.rng_seed = seed;
    world_.parking_place = choose_parking(scene.graph);
    if (config.exceptions_per_scene > 0)
      world_ = inject_exceptions(
          world_, injection_spec_for(scene, task, config, seed), seed);
    init_ = initial_graph(scene.graph);
    belief_ = belief_from_initial(init_);
    trace_.seed = seed;
    trace_.method = to_string(config.method);
  }

  EpisodeResult run() {
    try {
      run_inner();
    } catch (const ExhaustionError& e) {
      trace_.status = std::string("failure:unresolvable-object");
    } catch (const InfeasibleError& e) {
      trace_.status = std::string("failure:infeasible");
    } catch (const TransportError& e) {
      trace_.status = std::string("failure:oracle-transport");
    } catch (const Error& e) {
      trace_.status = std::string("failure:") + e.what();
    }
    return finish();
  }

  // ActionExecutor ------------------------------------------------------------
  RolloutResult execute(const Action& action) override {
    RolloutResult r = rollout(world_, action);
    td_ += r.travel_m;
    if (!r.exception) apply_action_effect(belief_, action, r.placed_pose);
    for (const auto& [id, n] : r.obs.visible_nodes) note_observed(id);
    UpdateResult u =
        update_graph(belief_, r.obs, location_oracle_, task_.task_nodes);
    belief_ = std::move(u.belief);
    replan_flag_ = replan_flag_ || u.replan;

    TraceStep row;
    row.step = static_cast<int>(trace_.steps.size());
    row.actor = actor_;
    row.action = action;
    row.station = action.kind == ActionKind::Walk
                      ? action.place
                      : enclosing_receptacle(world_.truth, action.place);
    row.travel_delta_m = r.travel_m;
    if (r.exception) row.exception = r.exception->kind;
    row.replan = u.replan;
    trace_.steps.push_back(row);
    return r;
  }

  const WorldState& world() const override { return world_; }

  std::string label_of(const NodeId& id) const override {
    if (world_.truth.has_node(id)) return world_.truth.node(id).label;
    return id.value;
  }

 private:
  void note_observed(const NodeId& id) {
    if (!observed_.insert(id).second) return;
    if (!init_.has_node(id))
      trace_.en_by_level[to_string(world_.truth.node(id).level)]++;
  }

  void refresh_plan() {
    Plan p = plan(belief_, task_.goal, world_.grid, world_.robot_cell,
                  world_.held);
    queue_.assign(p.actions.begin(), p.actions.end());
  }

  // Baseline prefix: tour all rooms nearest-first, opening every closed
  // container encountered.
  void explore_everything() {
    DistanceCache distances(world_.grid);
    std::set<NodeId> unvisited;
    for (const auto& [id, n] : init_.nodes)
      if (n.level == NodeLevel::Room) unvisited.insert(id);

    while (!unvisited.empty()) {
      std::optional<NodeId> next;
      double best = kInfiniteDistance;
      for (const NodeId& room : unvisited) {
        double d =
            distances.distance(world_.robot_cell, world_.grid.anchor(room));
        if (d < best || (!next && d == best)) {
          best = d;
          next = room;
        }
      }
      unvisited.erase(*next);
      execute(make_walk(*next));
      // Look inside everything that is shut.
      while (true) {
        std::optional<NodeId> closed;
        for (const auto& [id, n] : belief_.graph.nodes) {
          if (!belief_.graph.is_closed_container(id)) continue;
          if (enclosing_room(belief_.graph, id) != *next) continue;
          closed = id;
          break;
        }
        if (!closed) break;
        execute(make_walk(enclosing_receptacle(belief_.graph, *closed)));
        execute(make_open(*closed));
      }
    }
    replan_flag_ = false;  // exploration discoveries all land in one plan
  }

  void run_inner() {
    if (config_.method != Method::Epog) explore_everything();

    belief_ = estimate_belief_graph(belief_.graph, task_.goal, location_oracle_);
    refresh_plan();

    int resolutions = 0;
    while (true) {
      if (goal_satisfied(belief_, task_.goal)) {
        trace_.status = "success";
        return;
      }
      if (static_cast<int>(trace_.steps.size()) > config_.max_steps) {
        trace_.status = "failure:step-limit";
        return;
      }
      if (queue_.empty()) {
        refresh_plan();
        if (queue_.empty()) {
          trace_.status = "failure:stuck";
          return;
        }
      }

      Action action = queue_.front();
      queue_.pop_front();
      RolloutResult r = execute(action);

      if (replan_flag_) {  // belief changed structurally; plan is stale
        replan_flag_ = false;
        refresh_plan();
        continue;
      }
      if (r.exception) {
        if (++resolutions > config_.retry_cap) {
          trace_.status = "failure:retry-cap";
          return;
        }
        actor_ = "local";
        ResolutionContext ctx;
        ctx.parking_place = world_.parking_place;
        ctx.pending_retry = r.exception->failed_action;
        ResolveOutcome outcome = resolve(*this, *r.exception, resolver_, ctx);
        actor_ = "global";
        if (!outcome.success) {
          trace_.status = "failure:resolution";
          return;
        }
        if (replan_flag_) {
          replan_flag_ = false;
          refresh_plan();
        }
      }
    }
  }

  EpisodeResult finish() {
    Metrics m;
    m.success = trace_.status == "success" ? 1.0 : 0.0;
    int en = 0;
    for (const auto& [level, n] : trace_.en_by_level) en += n;
    m.en = en;
    m.td = td_;
    return {trace_, m};
  }

  BenchConfig config_;
  Task task_;
  LocationOracle& location_oracle_;
  ExceptionResolver& resolver_;

  WorldState world_;
  SceneGraph init_;
  BeliefGraph belief_;
  std::deque<Action> queue_;
  EpisodeTrace trace_;
  std::set<NodeId> observed_;
  std::string actor_ = "global";
  bool replan_flag_ = false;
  double td_ = 0.0;
};

// Builds the oracle pair for the configured backend and runs one episode.
inline EpisodeResult run_episode(const Scene& scene, const Task& task,
                                 const BenchConfig& config,
                                 std::uint64_t seed,
                                 const std::string& scene_name = "") {
  MockOracleConfig mock_cfg =
      mock_config_for(scene, task, seed, config.mock_accuracy);

  std::unique_ptr<LocationOracle> location;
  std::unique_ptr<ExceptionResolver> resolver;
  if (config.oracle == OracleBackend::Llm) {
    LlmConfig llm_cfg = LlmConfig::from_env();
    if (!config.prompts_dir.empty())
      llm_cfg.prompts = PromptLibrary::load(config.prompts_dir);
    if (!config.llm_model.empty()) llm_cfg.model = config.llm_model;
    auto client = std::make_shared<LlmClient>(llm_cfg);
    location = std::make_unique<LlmLocationOracle>(client, mock_cfg);
    if (config.method == Method::ExploreThenRule)
      resolver = std::make_unique<MockExceptionResolver>();
    else
      resolver = std::make_unique<LlmExceptionResolver>(client);
  } else {
    location = std::make_unique<MockLocationOracle>(mock_cfg);
    resolver = std::make_unique<MockExceptionResolver>();
  }

  EpisodeRunner runner(scene, task, config, seed, *location, *resolver);
  EpisodeResult result = runner.run();
  result.trace.scene_name = scene_name;
  return result;
}

// ---------------------------------------------------------------------------
// Metrics aggregation.

struct MethodSummary {
  std::string method;
  double sr = 0.0;
  double en_pct = 0.0;
  double td_pct = 0.0;
};

// %SR per method; %EN and %TD as the mean per-episode percentage difference
// against the reference method, paired by index.
inline std::vector<MethodSummary> compute_relative_metrics(
    const std::map<std::string, std::vector<Metrics>>& runs,
    const std::string& reference) {
  auto ref_it = runs.find(reference);
  if (ref_it == runs.end()) throw Error("reference method missing: " + reference);
  const std::vector<Metrics>& ref = ref_it->second;
  for (const auto& [name, ms] : runs)
    if (ms.size() != ref.size())
      throw Error("mismatched episode sets for method " + name);

  std::vector<MethodSummary> table;
  auto summarize = [&](const std::string& name, const std::vector<Metrics>& ms) {
    MethodSummary row;
    row.method = name;
    double sr = 0.0, en = 0.0, td = 0.0;
    int en_n = 0, td_n = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      sr += ms[i].success;
      if (ref[i].en > 0.0) {
        en += (ms[i].en - ref[i].en) / ref[i].en * 100.0;
        ++en_n;
      }
      if (ref[i].td > 0.0) {
        td += (ms[i].td - ref[i].td) / ref[i].td * 100.0;
        ++td_n;
      }
    }
    row.sr = ms.empty() ? 0.0 : sr / static_cast<double>(ms.size());
    row.en_pct = en_n ? en / en_n : 0.0;
    row.td_pct = td_n ? td / td_n : 0.0;
    table.push_back(row);
  };

  summarize(reference, ref);
  for (const auto& [name, ms] : runs)
    if (name != reference) summarize(name, ms);
  return table;
}

inline std::string metrics_csv(const std::vector<MethodSummary>& table) {
  std::ostringstream out;
  out << "method,sr,en_pct,td_pct\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const MethodSummary& row : table)
    out << row.method << ',' << row.sr << ',' << row.en_pct << ','
        << row.td_pct << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Trace serialization (JSONL: one step per line, summary last).

inline std::string trace_to_jsonl(const EpisodeTrace& trace,
                                  const Metrics& metrics) {
  std::ostringstream out;
  for (const TraceStep& s : trace.steps) {
    Json j{{"step", s.step},
           {"actor", s.actor},
           {"action", format_action(s.action)},
           {"station", s.station.value},
           {"travel_delta_m", s.travel_delta_m}};
    if (s.exception) j["exception"] = to_string(*s.exception);
    if (s.replan) j["replan"] = true;
    out << j.dump() << '\n';
  }
  Json summary{{"status", trace.status},
               {"method", trace.method},
               {"scene", trace.scene_name},
               {"seed", trace.seed},
               {"en", metrics.en},
               {"td", metrics.td},
               {"en_by_level", trace.en_by_level}};
  out << summary.dump() << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Parallel episode execution; each episode owns its world and trace.

template <typename Job>
inline void run_parallel(std::vector<Job>& jobs, unsigned n_threads) {
  if (n_threads <= 1) {
    for (Job& job : jobs) job();
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= jobs.size()) return;
        i = next++;
      }
      jobs[i]();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

}  // namespace epog
