#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epog/harness.hpp"
#include "epog/plot.hpp"
#include "epog/scene_gen.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw epog::Error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw epog::Error("cannot write: " + path.string());
  out << content;
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EPoG: exploration-integrated manipulation planning on scene "
               "graphs"};
  app.require_subcommand(1);

  // --- run -------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run one episode");
  std::string scene_path, task_path, out_dir = ".";
  std::string method_name = "epog", oracle_name = "mock", prompts_dir;
  std::uint64_t seed = 0;
  int exceptions = 0;
  double accuracy = 1.0;
  run->add_option("--scene", scene_path, "scene file")->required();
  run->add_option("--task", task_path, "task file")->required();
  run->add_option("--method", method_name,
                  "epog|explore_then_plan|explore_then_rule");
  run->add_option("--oracle", oracle_name, "mock|llm");
  run->add_option("--seed", seed, "episode seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--exceptions", exceptions, "injected exceptions per scene");
  run->add_option("--accuracy", accuracy, "mock oracle accuracy [0,1]");
  run->add_option("--prompts", prompts_dir, "prompt template directory");

  // --- suite -----------------------------------------------------------------
  auto* suite = app.add_subcommand("suite", "generate benchmark scenes");
  int family = 1, n_scenes = 10;
  std::uint64_t suite_seed = 0;
  std::string suite_out = ".";
  suite->add_option("--family", family, "task family 1..5")->required();
  suite->add_option("--n", n_scenes, "number of scenes")->required();
  suite->add_option("--seed", suite_seed, "generator seed");
  suite->add_option("--out", suite_out, "output directory");

  // --- report ----------------------------------------------------------------
  auto* report = app.add_subcommand("report", "aggregate run traces to CSV");
  std::string runs_dir, reference = "epog";
  report->add_option("--runs", runs_dir, "directory of *.jsonl traces")
      ->required();
  report->add_option("--reference", reference, "reference method");

  // --- plot ------------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "render a trace as SVG");
  std::string plot_trace, plot_scene, plot_out;
  plot->add_option("--trace", plot_trace, "trace .jsonl")->required();
  plot->add_option("--scene", plot_scene, "scene file")->required();
  plot->add_option("--out", plot_out, "output .svg")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      epog::Scene scene = epog::load_scene_file(scene_path);
      epog::Task task = epog::load_task_file(task_path, scene.graph);
      epog::BenchConfig config;
      config.method = epog::method_from_string(method_name);
      config.oracle = oracle_name == "llm" ? epog::OracleBackend::Llm
                                           : epog::OracleBackend::Mock;
      config.exceptions_per_scene = exceptions;
      config.mock_accuracy = accuracy;
      config.prompts_dir = prompts_dir;

      epog::EpisodeResult result =
          epog::run_episode(scene, task, config, seed, stem_of(scene_path));
      std::string name = "trace_" + method_name + "_" + stem_of(scene_path) +
                         "_" + std::to_string(seed) + ".jsonl";
      write_file(fs::path(out_dir) / name,
                 epog::trace_to_jsonl(result.trace, result.metrics));
      std::cout << result.trace.status << "  en=" << result.metrics.en
                << "  td=" << result.metrics.td << "  steps="
                << result.trace.steps.size() << '\n';
      return 0;  // per-episode failures are data, not errors
    }

    if (*suite) {
      for (int i = 0; i < n_scenes; ++i) {
        epog::GeneratedCase c =
            epog::generate_scene(family, suite_seed + static_cast<std::uint64_t>(i));
        std::string base = "f" + std::to_string(family) + "_" +
                           std::to_string(i);
        write_file(fs::path(suite_out) / ("scene_" + base + ".json"),
                   epog::serialize_scene(c.scene));
        write_file(fs::path(suite_out) / ("task_" + base + ".json"),
                   c.task.dump(2) + "\n");
      }
      std::cout << "wrote " << n_scenes << " scenes to " << suite_out << '\n';
      return 0;
    }

    if (*report) {
      std::map<std::string, std::map<std::string, epog::Metrics>> by_method;
      std::vector<std::string> files;
      for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.path().extension() == ".jsonl")
          files.push_back(entry.path().string());
      std::sort(files.begin(), files.end());
      for (const std::string& f : files) {
        auto [trace, metrics] = epog::trace_from_jsonl(read_file(f));
        if (trace.method.empty()) continue;
        std::string key =
            trace.scene_name + "#" + std::to_string(trace.seed);
        by_method[trace.method][key] = metrics;
      }
      if (by_method.empty()) throw epog::Error("no traces in " + runs_dir);

      // Pair episodes by (scene, seed) across methods.
      std::map<std::string, std::vector<epog::Metrics>> runs;
      const auto& ref_keys = by_method.begin()->second;
      for (const auto& [method, rows] : by_method) {
        for (const auto& [key, m] : ref_keys) {
          auto it = rows.find(key);
          if (it == rows.end())
            throw epog::Error("method " + method + " missing episode " + key);
          runs[method].push_back(it->second);
        }
      }
      std::string csv =
          epog::metrics_csv(epog::compute_relative_metrics(runs, reference));
      write_file(fs::path(runs_dir) / "report.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (*plot) {
      auto [trace, metrics] = epog::trace_from_jsonl(read_file(plot_trace));
      epog::Scene scene = epog::load_scene_file(plot_scene);
      write_file(plot_out, epog::render_path_plot(trace, scene));
      std::cout << "wrote " << plot_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
