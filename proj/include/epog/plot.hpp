#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "epog/grid.hpp"
#include "epog/harness.hpp"
#include "epog/scene_io.hpp"

namespace epog {

inline std::pair<EpisodeTrace, Metrics> trace_from_jsonl(
    const std::string& text) {
  EpisodeTrace trace;
  Metrics metrics;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    if (j.contains("status")) {
      trace.status = j.at("status").get<std::string>();
      if (j.contains("method")) trace.method = j.at("method").get<std::string>();
      if (j.contains("scene"))
        trace.scene_name = j.at("scene").get<std::string>();
      if (j.contains("seed")) trace.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("en")) metrics.en = j.at("en").get<double>();
      if (j.contains("td")) metrics.td = j.at("td").get<double>();
      if (j.contains("en_by_level"))
        for (const auto& [k, v] : j.at("en_by_level").items())
          trace.en_by_level[k] = v.get<int>();
      metrics.success = trace.status == "success" ? 1.0 : 0.0;
      continue;
    }
    TraceStep s;
    s.step = j.at("step").get<int>();
    s.actor = j.at("actor").get<std::string>();
    auto action = parse_action(j.at("action").get<std::string>());
    if (!action) throw Error("unparseable action in trace: " + line);
    s.action = *action;
    s.station = NodeId{j.at("station").get<std::string>()};
    s.travel_delta_m = j.at("travel_delta_m").get<double>();
    if (j.contains("exception")) {
      std::string k = j.at("exception").get<std::string>();
      if (k == "blocking") s.exception = ExceptionKind::Blocking;
      if (k == "inaccessibility") s.exception = ExceptionKind::Inaccessibility;
      if (k == "collision") s.exception = ExceptionKind::Collision;
      if (k == "instability") s.exception = ExceptionKind::Instability;
    }
    if (j.contains("replan")) s.replan = j.at("replan").get<bool>();
    trace.steps.push_back(s);
  }
  return {trace, metrics};
}

// SVG of the grid, receptacle footprints, the robot's route and numbered
// station visits.
inline std::string render_path_plot(const EpisodeTrace& trace,
                                    const Scene& scene) {
  const OccupancyGrid& grid = scene.grid;
  const int px = 18;
  const int w = grid.width * px;
  const int h = grid.height * px + 30;  // legend strip at the bottom
  auto X = [px](int cx) { return cx * px; };
  auto Y = [px, &grid](int cy) { return (grid.height - 1 - cy) * px; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
      << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n";

  for (const Cell& c : grid.blocked)
    svg << "<rect x=\"" << X(c.x) << "\" y=\"" << Y(c.y) << "\" width=\"" << px
        << "\" height=\"" << px << "\" fill=\"#555\"/>\n";

  // Receptacle footprints and labels at their anchors.
  for (const auto& [id, n] : scene.graph.nodes) {
    if (n.level != NodeLevel::Receptacle || !grid.has_anchor(id)) continue;
    FootprintRect fr = node_footprint(scene.graph, id);
    double x0 = (fr.cx - fr.hx) / grid.cell_size * px;
    double y0 = (grid.height - (fr.cy + fr.hy) / grid.cell_size) * px;
    svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\""
        << 2.0 * fr.hx / grid.cell_size * px << "\" height=\""
        << 2.0 * fr.hy / grid.cell_size * px
        << "\" fill=\"#4682b4\" fill-opacity=\"0.8\"/>\n";
    Cell a = grid.anchor(id);
    svg << "<text x=\"" << X(a.x) + px / 2 << "\" y=\"" << Y(a.y) + px
        << "\" font-size=\"9\" fill=\"#123\">" << n.label << "</text>\n";
  }

  // Route: start cell, then each walk target, connected by real A* paths.
  std::vector<Cell> stations;
  stations.push_back(start_cell(scene));
  for (const TraceStep& s : trace.steps)
    if (s.action.kind == ActionKind::Walk && grid.has_anchor(s.action.place)) {
      Cell c = grid.anchor(s.action.place);
      if (stations.empty() || !(stations.back() == c)) stations.push_back(c);
    }

  double length_m = 0.0;
  std::ostringstream polyline;
  for (std::size_t i = 0; i + 1 < stations.size(); ++i) {
    std::vector<Cell> path = astar_path(grid, stations[i], stations[i + 1]);
    if (path.empty()) continue;
    length_m += static_cast<double>(path.size() - 1) * grid.cell_size;
    for (std::size_t k = (i == 0 ? 0 : 1); k < path.size(); ++k)
      polyline << X(path[k].x) + px / 2 << ',' << Y(path[k].y) + px / 2 << ' ';
  }
  if (stations.size() > 1)
    svg << "<polyline points=\"" << polyline.str()
        << "\" fill=\"none\" stroke=\"#d2691e\" stroke-width=\"3\" "
           "stroke-opacity=\"0.85\"/>\n";

  for (std::size_t i = 0; i < stations.size(); ++i) {
    int cx = X(stations[i].x) + px / 2, cy = Y(stations[i].y) + px / 2;
    svg << "<circle cx=\"" << cx << "\" cy=\"" << cy
        << "\" r=\"8\" fill=\"#fff\" stroke=\"#d2691e\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << cx << "\" y=\"" << cy + 4
        << "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#222\">" << i
        << "</text>\n";
  }

  std::ostringstream legend;
  legend.setf(std::ios::fixed);
  legend.precision(2);
  legend << "path length: " << length_m << " m";
  if (!trace.status.empty()) legend << "  (" << trace.status << ")";
  svg << "<text x=\"6\" y=\"" << grid.height * px + 20
      << "\" font-size=\"13\" fill=\"#222\">" << legend.str() << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace epog
