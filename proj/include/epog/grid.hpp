#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "epog/scene_graph.hpp"

namespace epog {

struct Cell {
  int x = 0;
  int y = 0;

  auto operator<=>(const Cell&) const = default;
};

constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

// 4-connected occupancy grid with one anchor cell per Room/Receptacle.
// The anchor is where the robot stands to manipulate that node's children.
struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double cell_size = 0.25;
  std::set<Cell> blocked;
  std::map<NodeId, Cell> anchors;

  bool operator==(const OccupancyGrid&) const = default;

  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
  }

  bool free(const Cell& c) const { return in_bounds(c) && !blocked.count(c); }

  const Cell& anchor(const NodeId& id) const {
    auto it = anchors.find(id);
    if (it == anchors.end()) throw Error("no anchor for node: " + id.value);
    return it->second;
  }

  bool has_anchor(const NodeId& id) const { return anchors.count(id) != 0; }
};

// Shortest 4-connected free path, as a cell sequence including both ends.
// Empty result means disconnected. Manhattan-heuristic A*; exact on unit
// step costs.
inline std::vector<Cell> astar_path(const OccupancyGrid& grid, const Cell& from,
                                    const Cell& to) {
  if (!grid.free(from) || !grid.free(to))
    throw Error("astar: blocked or out-of-bounds endpoint");
  if (from == to) return {from};

  auto h = [&to](const Cell& c) {
    return std::abs(c.x - to.x) + std::abs(c.y - to.y);
  };

  struct QueueEntry {
    int f;
    int g;
    Cell cell;
    bool operator>(const QueueEntry& o) const {
      if (f != o.f) return f > o.f;
      if (g != o.g) return g > o.g;
      return cell > o.cell;  // deterministic tie-break
    }
  };

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  std::map<Cell, int> best_g;
  std::map<Cell, Cell> came_from;

  open.push({h(from), 0, from});
  best_g[from] = 0;

  const std::array<Cell, 4> steps{Cell{1, 0}, Cell{-1, 0}, Cell{0, 1},
                                  Cell{0, -1}};
  while (!open.empty()) {
    QueueEntry cur = open.top();
    open.pop();
    if (cur.cell == to) {
      std::vector<Cell> path{to};
      Cell c = to;
      while (c != from) {
        c = came_from.at(c);
        path.push_back(c);
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    auto it = best_g.find(cur.cell);
    if (it != best_g.end() && cur.g > it->second) continue;
    for (const Cell& s : steps) {
      Cell next{cur.cell.x + s.x, cur.cell.y + s.y};
      if (!grid.free(next)) continue;
      int g = cur.g + 1;
      auto bit = best_g.find(next);
      if (bit == best_g.end() || g < bit->second) {
        best_g[next] = g;
        came_from[next] = cur.cell;
        open.push({g + h(next), g, next});
      }
    }
  }
  return {};
}

// Length of the shortest free path in meters; infinite if disconnected.
inline double astar_distance(const OccupancyGrid& grid, const Cell& from,
                             const Cell& to) {
  std::vector<Cell> path = astar_path(grid, from, to);
  if (path.empty()) return kInfiniteDistance;
  return static_cast<double>(path.size() - 1) * grid.cell_size;
}

// Memoizing wrapper; planner queries the same station pairs repeatedly.
class DistanceCache {
 public:
  explicit DistanceCache(const OccupancyGrid& grid) : grid_(&grid) {}

  double distance(const Cell& from, const Cell& to) {
    if (from == to) return 0.0;
    EdgePair k = from < to ? EdgePair{from, to} : EdgePair{to, from};
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    double d = astar_distance(*grid_, from, to);
    cache_[k] = d;
    return d;
  }

  const OccupancyGrid& grid() const { return *grid_; }

 private:
  using EdgePair = std::pair<Cell, Cell>;
  const OccupancyGrid* grid_;
  std::map<EdgePair, double> cache_;
};

}  // namespace epog
