#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "epog/grid.hpp"

#include "oracles.hpp"

using namespace epog;

namespace {

OccupancyGrid corridor(int length) {
  OccupancyGrid g;
  g.width = length;
  g.height = 1;
  g.cell_size = 0.25;
  return g;
}

OccupancyGrid random_grid(std::mt19937_64& rng, int w = 20, int h = 20,
                          double block_prob = 0.25) {
  OccupancyGrid g;
  g.width = w;
  g.height = h;
  g.cell_size = 0.25;
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y)
      if (std::uniform_real_distribution<>(0, 1)(rng) < block_prob)
        g.blocked.insert({x, y});
  return g;
}

Cell random_free(const OccupancyGrid& g, std::mt19937_64& rng) {
  while (true) {
    Cell c{static_cast<int>(rng() % g.width),
           static_cast<int>(rng() % g.height)};
    if (g.free(c)) return c;
  }
}

}  // namespace

TEST_CASE("straight corridor distance") {
  OccupancyGrid g = corridor(5);
  CHECK(astar_distance(g, {0, 0}, {4, 0}) == Catch::Approx(1.0));
}

TEST_CASE("zero distance to self") {
  OccupancyGrid g = corridor(3);
  CHECK(astar_distance(g, {1, 0}, {1, 0}) == 0.0);
}

TEST_CASE("blocked endpoint throws") {
  OccupancyGrid g = corridor(3);
  g.blocked.insert({0, 0});
  CHECK_THROWS_AS(astar_distance(g, {0, 0}, {2, 0}), Error);
}

TEST_CASE("disconnected cells are infinitely far") {
  OccupancyGrid g = corridor(5);
  g.blocked.insert({2, 0});
  CHECK(astar_distance(g, {0, 0}, {4, 0}) == kInfiniteDistance);
}

TEST_CASE("wall with a gap matches Dijkstra") {
  OccupancyGrid g;
  g.width = 10;
  g.height = 10;
  g.cell_size = 0.25;
  for (int y = 0; y < 10; ++y)
    if (y != 7) g.blocked.insert({5, y});
  double expected = epog::testing::dijkstra_distance(g, {0, 0}, {9, 0});
  CHECK(astar_distance(g, {0, 0}, {9, 0}) == Catch::Approx(expected));
}

TEST_CASE("astar equals Dijkstra on random grids") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 60; ++i) {
    OccupancyGrid g = random_grid(rng);
    Cell a = random_free(g, rng);
    Cell b = random_free(g, rng);
    double ours = astar_distance(g, a, b);
    double ref = epog::testing::dijkstra_distance(g, a, b);
    INFO("grid " << i);
    if (ref == kInfiniteDistance)
      CHECK(ours == kInfiniteDistance);
    else
      CHECK(ours == Catch::Approx(ref));
  }
}

TEST_CASE("symmetry and triangle inequality") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 15; ++i) {
    OccupancyGrid g = random_grid(rng, 14, 14, 0.15);
    Cell a = random_free(g, rng), b = random_free(g, rng),
         c = random_free(g, rng);
    double ab = astar_distance(g, a, b);
    double ba = astar_distance(g, b, a);
    double ac = astar_distance(g, a, c);
    double cb = astar_distance(g, c, b);
    CHECK(ab == Catch::Approx(ba));
    if (ab != kInfiniteDistance && ac != kInfiniteDistance &&
        cb != kInfiniteDistance)
      CHECK(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("distance cache agrees with direct queries") {
  std::mt19937_64 rng(5);
  OccupancyGrid g = random_grid(rng, 12, 12, 0.2);
  DistanceCache cache(g);
  for (int i = 0; i < 20; ++i) {
    Cell a = random_free(g, rng), b = random_free(g, rng);
    double direct = astar_distance(g, a, b);
    CHECK(cache.distance(a, b) == direct);
    CHECK(cache.distance(b, a) == direct);  // cached, symmetric key
  }
}
