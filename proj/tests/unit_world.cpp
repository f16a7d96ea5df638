#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "actslam/astar.hpp"
#include "actslam/rng.hpp"
#include "actslam/world.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>

using namespace actslam;

namespace {

nlohmann::json basic_world_json() {
  return nlohmann::json::parse(R"({
    "name": "fixture",
    "bounds": [10, 8, 3],
    "start": [1, 1, 1, 0],
    "obstacles": [{"min": [4, 0, 0], "max": [4.5, 6, 3]}],
    "objects": [{"position": [2, 2, 1], "label": "chair"}]
  })");
}

/// All-Free grid covering [0,extent) at `res`.
VoxelGrid free_grid(const Eigen::Vector3d& extent, double res) {
  const Eigen::Vector3i dims(static_cast<int>(std::ceil(extent.x() / res)),
                             static_cast<int>(std::ceil(extent.y() / res)),
                             static_cast<int>(std::ceil(extent.z() / res)));
  VoxelGrid grid(Eigen::Vector3d::Zero(), res, dims);
  for (int id = 0; id < grid.cell_count(); ++id) {
    grid.set_log_odds(grid.cell_of_linear(id), -2.0);
  }
  return grid;
}

void occupy_box(VoxelGrid& grid, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  for (int id = 0; id < grid.cell_count(); ++id) {
    const Eigen::Vector3d c = grid.center_of(grid.cell_of_linear(id));
    if ((c.array() >= lo.array()).all() && (c.array() <= hi.array()).all()) {
      grid.set_log_odds(grid.cell_of_linear(id), 3.5);
    }
  }
}

}  // namespace

TEST_CASE("world JSON loads, validates, and rejects malformed input") {
  const WorldModel w = WorldModel::from_json(basic_world_json());
  CHECK(w.name == "fixture");
  CHECK(w.bounds == Eigen::Vector3d(10, 8, 3));
  CHECK(w.obstacles.size() == 1);
  CHECK(w.objects.size() == 1);
  CHECK(w.start.position == Eigen::Vector3d(1, 1, 1));

  auto bad = basic_world_json();
  bad["bounds"] = {0, 8, 3};
  CHECK_THROWS_AS(WorldModel::from_json(bad), std::invalid_argument);

  bad = basic_world_json();
  bad["objects"][0]["position"] = {4.2, 3, 1};  // interior of the wall
  CHECK_THROWS_AS(WorldModel::from_json(bad), std::invalid_argument);

  bad = basic_world_json();
  bad["start"] = {4.2, 3, 1, 0};
  CHECK_THROWS_AS(WorldModel::from_json(bad), std::invalid_argument);

  bad = basic_world_json();
  bad["windows"] = 3;
  CHECK_THROWS_AS(WorldModel::from_json(bad), std::invalid_argument);

  CHECK_THROWS_AS(WorldModel::load("/nonexistent/world.json"), std::runtime_error);
}

TEST_CASE("floors expand into slab boxes around their openings") {
  auto j = basic_world_json();
  j["obstacles"] = nlohmann::json::array();
  j["floors"] = nlohmann::json::array(
      {{{"z", 1.5}, {"thickness", 0.3}, {"openings", nlohmann::json::array({{{"min", {1, 1}}, {"max", {3, 3}}}})}}});
  const WorldModel w = WorldModel::from_json(j);

  // Inside a slab piece, clear of the opening: blocked.
  CHECK(!w.position_free({6, 4, 1.6}));
  // Inside the opening at slab height: free passage.
  CHECK(w.position_free({2, 2, 1.6}));
  // Below and above the slab: free.
  CHECK(w.position_free({6, 4, 1.0}));
  CHECK(w.position_free({6, 4, 2.0}));

  // A vertical ray through the opening reaches the ceiling; next to it, the
  // slab stops the same ray at 0.5 m.
  const auto through = w.raycast({2, 2, 1.0}, {0, 0, 1}, 10.0);
  REQUIRE(through.has_value());
  CHECK(through->boundary);
  CHECK(through->distance == doctest::Approx(2.0).epsilon(1e-12));
  const auto blocked = w.raycast({6, 4, 1.0}, {0, 0, 1}, 10.0);
  REQUIRE(blocked.has_value());
  CHECK(!blocked->boundary);
  CHECK(blocked->distance == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("raycast reports the nearest surface and the solid shell") {
  const WorldModel w = WorldModel::from_json(basic_world_json());

  // Straight at the wall from x=1: entry face at x=4.
  const auto wall = w.raycast({1, 3, 1}, {1, 0, 0}, 20.0);
  REQUIRE(wall.has_value());
  CHECK(wall->distance == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(!wall->boundary);

  // Past the wall's y extent the shell at x=10 is the first surface.
  const auto shell = w.raycast({1, 7, 1}, {1, 0, 0}, 20.0);
  REQUIRE(shell.has_value());
  CHECK(shell->distance == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(shell->boundary);

  // Out of range: no return.
  CHECK(!w.raycast({1, 3, 1}, {1, 0, 0}, 2.0).has_value());

  // Sensor rays nudge into the surface / inside the shell.
  const Ray into_wall = w.cast_sensor_ray({1, 3, 1}, {1, 0, 0}, 20.0);
  CHECK(into_wall.is_hit);
  CHECK(into_wall.endpoint.x() > 4.0);
  CHECK(into_wall.endpoint.x() < 4.01);
  const Ray into_shell = w.cast_sensor_ray({1, 7, 1}, {1, 0, 0}, 20.0);
  CHECK(into_shell.is_hit);
  CHECK(into_shell.endpoint.x() < 10.0);
  const Ray free_ray = w.cast_sensor_ray({1, 3, 1}, {1, 0, 0}, 2.0);
  CHECK(!free_ray.is_hit);
  CHECK(free_ray.endpoint == Eigen::Vector3d(3, 3, 1));
}

TEST_CASE("segment_free sees through gaps and stops at walls") {
  const WorldModel w = WorldModel::from_json(basic_world_json());
  CHECK(w.segment_free({1, 3, 1}, {3, 3, 1}));
  CHECK(!w.segment_free({1, 3, 1}, {6, 3, 1}));   // crosses the wall
  CHECK(w.segment_free({1, 7, 1}, {6, 7, 1}));    // around the wall's end
  // An endpoint exactly on a face does not count as crossing.
  CHECK(w.segment_free({1, 3, 1}, {4, 3, 1}));
}

TEST_CASE("astar: trivial, corridor, blocked, and obstacle-goal cases") {
  VoxelGrid grid = free_grid({2.5, 0.25, 0.25}, 0.25);  // 10x1x1 corridor

  const Eigen::Vector3d a(0.125, 0.125, 0.125);
  const Eigen::Vector3d b(2.375, 0.125, 0.125);
  const auto same = astar(grid, a, a);
  REQUIRE(same.has_value());
  CHECK(same->cost == 0.0);
  CHECK(same->waypoints.size() == 1);
  CHECK(same->waypoints[0] == a);

  const auto corridor = astar(grid, a, b);
  REQUIRE(corridor.has_value());
  CHECK(corridor->cost == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(corridor->waypoints.front() == a);
  CHECK(corridor->waypoints.back() == b);
  CHECK(corridor->waypoints.size() == 10);

  // Goal in an Occupied cell: none.
  occupy_box(grid, {2.3, 0, 0}, {2.5, 0.25, 0.25});
  CHECK(!astar(grid, a, b).has_value());

  // Unknown cells are not traversable either.
  VoxelGrid with_gap = free_grid({2.5, 0.25, 0.25}, 0.25);
  with_gap.set_log_odds(with_gap.cell_of({1.125, 0.125, 0.125}), 0.0);
  CHECK(!astar(with_gap, a, b).has_value());
}

TEST_CASE("astar detours around blocks consistently with Dijkstra") {
  VoxelGrid grid = free_grid({5, 5, 0.25}, 0.25);
  occupy_box(grid, {2, 0, 0}, {2.5, 4.0, 0.25});  // wall with a gap at the top

  const Eigen::Vector3d a(0.625, 0.625, 0.125);
  const Eigen::Vector3d b(4.375, 0.625, 0.125);
  const auto result = astar(grid, a, b);
  REQUIRE(result.has_value());
  const auto oracle = oracles::grid_dijkstra_cost(grid, a, b);
  REQUIRE(oracle.has_value());
  CHECK(result->cost == doctest::Approx(*oracle).epsilon(1e-12));
  CHECK(result->cost > (b - a).norm());  // forced detour

  // Every consecutive pair of interior waypoints is one 26-neighbor step.
  for (size_t i = 1; i + 2 < result->waypoints.size(); ++i) {
    const Eigen::Vector3i c0 = grid.cell_of(result->waypoints[i]);
    const Eigen::Vector3i c1 = grid.cell_of(result->waypoints[i + 1]);
    CHECK(((c1 - c0).array().abs() <= 1).all());
    CHECK(grid.state(c1) == CellState::kFree);
  }
}

TEST_CASE("astar cost equals Dijkstra on randomized grids") {
  int reachable = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    RngStream rng(seed);
    auto& u = rng.stream("astar");
    VoxelGrid grid = free_grid({4, 4, 1}, 0.25);  // 16x16x4
    const int n_blocks = 2 + static_cast<int>(u.integer(4));
    for (int bi = 0; bi < n_blocks; ++bi) {
      const Eigen::Vector3d lo(u.uniform(0, 3.0), u.uniform(0, 3.0), 0);
      const Eigen::Vector3d size(u.uniform(0.3, 1.2), u.uniform(0.3, 1.2), 1.0);
      occupy_box(grid, lo, lo + size);
    }
    auto sample_free = [&] {
      for (int tries = 0; tries < 200; ++tries) {
        const Eigen::Vector3d p(u.uniform(0, 4), u.uniform(0, 4), u.uniform(0, 1));
        if (grid.state_at(p) == CellState::kFree) return p;
      }
      return Eigen::Vector3d(0.125, 0.125, 0.125);
    };
    const Eigen::Vector3d a = sample_free();
    const Eigen::Vector3d b = sample_free();

    const auto fast = astar(grid, a, b);
    const auto slow = oracles::grid_dijkstra_cost(grid, a, b);
    CAPTURE(seed);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) {
      CHECK(fast->cost == doctest::Approx(*slow).epsilon(1e-9));
      ++reachable;
    }
  }
  CHECK(reachable > 50);
}

TEST_CASE("inflated mask keeps clearance from occupied cells") {
  VoxelGrid grid = free_grid({2, 2, 0.75}, 0.25);
  occupy_box(grid, {1.0, 1.0, 0}, {1.25, 1.25, 0.75});

  const auto raw = free_mask(grid);
  const auto inflated = inflated_free_mask(grid);
  int raw_count = 0;
  int inflated_count = 0;
  for (int id = 0; id < grid.cell_count(); ++id) {
    raw_count += raw[id];
    inflated_count += inflated[id];
    if (!inflated[id] || !raw[id]) continue;
    // Traversable under inflation: no occupied 26-neighbor.
    const Eigen::Vector3i c = grid.cell_of_linear(id);
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const Eigen::Vector3i n = c + Eigen::Vector3i(dx, dy, dz);
          if (!grid.valid_cell(n)) continue;
          CHECK(grid.state(n) != CellState::kOccupied);
        }
      }
    }
  }
  CHECK(inflated_count < raw_count);
  CHECK(inflated_count > 0);
}
