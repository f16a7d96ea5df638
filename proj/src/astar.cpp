#include "actslam/astar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>

namespace actslam {

namespace {

struct Step {
  Eigen::Vector3i offset;
  double length;  // in cell units
  // Cells a diagonal move squeezes past; the move is admissible only when
  // every gate is traversable, so paths never cut the corner of an obstacle.
  std::vector<Eigen::Vector3i> gates;
};

const std::vector<Step>& step_table() {
  static const std::vector<Step> table = [] {
    std::vector<Step> t;
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          Step step{{dx, dy, dz},
                    std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz)),
                    {}};
          // Every proper nonempty subset of the moved axes yields a cell the
          // body brushes on the way through.
          for (int mx = 0; mx <= (dx != 0 ? 1 : 0); ++mx) {
            for (int my = 0; my <= (dy != 0 ? 1 : 0); ++my) {
              for (int mz = 0; mz <= (dz != 0 ? 1 : 0); ++mz) {
                const Eigen::Vector3i gate(mx * dx, my * dy, mz * dz);
                if (gate.isZero() || gate == step.offset) continue;
                step.gates.push_back(gate);
              }
            }
          }
          t.push_back(std::move(step));
        }
      }
    }
    return t;
  }();
  return table;
}

}  // namespace

std::vector<char> free_mask(const VoxelGrid& grid) {
  std::vector<char> mask(grid.cell_count(), 0);
  for (int id = 0; id < grid.cell_count(); ++id) {
    mask[id] = grid.state_linear(id) == CellState::kFree ? 1 : 0;
  }
  return mask;
}

std::vector<char> inflated_free_mask(const VoxelGrid& grid) {
  std::vector<char> mask = free_mask(grid);
  std::vector<char> out = mask;
  for (int id = 0; id < grid.cell_count(); ++id) {
    if (!mask[id]) continue;
    const Eigen::Vector3i c = grid.cell_of_linear(id);
    for (const Step& step : step_table()) {
      const Eigen::Vector3i n = c + step.offset;
      if (!grid.valid_cell(n)) continue;
      if (grid.state(n) == CellState::kOccupied) {
        out[id] = 0;
        break;
      }
    }
  }
  return out;
}

std::optional<AstarResult> astar_masked(const VoxelGrid& grid,
                                        const std::vector<char>& mask,
                                        const Eigen::Vector3d& start,
                                        const Eigen::Vector3d& goal) {
  if (!grid.contains(start) || !grid.contains(goal)) return std::nullopt;
  const Eigen::Vector3i start_cell = grid.cell_of(start);
  const Eigen::Vector3i goal_cell = grid.cell_of(goal);
  const int start_id = grid.linear(start_cell);
  const int goal_id = grid.linear(goal_cell);
  if (!mask[start_id] || !mask[goal_id]) return std::nullopt;

  if (start_id == goal_id) {
    AstarResult r;
    r.waypoints.push_back(start);
    if (goal != start) r.waypoints.push_back(goal);
    return r;
  }

  const double res = grid.resolution();
  const auto heuristic = [&](const Eigen::Vector3i& c) {
    return res * (c - goal_cell).cast<double>().norm();
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g(grid.cell_count(), kInf);
  std::vector<int> parent(grid.cell_count(), -1);
  std::vector<char> closed(grid.cell_count(), 0);
  // (f, id): ties pop the lowest id, keeping expansions deterministic.
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>>
      open;
  g[start_id] = 0;
  open.emplace(heuristic(start_cell), start_id);

  while (!open.empty()) {
    const auto [f, id] = open.top();
    open.pop();
    if (closed[id]) continue;
    closed[id] = 1;
    if (id == goal_id) break;
    const Eigen::Vector3i cell = grid.cell_of_linear(id);
    for (const Step& step : step_table()) {
      const Eigen::Vector3i n = cell + step.offset;
      if (!grid.valid_cell(n)) continue;
      const int nid = grid.linear(n);
      if (!mask[nid] || closed[nid]) continue;
      bool gated = false;
      for (const Eigen::Vector3i& gate : step.gates) {
        const Eigen::Vector3i gc = cell + gate;
        if (!grid.valid_cell(gc) || !mask[grid.linear(gc)]) {
          gated = true;
          break;
        }
      }
      if (gated) continue;
      const double cand = g[id] + res * step.length;
      if (cand < g[nid]) {
        g[nid] = cand;
        parent[nid] = id;
        open.emplace(cand + heuristic(n), nid);
      }
    }
  }
  if (!closed[goal_id]) return std::nullopt;

  AstarResult result;
  result.cost = g[goal_id];
  std::vector<int> chain;
  for (int id = goal_id; id != -1; id = parent[id]) chain.push_back(id);
  std::reverse(chain.begin(), chain.end());
  result.waypoints.push_back(start);
  for (size_t i = 1; i + 1 < chain.size(); ++i) {
    result.waypoints.push_back(grid.center_of(grid.cell_of_linear(chain[i])));
  }
  result.waypoints.push_back(goal);
  return result;
}

std::optional<AstarResult> astar(const VoxelGrid& grid, const Eigen::Vector3d& start,
                                 const Eigen::Vector3d& goal) {
  return astar_masked(grid, free_mask(grid), start, goal);
}

}  // namespace actslam
