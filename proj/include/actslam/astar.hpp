#pragma once

#include "actslam/voxel_grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace actslam {

/// Grid path as an executable polyline: the exact query start, the centers
/// of the traversed cells between the endpoints, then the exact query goal.
/// `cost` is the planning metric — the sum of center-to-center edge lengths —
/// which the polyline endpoints do not perturb.
struct AstarResult {
  std::vector<Eigen::Vector3d> waypoints;
  double cost = 0;  // m
};

/// Cell-is-traversable mask in grid linear order: Free cells only.
std::vector<char> free_mask(const VoxelGrid& grid);

/// Free cells whose 26-neighborhood contains no Occupied cell (out-of-bounds
/// neighbors do not disqualify); one cell of clearance for path execution.
std::vector<char> inflated_free_mask(const VoxelGrid& grid);

/// 26-connected A* between the cells containing `start` and `goal` over the
/// traversable cells of `mask`, Euclidean edge weights and heuristic. Returns
/// none when either endpoint cell is out of grid or not traversable, or no
/// path exists. A shared start/goal cell yields {[start], 0}.
std::optional<AstarResult> astar_masked(const VoxelGrid& grid,
                                        const std::vector<char>& mask,
                                        const Eigen::Vector3d& start,
                                        const Eigen::Vector3d& goal);

/// astar_masked over the plain Free-cell mask.
std::optional<AstarResult> astar(const VoxelGrid& grid, const Eigen::Vector3d& start,
                                 const Eigen::Vector3d& goal);

}  // namespace actslam
