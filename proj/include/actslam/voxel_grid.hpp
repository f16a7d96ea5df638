#pragma once

#include "actslam/pose.hpp"

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace actslam {

enum class CellState { kUnknown, kFree, kOccupied };

/// One depth return: world-frame endpoint plus whether the ray terminated on
/// a surface (true) or at its range limit (false).
struct Ray {
  Eigen::Vector3d endpoint;
  bool is_hit = false;
};

/// Inclusive cell-index bounding box of the region modified by the most
/// recent scan integration. Empty when nothing changed.
struct UpdateBBox {
  Eigen::Vector3i min{0, 0, 0};
  Eigen::Vector3i max{-1, -1, -1};

  bool empty() const { return (max.array() < min.array()).any(); }
  void expand(const Eigen::Vector3i& c) {
    if (empty()) {
      min = max = c;
    } else {
      min = min.cwiseMin(c);
      max = max.cwiseMax(c);
    }
  }
};

/// Dense log-odds occupancy grid. Serves both the coarse global map (world
/// frame, fixed origin) and the fine ego-centric local map (recentered as
/// the robot moves). Untouched cells sit exactly at log-odds 0 (unknown).
class VoxelGrid {
 public:
  struct Params {
    double l_hit = 0.84729786038720367;   // ln(0.7/0.3)
    double l_miss = -0.40546510810816438;  // ln(0.4/0.6)
    double l_min = -2.0;
    double l_max = 3.5;
    double p_occ = 0.65;
    double p_free = 0.35;
  };

  VoxelGrid(const Eigen::Vector3d& origin, double resolution,
            const Eigen::Vector3i& dims, const Params& params);
  VoxelGrid(const Eigen::Vector3d& origin, double resolution, const Eigen::Vector3i& dims)
      : VoxelGrid(origin, resolution, dims, Params{}) {}

  // ── Index geometry ──────────────────────────────────────────────────────
  const Eigen::Vector3d& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  int cell_count() const { return static_cast<int>(log_odds_.size()); }
  Eigen::Vector3d extent() const { return dims_.cast<double>() * resolution_; }

  /// Half-open spatial membership: origin <= p < origin + extent.
  bool contains(const Eigen::Vector3d& p) const;
  bool valid_cell(const Eigen::Vector3i& c) const;
  Eigen::Vector3i cell_of(const Eigen::Vector3d& p) const;
  Eigen::Vector3d center_of(const Eigen::Vector3i& c) const;
  int linear(const Eigen::Vector3i& c) const {
    return (c.z() * dims_.y() + c.y()) * dims_.x() + c.x();
  }
  Eigen::Vector3i cell_of_linear(int id) const {
    const int x = id % dims_.x();
    const int y = (id / dims_.x()) % dims_.y();
    const int z = id / (dims_.x() * dims_.y());
    return {x, y, z};
  }

  // ── Occupancy queries ───────────────────────────────────────────────────
  double log_odds(const Eigen::Vector3i& c) const { return log_odds_[linear(c)]; }
  double probability(const Eigen::Vector3i& c) const;
  CellState state(const Eigen::Vector3i& c) const;
  CellState state_linear(int id) const;
  /// Unknown for out-of-bounds points.
  CellState state_at(const Eigen::Vector3d& p) const;
  bool touched(const Eigen::Vector3i& c) const { return touched_[linear(c)] != 0; }
  /// Cells that have received at least one update, over total cells.
  double coverage() const {
    return static_cast<double>(touched_count_) / static_cast<double>(cell_count());
  }

  // ── Ray integration ─────────────────────────────────────────────────────
  /// Exact voxel walk from a to b. First cell contains a; consecutive cells
  /// are face-adjacent; stops at b's cell or at the grid boundary. For both
  /// endpoints inside the grid the result is orientation-symmetric:
  /// traverse(a,b) reversed equals traverse(b,a).
  std::vector<Eigen::Vector3i> traverse(const Eigen::Vector3d& a,
                                        const Eigen::Vector3d& b) const;

  /// Integrate one scan from `sensor_pose`. Every traversed cell before a
  /// ray's endpoint receives the miss update; the endpoint cell receives the
  /// hit update iff is_hit. Rays leaving the grid are truncated at the
  /// boundary and treated as misses along the traversed portion. Each cell
  /// is updated at most once per scan (hit wins over miss). Returns the
  /// tight bounding box of cells whose log-odds changed.
  UpdateBBox integrate_scan(const PoseXYZYaw& sensor_pose, std::span<const Ray> rays);

  /// Shift the grid window so `robot_position` is centered (snapped to the
  /// cell lattice). Retained cells keep their log-odds exactly; cells
  /// entering the window are unknown.
  void recenter(const Eigen::Vector3d& robot_position);

  /// Force a cell to a log-odds value (test/tooling hook; marks it touched).
  void set_log_odds(const Eigen::Vector3i& c, double value);

  /// {origin, resolution, dims, states_rle} with run-length-encoded cell
  /// states in linear (x-fastest) order: [["U",n],["F",n],["O",n],...].
  nlohmann::json dump() const;

 private:
  std::vector<Eigen::Vector3i> walk(const Eigen::Vector3d& a,
                                    const Eigen::Vector3d& b) const;
  void apply_update(int id, double delta, UpdateBBox& bbox);

  Eigen::Vector3d origin_;
  double resolution_;
  Eigen::Vector3i dims_;
  Params params_;
  std::vector<double> log_odds_;
  std::vector<uint8_t> touched_;
  int64_t touched_count_ = 0;
  // Per-scan dedup stamps (mutated only inside integrate_scan).
  std::vector<uint32_t> hit_stamp_, miss_stamp_;
  uint32_t scan_stamp_ = 0;
};

}  // namespace actslam
