#pragma once

#include "actslam/pose.hpp"
#include "actslam/rng.hpp"
#include "actslam/sensor.hpp"
#include "actslam/voxel_grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <set>
#include <vector>

namespace actslam {

/// A connected patch of frontier cells (Free cells face-adjacent to Unknown),
/// split until its center span fits within f_sz on every axis.
struct FrontierCluster {
  int id = -1;
  std::vector<Eigen::Vector3i> cells;  // sorted by linear index
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();  // mean of cell centers, m
  Eigen::Vector3d extent = Eigen::Vector3d::Zero();    // center span per axis, m
};

/// A candidate sensing pose for a cluster with its estimated information
/// gain (count of unknown cells visible from it).
struct Viewpoint {
  PoseXYZYaw pose;
  double ig = 0;
  int cluster_id = -1;
};

/// Free cell with at least one in-bounds Unknown face neighbor.
bool is_frontier_cell(const VoxelGrid& grid, const Eigen::Vector3i& cell);

/// Occlusion-aware count of distinct Unknown cells the coarse ray set from
/// `pose` reaches before its first Occupied cell or range limit.
int cell_count_ig(const VoxelGrid& grid, const PoseXYZYaw& pose, const SensorModel& sensor);

/// Occlusion-free footprint: sorted linear ids of in-bounds cells whose
/// center lies within the sensing range and frustum of `pose`.
std::vector<int> viewpoint_footprint(const VoxelGrid& grid, const PoseXYZYaw& pose,
                                     const SensorModel& sensor);

/// |Fu ∩ Fv| / min(|Fu|, |Fv|); 0 when either footprint is empty.
double footprint_correlation(const std::vector<int>& fu, const std::vector<int>& fv);

/// Convenience wrapper computing both footprints on the fly.
double correlation(const VoxelGrid& grid, const Viewpoint& u, const Viewpoint& v,
                   const SensorModel& sensor);

/// Recursively bisect `cluster` at the median along its largest-variance
/// axis until every leaf spans at most f_sz; leaves carry fresh geometry but
/// id -1 (ids are assigned by the tracker).
std::vector<FrontierCluster> split_cluster(const VoxelGrid& grid,
                                           const FrontierCluster& cluster, double f_sz);

struct SamplingParams {
  int n_pos = 12;
  std::vector<double> ring_radii = {1.0, 1.5};
  int n_yaw = 8;
  double height_band = 0.1;  // m, vertical sampling band around the centroid
  SensorModel ig_sensor;
};

/// Two-step sampling: candidate positions on rings around the cluster
/// centroid (kept only when in Free space), then the best of n_yaw uniformly
/// spaced yaws per position by cell_count_ig. Returns the overall best, or
/// none when no candidate is Free or every IG is zero. Ties break toward the
/// lowest candidate index. Consumes exactly 2 draws per candidate position.
std::optional<Viewpoint> sample_viewpoint(const VoxelGrid& grid,
                                          const FrontierCluster& cluster,
                                          const SamplingParams& params,
                                          RngStream::Sub& rng);

/// Incrementally maintained frontier cell set with full reclustering after
/// each update. The cell set always equals what a from-scratch scan of the
/// whole grid would produce; cluster ids are stable for clusters whose cell
/// set did not change.
class FrontierTracker {
 public:
  explicit FrontierTracker(double f_sz) : f_sz_(f_sz) {}

  /// Re-test cells in (and one cell around) the updated bbox, then recluster.
  const std::vector<FrontierCluster>& update(const VoxelGrid& grid, const UpdateBBox& bbox);

  const std::vector<FrontierCluster>& clusters() const { return clusters_; }
  /// Sorted linear cell ids of the current frontier set.
  std::vector<int> frontier_cells() const { return {frontier_.begin(), frontier_.end()}; }
  bool empty() const { return frontier_.empty(); }

 private:
  double f_sz_;
  std::set<int> frontier_;
  std::vector<FrontierCluster> clusters_;
  int next_id_ = 0;
};

}  // namespace actslam
