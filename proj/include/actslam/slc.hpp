#pragma once

#include "actslam/factor_graph.hpp"
#include "actslam/pose.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace actslam {

/// A position with a semantic class label; in map frame (landmarks) or body
/// frame (detections), depending on context.
struct LabeledPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::string label;
};

/// A graph landmark together with its id, the unit slc works over.
struct LandmarkRef {
  int id = -1;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::string label;
};

/// Density cluster of landmarks, the candidate unit for loop closure.
/// landmark_ids are sorted ascending; centroids/classes are index-aligned.
struct Submap {
  std::vector<int> landmark_ids;
  std::vector<Eigen::Vector3d> centroids;
  std::vector<std::string> classes;

  int size() const { return static_cast<int>(landmark_ids.size()); }
};

/// A submap paired with the key pose to revisit for re-observing it.
struct SlcCandidate {
  Submap submap;
  PoseId viewpoint = -1;
  PoseXYZYaw viewpoint_pose;
};

/// Closed-form yaw-plus-translation fit for a fixed correspondence.
struct FitResult {
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double psi = 0;       // rad
  double residual = 0;  // m^2, mean of squared point distances
  bool degenerate = false;
};

/// Accepted labeled point-set alignment. correspondences pair a map-side
/// landmark id with a local detection index; classes always agree.
struct AlignmentResult {
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double psi = 0;
  double residual = 0;
  int k = 0;
  std::vector<std::pair<int, int>> correspondences;

  PoseXYZYaw as_pose() const {
    PoseXYZYaw p;
    p.position = t;
    p.yaw = psi;
    return p;
  }
};

std::vector<LandmarkRef> landmark_refs(const SemanticGraph& graph);

/// DBSCAN over landmark centroids (class-agnostic, Euclidean) with radius
/// eps_db and min_pts; clusters smaller than f_cs are discarded. Clusters
/// are ordered by their smallest landmark id.
std::vector<Submap> cluster_submaps(std::span<const LandmarkRef> landmarks,
                                    double eps_db, int min_pts, int f_cs);

/// The key pose within f_sr of every submap landmark that has the earliest
/// insertion timestamp (ties: lowest pose id); none if no pose qualifies.
std::optional<SlcCandidate> select_viewpoint(const SemanticGraph& graph,
                                             const Submap& submap, double f_sr);

/// Least-squares t and yaw mapping seq_b onto seq_a under a[i] ~ R(psi) b[i] + t,
/// minimizing the mean squared distance. Sequences must be non-empty and the
/// same length. Horizontally degenerate point sets (yaw unobservable) come
/// back flagged with infinite residual.
FitResult closed_form_fit(std::span<const Eigen::Vector3d> seq_a,
                          std::span<const Eigen::Vector3d> seq_b);

/// Exhaustive class-compatible injective correspondence search between a map
/// point set and a local one, largest cardinality first: for k from
/// min(n, m) down to k_min, evaluates every correspondence's closed-form fit
/// and accepts the first k whose best mean-squared residual is at most tau.
std::optional<AlignmentResult> align(std::span<const LandmarkRef> map_set,
                                     std::span<const LabeledPoint> local_set,
                                     int k_min, double tau);

/// Match panorama detections (body frame at the sweep-start yaw, robot pose
/// unknown) against graph landmarks within 2*f_sr of the latest pose
/// estimate. On success the alignment's (t, psi) is the robot's pose.
std::optional<AlignmentResult> detect_loop_closure(
    const SemanticGraph& graph, std::span<const LabeledPoint> detections,
    double f_sr, int k_min, double tau);

}  // namespace actslam
