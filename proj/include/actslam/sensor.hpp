#pragma once

#include "actslam/pose.hpp"

#include <Eigen/Core>

#include <vector>

namespace actslam {

struct Config;

/// Pinhole-style depth/detection frustum: horizontal and vertical field of
/// view, max range, and a fixed angular ray grid. The same model serves
/// mapping (fine grid), IG counting (coarse grid), and detection gating.
struct SensorModel {
  double fov_h = 0;   // rad
  double fov_v = 0;   // rad
  double range = 0;   // m
  int n_h = 0;        // rays across the horizontal FoV
  int n_v = 0;        // rays across the vertical FoV

  /// Mapping-resolution model from config (n_rays_h x n_rays_v).
  static SensorModel mapping(const Config& cfg);
  /// Coarse model used for cell-counting IG (ig_rays_h x ig_rays_v).
  static SensorModel ig(const Config& cfg);

  /// Unit ray directions in the body frame (x forward, z up), ordered by
  /// (vertical, horizontal) index. Evenly spans both FoV angles inclusive.
  std::vector<Eigen::Vector3d> body_dirs() const;

  /// True if the world point lies within range and inside both FoV angles
  /// as seen from `pose`.
  bool in_frustum(const PoseXYZYaw& pose, const Eigen::Vector3d& point) const;
};

}  // namespace actslam
