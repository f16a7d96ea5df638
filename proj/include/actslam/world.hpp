#pragma once

#include "actslam/pose.hpp"
#include "actslam/voxel_grid.hpp"

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace actslam {

/// Solid axis-aligned box, closed on all faces.
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool contains_strict(const Eigen::Vector3d& p) const {
    return (p.array() > min.array()).all() && (p.array() < max.array()).all();
  }
};

/// A detectable object: a point centroid with a semantic class.
struct WorldObject {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  std::string label;
};

/// Result of a ground-truth ray query.
struct RayHit {
  double distance = 0;   // m along the unit direction
  bool boundary = false; // hit the world's outer shell rather than an obstacle
};

/// Ground-truth environment: a solid-walled box spanning [0, bounds) filled
/// with axis-aligned obstacles and labeled point objects. Floor slabs with
/// stairwell openings are expanded into obstacle boxes at load time.
struct WorldModel {
  std::string name;
  Eigen::Vector3d bounds = Eigen::Vector3d::Zero();  // m, exclusive upper corner
  std::vector<Box> obstacles;
  std::vector<WorldObject> objects;
  PoseXYZYaw start;

  /// Parse from a JSON file; throws std::runtime_error naming the path when
  /// the file is missing, std::invalid_argument on schema violations.
  static WorldModel load(const std::string& path);
  static WorldModel from_json(const nlohmann::json& j);

  /// Bounds positive, obstacles well-formed, objects and start placed in
  /// free space. Throws std::invalid_argument.
  void validate() const;

  /// Inside the bounds and outside every obstacle.
  bool position_free(const Eigen::Vector3d& p) const;

  /// Nearest surface along `origin` + s * `dir` (unit), s in (0, max_range]:
  /// obstacle faces and the outer shell are both solid. Empty when nothing is
  /// struck within range (only possible while inside the bounds).
  std::optional<RayHit> raycast(const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir, double max_range) const;

  /// True when the open segment from `a` to `b` crosses no obstacle (the
  /// endpoints themselves are not tested).
  bool segment_free(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const;

  /// Depth return for one sensor ray: endpoint on the struck surface (nudged
  /// just inside it so the endpoint cell is the solid one; boundary hits are
  /// nudged just inside the shell) with is_hit=true, or the free-space point
  /// at max_range with is_hit=false.
  Ray cast_sensor_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                      double max_range) const;

  /// Grid dimensioned to cover [0, bounds) at `resolution` (ceil per axis).
  Eigen::Vector3i grid_dims(double resolution) const;
};

}  // namespace actslam
