#pragma once

#include "actslam/pose.hpp"
#include "actslam/rng.hpp"
#include "actslam/sensor.hpp"
#include "actslam/voxel_grid.hpp"
#include "actslam/world.hpp"

#include <Eigen/Core>

#include <vector>

namespace actslam {

/// Ground truth plus the drifting odometry estimate of the robot.
struct RobotState {
  PoseXYZYaw true_pose;
  PoseXYZYaw vio_pose;  // advanced only by noisy odometry increments
  double traveled = 0;  // m, ground-truth arc length
};

/// One object detection: noisy body-frame displacement plus class. object_id
/// is simulator plumbing for panorama deduplication — estimation code must
/// associate by geometry, never by this id.
struct Detection {
  Eigen::Vector3d body_disp = Eigen::Vector3d::Zero();
  std::string label;
  int object_id = -1;
};

/// One sensing cycle from a ground-truth pose. Rays are body-frame depth
/// returns (re-expressed and integrated at whatever pose estimate the mapper
/// trusts); detections are unoccluded in-frustum objects within the sensor
/// range, with per-axis Gaussian noise sigma_det on the displacement.
struct SenseResult {
  std::vector<Ray> body_rays;
  std::vector<Detection> detections;
};

SenseResult sense(const WorldModel& world, const PoseXYZYaw& true_pose,
                  const SensorModel& sensor, double sigma_det,
                  RngStream::Sub& rng);

/// Body-frame depth returns mapped through `pose` into world-frame rays.
std::vector<Ray> rays_in_world(const std::vector<Ray>& body_rays,
                               const PoseXYZYaw& pose);

/// One odometry tick: advance the true pose by `true_relative` and the vio
/// pose by the same increment corrupted with per-axis position std
/// sigma_t * d and yaw std sigma_psi * d, where d is the increment's
/// translation length. Returns the noisy increment; adds d to traveled.
PoseXYZYaw step_motion(RobotState& state, const PoseXYZYaw& true_relative,
                       double sigma_t, double sigma_psi, RngStream::Sub& rng);

/// Full in-place yaw sweep at the true pose in `n_stops` uniform increments:
/// detections unioned over the stops, deduplicated by ground-truth object id,
/// reported in the body frame of the sweep-start yaw with fresh noise drawn
/// once per object (in ascending object id order).
std::vector<Detection> panorama(const WorldModel& world, const PoseXYZYaw& true_pose,
                                const SensorModel& sensor, int n_stops,
                                double sigma_det, RngStream::Sub& rng);

}  // namespace actslam
