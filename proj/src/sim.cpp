#include "actslam/sim.hpp"

#include <cmath>
#include <numbers>

namespace actslam {

SenseResult sense(const WorldModel& world, const PoseXYZYaw& true_pose,
                  const SensorModel& sensor, double sigma_det,
                  RngStream::Sub& rng) {
  SenseResult out;
  const Eigen::Matrix3d rot = true_pose.rotation();
  for (const Eigen::Vector3d& dir : sensor.body_dirs()) {
    const Ray world_ray =
        world.cast_sensor_ray(true_pose.position, rot * dir, sensor.range);
    out.body_rays.push_back(
        {true_pose.untransform(world_ray.endpoint), world_ray.is_hit});
  }
  for (size_t i = 0; i < world.objects.size(); ++i) {
    const WorldObject& obj = world.objects[i];
    if (!sensor.in_frustum(true_pose, obj.centroid)) continue;
    if (!world.segment_free(true_pose.position, obj.centroid)) continue;
    Detection det;
    det.body_disp = true_pose.untransform(obj.centroid);
    det.body_disp.x() += rng.normal(0, sigma_det);
    det.body_disp.y() += rng.normal(0, sigma_det);
    det.body_disp.z() += rng.normal(0, sigma_det);
    det.label = obj.label;
    det.object_id = static_cast<int>(i);
    out.detections.push_back(det);
  }
  return out;
}

std::vector<Ray> rays_in_world(const std::vector<Ray>& body_rays,
                               const PoseXYZYaw& pose) {
  std::vector<Ray> out;
  out.reserve(body_rays.size());
  for (const Ray& r : body_rays) {
    out.push_back({pose.transform(r.endpoint), r.is_hit});
  }
  return out;
}

PoseXYZYaw step_motion(RobotState& state, const PoseXYZYaw& true_relative,
                       double sigma_t, double sigma_psi, RngStream::Sub& rng) {
  const double d = true_relative.position.norm();
  PoseXYZYaw noisy = true_relative;
  noisy.position.x() += rng.normal(0, sigma_t * d);
  noisy.position.y() += rng.normal(0, sigma_t * d);
  noisy.position.z() += rng.normal(0, sigma_t * d);
  noisy.yaw = wrap_angle(noisy.yaw + rng.normal(0, sigma_psi * d));
  state.true_pose = compose(state.true_pose, true_relative);
  state.vio_pose = compose(state.vio_pose, noisy);
  state.traveled += d;
  return noisy;
}

std::vector<Detection> panorama(const WorldModel& world, const PoseXYZYaw& true_pose,
                                const SensorModel& sensor, int n_stops,
                                double sigma_det, RngStream::Sub& rng) {
  std::vector<char> seen(world.objects.size(), 0);
  for (int s = 0; s < n_stops; ++s) {
    PoseXYZYaw stop = true_pose;
    stop.yaw = wrap_angle(true_pose.yaw +
                          2.0 * std::numbers::pi * static_cast<double>(s) /
                              static_cast<double>(n_stops));
    for (size_t i = 0; i < world.objects.size(); ++i) {
      if (seen[i]) continue;
      const WorldObject& obj = world.objects[i];
      if (!sensor.in_frustum(stop, obj.centroid)) continue;
      if (!world.segment_free(true_pose.position, obj.centroid)) continue;
      seen[i] = 1;
    }
  }
  // One noise draw per object, in ascending object id; displacements in the
  // body frame of the sweep-start yaw.
  std::vector<Detection> out;
  for (size_t i = 0; i < world.objects.size(); ++i) {
    if (!seen[i]) continue;
    Detection det;
    det.body_disp = true_pose.untransform(world.objects[i].centroid);
    det.body_disp.x() += rng.normal(0, sigma_det);
    det.body_disp.y() += rng.normal(0, sigma_det);
    det.body_disp.z() += rng.normal(0, sigma_det);
    det.label = world.objects[i].label;
    det.object_id = static_cast<int>(i);
    out.push_back(det);
  }
  return out;
}

}  // namespace actslam
