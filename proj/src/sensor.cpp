#include "actslam/sensor.hpp"

#include "actslam/config.hpp"

#include <cmath>

namespace actslam {

SensorModel SensorModel::mapping(const Config& cfg) {
  return SensorModel{cfg.fov_h(), cfg.fov_v(), cfg.f_sr, cfg.n_rays_h, cfg.n_rays_v};
}

SensorModel SensorModel::ig(const Config& cfg) {
  return SensorModel{cfg.fov_h(), cfg.fov_v(), cfg.f_sr, cfg.ig_rays_h, cfg.ig_rays_v};
}

std::vector<Eigen::Vector3d> SensorModel::body_dirs() const {
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(static_cast<size_t>(n_h) * n_v);
  for (int iv = 0; iv < n_v; ++iv) {
    const double el = -fov_v / 2 + fov_v * iv / (n_v - 1);
    for (int ih = 0; ih < n_h; ++ih) {
      const double az = -fov_h / 2 + fov_h * ih / (n_h - 1);
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                        std::sin(el));
    }
  }
  return dirs;
}

bool SensorModel::in_frustum(const PoseXYZYaw& pose, const Eigen::Vector3d& point) const {
  const Eigen::Vector3d d = point - pose.position;
  const double r = d.norm();
  if (r > range) return false;
  if (r == 0.0) return true;
  const Eigen::Vector3d body = yaw_rotation(-pose.yaw) * d;
  const double az = std::atan2(body.y(), body.x());
  const double el = std::atan2(body.z(), std::hypot(body.x(), body.y()));
  return std::abs(az) <= fov_h / 2 && std::abs(el) <= fov_v / 2;
}

}  // namespace actslam
