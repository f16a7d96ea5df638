#include "actslam/world.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace actslam {

namespace {

constexpr double kSurfaceNudge = 1e-3;  // m, endpoint shift into the struck face

/// Entry distance of a ray into a closed box, or none. An origin inside the
/// box reports distance 0.
std::optional<double> box_entry(const Box& box, const Eigen::Vector3d& o,
                                const Eigen::Vector3d& d, double max_range) {
  double t_near = 0;
  double t_far = max_range;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (o[axis] < box.min[axis] || o[axis] > box.max[axis]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[axis] - o[axis]) / d[axis];
    double t1 = (box.max[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  return t_near;
}

/// Distance at which a ray from an interior origin leaves [0, bounds).
double bounds_exit(const Eigen::Vector3d& bounds, const Eigen::Vector3d& o,
                   const Eigen::Vector3d& d) {
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] > 0.0) {
      t_exit = std::min(t_exit, (bounds[axis] - o[axis]) / d[axis]);
    } else if (d[axis] < 0.0) {
      t_exit = std::min(t_exit, (0.0 - o[axis]) / d[axis]);
    }
  }
  return t_exit;
}

struct Rect2 {
  double min_x, min_y, max_x, max_y;
  bool empty() const { return max_x - min_x <= 1e-12 || max_y - min_y <= 1e-12; }
};

/// Subtract `hole` from every rectangle, keeping the up-to-four remnants.
std::vector<Rect2> subtract(const std::vector<Rect2>& rects, const Rect2& hole) {
  std::vector<Rect2> out;
  for (const Rect2& r : rects) {
    const bool overlaps = r.min_x < hole.max_x && hole.min_x < r.max_x &&
                          r.min_y < hole.max_y && hole.min_y < r.max_y;
    if (!overlaps) {
      out.push_back(r);
      continue;
    }
    const Rect2 left{r.min_x, r.min_y, std::min(r.max_x, hole.min_x), r.max_y};
    const Rect2 right{std::max(r.min_x, hole.max_x), r.min_y, r.max_x, r.max_y};
    const double mid_lo = std::max(r.min_x, hole.min_x);
    const double mid_hi = std::min(r.max_x, hole.max_x);
    const Rect2 bottom{mid_lo, r.min_y, mid_hi, std::min(r.max_y, hole.min_y)};
    const Rect2 top{mid_lo, std::max(r.min_y, hole.max_y), mid_hi, r.max_y};
    for (const Rect2& piece : {left, right, bottom, top}) {
      if (!piece.empty()) out.push_back(piece);
    }
  }
  return out;
}

Eigen::Vector3d parse_vec3(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("world: " + what + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void reject_unknown_keys(const nlohmann::json& j,
                         const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw std::invalid_argument("world: unknown key '" + item.key() + "' in " +
                                  where);
    }
  }
}

}  // namespace

WorldModel WorldModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("world file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("world file " + path + ": " + e.what());
  }
  return from_json(j);
}

WorldModel WorldModel::from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j, {"name", "bounds", "start", "obstacles", "objects", "floors"}, "world");
  WorldModel w;
  w.name = j.value("name", std::string{});
  w.bounds = parse_vec3(j.at("bounds"), "bounds");

  const auto& start = j.at("start");
  if (!start.is_array() || start.size() != 4) {
    throw std::invalid_argument("world: start must be [x, y, z, yaw]");
  }
  w.start.position = {start[0].get<double>(), start[1].get<double>(),
                      start[2].get<double>()};
  w.start.yaw = wrap_angle(start[3].get<double>());

  for (const auto& jb : j.value("obstacles", nlohmann::json::array())) {
    reject_unknown_keys(jb, {"min", "max"}, "obstacle");
    w.obstacles.push_back(
        {parse_vec3(jb.at("min"), "obstacle min"), parse_vec3(jb.at("max"), "obstacle max")});
  }
  for (const auto& jo : j.value("objects", nlohmann::json::array())) {
    reject_unknown_keys(jo, {"position", "label"}, "object");
    w.objects.push_back({parse_vec3(jo.at("position"), "object position"),
                         jo.at("label").get<std::string>()});
  }
  for (const auto& jf : j.value("floors", nlohmann::json::array())) {
    reject_unknown_keys(jf, {"z", "thickness", "openings"}, "floor");
    const double z = jf.at("z").get<double>();
    const double thickness = jf.at("thickness").get<double>();
    if (thickness <= 0) throw std::invalid_argument("world: floor thickness must be > 0");
    std::vector<Rect2> slab = {{0, 0, w.bounds.x(), w.bounds.y()}};
    for (const auto& jopen : jf.value("openings", nlohmann::json::array())) {
      reject_unknown_keys(jopen, {"min", "max"}, "floor opening");
      const auto& lo = jopen.at("min");
      const auto& hi = jopen.at("max");
      if (!lo.is_array() || lo.size() != 2 || !hi.is_array() || hi.size() != 2) {
        throw std::invalid_argument("world: floor openings use 2D min/max");
      }
      slab = subtract(slab, {lo[0].get<double>(), lo[1].get<double>(),
                             hi[0].get<double>(), hi[1].get<double>()});
    }
    for (const Rect2& r : slab) {
      w.obstacles.push_back({{r.min_x, r.min_y, z}, {r.max_x, r.max_y, z + thickness}});
    }
  }
  w.validate();
  return w;
}

void WorldModel::validate() const {
  if (!(bounds.array() > 0).all()) {
    throw std::invalid_argument("world: bounds must be positive");
  }
  for (const Box& b : obstacles) {
    if (!(b.max.array() >= b.min.array()).all()) {
      throw std::invalid_argument("world: obstacle with max < min");
    }
  }
  for (const WorldObject& obj : objects) {
    if (!(obj.centroid.array() >= 0).all() ||
        !(obj.centroid.array() < bounds.array()).all()) {
      throw std::invalid_argument("world: object outside bounds");
    }
    for (const Box& b : obstacles) {
      if (b.contains_strict(obj.centroid)) {
        throw std::invalid_argument("world: object inside an obstacle");
      }
    }
    if (obj.label.empty()) throw std::invalid_argument("world: object without label");
  }
  if (!position_free(start.position)) {
    throw std::invalid_argument("world: start pose is not in free space");
  }
}

bool WorldModel::position_free(const Eigen::Vector3d& p) const {
  if (!(p.array() >= 0).all() || !(p.array() < bounds.array()).all()) return false;
  for (const Box& b : obstacles) {
    if (b.contains(p)) return false;
  }
  return true;
}

std::optional<RayHit> WorldModel::raycast(const Eigen::Vector3d& origin,
                                          const Eigen::Vector3d& dir,
                                          double max_range) const {
  std::optional<RayHit> best;
  for (const Box& b : obstacles) {
    const auto entry = box_entry(b, origin, dir, max_range);
    if (entry && (!best || *entry < best->distance)) best = RayHit{*entry, false};
  }
  const bool inside = (origin.array() >= 0).all() &&
                      (origin.array() < bounds.array()).all();
  if (inside) {
    const double exit = bounds_exit(bounds, origin, dir);
    if (exit <= max_range && (!best || exit < best->distance)) {
      best = RayHit{exit, true};
    }
  }
  return best;
}

bool WorldModel::segment_free(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const {
  const double length = (b - a).norm();
  if (length == 0.0) return true;
  const Eigen::Vector3d dir = (b - a) / length;
  const auto hit = raycast(a, dir, length);
  // A strike at (or numerically beyond) the far endpoint does not occlude it.
  return !hit || hit->boundary || hit->distance >= length - 1e-9;
}

Ray WorldModel::cast_sensor_ray(const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir, double max_range) const {
  const auto hit = raycast(origin, dir, max_range);
  if (!hit) return {origin + dir * max_range, false};
  // Nudge into the struck face so the endpoint lands in the solid cell; the
  // outer shell is nudged inward instead, marking the last in-bounds cell.
  const double s = hit->boundary ? hit->distance - kSurfaceNudge
                                 : hit->distance + kSurfaceNudge;
  return {origin + dir * std::max(s, 0.0), true};
}

Eigen::Vector3i WorldModel::grid_dims(double resolution) const {
  if (resolution <= 0) throw std::invalid_argument("world: resolution must be > 0");
  return {static_cast<int>(std::ceil(bounds.x() / resolution)),
          static_cast<int>(std::ceil(bounds.y() / resolution)),
          static_cast<int>(std::ceil(bounds.z() / resolution))};
}

}  // namespace actslam
