#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "actslam/sim.hpp"
#include "actslam/world.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace actslam;

namespace {

WorldModel open_room() {
  return WorldModel::from_json(nlohmann::json::parse(R"({
    "bounds": [20, 20, 3],
    "start": [10, 10, 1, 0],
    "obstacles": [],
    "objects": [
      {"position": [13, 10, 1], "label": "chair"},
      {"position": [10, 13, 1], "label": "table"},
      {"position": [7, 10, 1], "label": "plant"},
      {"position": [10, 7, 1], "label": "shelf"}
    ]
  })"));
}

SensorModel test_sensor() {
  SensorModel s;
  s.fov_h = 87.0 * std::numbers::pi / 180.0;
  s.fov_v = 58.0 * std::numbers::pi / 180.0;
  s.range = 5.0;
  s.n_h = 16;
  s.n_v = 8;
  return s;
}

PoseXYZYaw at(double x, double y, double z, double yaw = 0) {
  PoseXYZYaw p;
  p.position = {x, y, z};
  p.yaw = yaw;
  return p;
}

}  // namespace

TEST_CASE("sense reports in-frustum unoccluded objects in the body frame") {
  const WorldModel world = open_room();
  RngStream rng(1);
  auto& sub = rng.stream("det");

  // Facing east: the chair sits 3 m straight ahead; zero noise.
  const SenseResult east = sense(world, at(10, 10, 1, 0), test_sensor(), 0.0, sub);
  REQUIRE(east.detections.size() == 1);
  CHECK(east.detections[0].label == "chair");
  CHECK((east.detections[0].body_disp - Eigen::Vector3d(3, 0, 0)).norm() < 1e-12);
  CHECK(east.detections[0].object_id == 0);

  // Facing north: only the table.
  const SenseResult north =
      sense(world, at(10, 10, 1, std::numbers::pi / 2), test_sensor(), 0.0, sub);
  REQUIRE(north.detections.size() == 1);
  CHECK(north.detections[0].label == "table");
  CHECK((north.detections[0].body_disp - Eigen::Vector3d(3, 0, 0)).norm() < 1e-12);

  // Depth rays: full ray grid, forward rays unobstructed to max range.
  CHECK(east.body_rays.size() == 16u * 8u);
  int misses = 0;
  for (const Ray& r : east.body_rays) misses += r.is_hit ? 0 : 1;
  CHECK(misses > 0);
}

TEST_CASE("sense respects occlusion and range") {
  WorldModel world = open_room();
  world.obstacles.push_back({{11.5, 9, 0}, {12, 11, 3}});  // wall before the chair
  world.validate();
  RngStream rng(2);
  auto& sub = rng.stream("det");

  const SenseResult blocked = sense(world, at(10, 10, 1, 0), test_sensor(), 0.0, sub);
  CHECK(blocked.detections.empty());
  // The wall shows up in the depth scan: forward rays terminate around 1.5 m.
  bool near_hit = false;
  for (const Ray& r : blocked.body_rays) {
    if (r.is_hit && std::abs(r.endpoint.y()) < 0.2 && std::abs(r.endpoint.z() - 0) < 0.2 &&
        r.endpoint.x() < 1.6) {
      near_hit = true;
    }
  }
  CHECK(near_hit);

  // An object beyond the sensing range is ignored.
  SensorModel short_range = test_sensor();
  short_range.range = 2.0;
  WorldModel clear = open_room();
  const SenseResult far = sense(clear, at(10, 10, 1, 0), short_range, 0.0, sub);
  CHECK(far.detections.empty());
}

TEST_CASE("detection noise is per-axis Gaussian and seed-deterministic") {
  const WorldModel world = open_room();
  RngStream rng_a(7);
  RngStream rng_b(7);
  const SenseResult a =
      sense(world, at(10, 10, 1, 0), test_sensor(), 0.1, rng_a.stream("det"));
  const SenseResult b =
      sense(world, at(10, 10, 1, 0), test_sensor(), 0.1, rng_b.stream("det"));
  REQUIRE(a.detections.size() == 1);
  REQUIRE(b.detections.size() == 1);
  CHECK(a.detections[0].body_disp == b.detections[0].body_disp);
  CHECK((a.detections[0].body_disp - Eigen::Vector3d(3, 0, 0)).norm() < 1.0);
  CHECK((a.detections[0].body_disp - Eigen::Vector3d(3, 0, 0)).norm() > 0.0);
}

TEST_CASE("rays_in_world maps body returns through the integration pose") {
  std::vector<Ray> body = {{{2, 0, 0}, true}, {{0, 3, 0}, false}};
  const auto world_rays = rays_in_world(body, at(1, 1, 1, std::numbers::pi / 2));
  CHECK((world_rays[0].endpoint - Eigen::Vector3d(1, 3, 1)).norm() < 1e-12);
  CHECK(world_rays[0].is_hit);
  CHECK((world_rays[1].endpoint - Eigen::Vector3d(-2, 1, 1)).norm() < 1e-12);
  CHECK(!world_rays[1].is_hit);
}

TEST_CASE("step_motion: exact with zero noise, deterministic with a seed") {
  RobotState clean;
  clean.true_pose = at(0, 0, 0, 0);
  clean.vio_pose = clean.true_pose;
  RngStream rng(3);
  auto& sub = rng.stream("odom");
  for (int i = 0; i < 50; ++i) {
    PoseXYZYaw rel = at(1, 0, 0, 0.01);
    step_motion(clean, rel, 0.0, 0.0, sub);
  }
  CHECK((clean.vio_pose.position - clean.true_pose.position).norm() == 0.0);
  CHECK(clean.vio_pose.yaw == clean.true_pose.yaw);
  CHECK(clean.traveled == doctest::Approx(50.0).epsilon(1e-12));

  RobotState s1, s2;
  RngStream r1(11), r2(11);
  auto& sub1 = r1.stream("odom");
  auto& sub2 = r2.stream("odom");
  for (int i = 0; i < 20; ++i) {
    const PoseXYZYaw inc1 = step_motion(s1, at(1, 0, 0), 0.05, 0.01, sub1);
    const PoseXYZYaw inc2 = step_motion(s2, at(1, 0, 0), 0.05, 0.01, sub2);
    CHECK(inc1.position == inc2.position);
    CHECK(inc1.yaw == inc2.yaw);
  }
  CHECK(s1.vio_pose.position == s2.vio_pose.position);
}

TEST_CASE("vio drift after 100 m matches the random-walk prediction") {
  // 100 ticks of 1 m at sigma_t = 0.05 (heading noise off so the per-axis
  // prediction stays exact): error std per axis = 0.05 * sqrt(100) = 0.5.
  const int kSeeds = 200;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Vector3d sum_sq = Eigen::Vector3d::Zero();
  for (int seed = 1; seed <= kSeeds; ++seed) {
    RobotState state;
    RngStream rng(static_cast<std::uint64_t>(seed));
    auto& sub = rng.stream("odom");
    for (int i = 0; i < 100; ++i) step_motion(state, at(1, 0, 0), 0.05, 0.0, sub);
    const Eigen::Vector3d err = state.vio_pose.position - state.true_pose.position;
    sum += err;
    sum_sq += err.cwiseProduct(err);
  }
  for (int axis = 0; axis < 3; ++axis) {
    const double mean = sum[axis] / kSeeds;
    const double var = sum_sq[axis] / kSeeds - mean * mean;
    const double std_dev = std::sqrt(var);
    CAPTURE(axis);
    CHECK(std_dev > 0.5 * 0.8);
    CHECK(std_dev < 0.5 * 1.2);
  }
}

TEST_CASE("panorama unions a full circle of detections exactly once each") {
  const WorldModel world = open_room();
  RngStream rng(5);
  const PoseXYZYaw pose = at(10, 10, 1, 0.3);
  const auto dets = panorama(world, pose, test_sensor(), 12, 0.0, rng.stream("pano"));

  REQUIRE(dets.size() == 4);
  for (size_t i = 0; i < dets.size(); ++i) {
    CHECK(dets[i].object_id == static_cast<int>(i));
    // Zero noise: displacement is exact in the sweep-start body frame.
    const Eigen::Vector3d expected = pose.untransform(world.objects[i].centroid);
    CHECK((dets[i].body_disp - expected).norm() < 1e-12);
  }

  // Determinism with noise.
  RngStream ra(9), rb(9);
  const auto da = panorama(world, pose, test_sensor(), 12, 0.1, ra.stream("pano"));
  const auto db = panorama(world, pose, test_sensor(), 12, 0.1, rb.stream("pano"));
  REQUIRE(da.size() == db.size());
  for (size_t i = 0; i < da.size(); ++i) CHECK(da[i].body_disp == db[i].body_disp);
}

TEST_CASE("panorama is empty away from objects and honors occlusion") {
  WorldModel world = open_room();
  RngStream rng(6);
  // Far corner: everything is out of the 5 m range.
  const auto none =
      panorama(world, at(1, 1, 1, 0), test_sensor(), 12, 0.0, rng.stream("pano"));
  CHECK(none.empty());

  // A wall between the robot and the chair hides it from every sweep stop.
  world.obstacles.push_back({{11.5, 9, 0}, {12, 11, 3}});
  world.validate();
  const auto occluded =
      panorama(world, at(10, 10, 1, 0), test_sensor(), 12, 0.0, rng.stream("pano"));
  CHECK(occluded.size() == 3);
  for (const Detection& d : occluded) CHECK(d.label != "chair");
}
