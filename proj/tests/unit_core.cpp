#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "actslam/config.hpp"
#include "actslam/pose.hpp"
#include "actslam/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace actslam;

namespace {

constexpr double kPi = std::numbers::pi;

PoseXYZYaw make_pose(double x, double y, double z, double yaw) {
  PoseXYZYaw p;
  p.position << x, y, z;
  p.yaw = yaw;
  return p;
}

void check_pose_eq(const PoseXYZYaw& a, const PoseXYZYaw& b, double tol = 1e-12) {
  CHECK((a.position - b.position).norm() <= tol);
  CHECK(std::abs(wrap_angle(a.yaw - b.yaw)) <= tol);
}

PoseXYZYaw random_pose(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  return make_pose(u(gen), u(gen), u(gen), a(gen));
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));  // open lower end folds up
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2 * kPi) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  for (double x = -50.0; x < 50.0; x += 0.7) {
    double w = wrap_angle(x);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    // Same angle modulo 2*pi.
    CHECK(std::abs(std::remainder(w - x, 2 * kPi)) < 1e-9);
  }
}

TEST_CASE("yaw_rotation basics") {
  CHECK((yaw_rotation(0.0) - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0.0));

  Eigen::Vector3d ex(1, 0, 0);
  Eigen::Vector3d rotated = yaw_rotation(kPi / 2) * ex;
  CHECK((rotated - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> a(-3 * kPi, 3 * kPi);
  for (int i = 0; i < 20; ++i) {
    double psi = a(gen);
    Eigen::Matrix3d r = yaw_rotation(psi);
    CHECK((r * yaw_rotation(-psi) - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK((r.transpose() - yaw_rotation(-psi)).norm() < 1e-12);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
    CHECK((r * Eigen::Vector3d::UnitZ() - Eigen::Vector3d::UnitZ()).norm() == 0.0);
  }
}

TEST_CASE("compose identity and inverse") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 20; ++i) {
    PoseXYZYaw p = random_pose(gen);
    check_pose_eq(compose(PoseXYZYaw::Identity(), p), p);
    check_pose_eq(compose(p, PoseXYZYaw::Identity()), p);
    check_pose_eq(compose(p, inverse(p)), PoseXYZYaw::Identity(), 1e-11);
    check_pose_eq(compose(inverse(p), p), PoseXYZYaw::Identity(), 1e-11);
  }
}

TEST_CASE("compose rotates the second operand") {
  PoseXYZYaw a = make_pose(0, 0, 0, kPi / 2);
  PoseXYZYaw b = make_pose(1, 0, 0, 0);
  check_pose_eq(compose(a, b), make_pose(0, 1, 0, kPi / 2));
}

TEST_CASE("compose is associative") {
  std::mt19937_64 gen(13);
  for (int i = 0; i < 50; ++i) {
    PoseXYZYaw a = random_pose(gen), b = random_pose(gen), c = random_pose(gen);
    check_pose_eq(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-12 * 20);
  }
}

TEST_CASE("relative examples") {
  std::mt19937_64 gen(17);
  PoseXYZYaw p = random_pose(gen);
  check_pose_eq(relative(p, p), PoseXYZYaw::Identity(), 1e-11);

  check_pose_eq(relative(make_pose(1, 1, 0, 0), make_pose(0, 0, 0, 0)),
                make_pose(1, 1, 0, 0));
  check_pose_eq(relative(make_pose(0, 1, 0, kPi / 2), make_pose(0, 0, 0, kPi / 2)),
                make_pose(1, 0, 0, 0), 1e-12);
}

TEST_CASE("relative inverts compose") {
  std::mt19937_64 gen(19);
  for (int i = 0; i < 50; ++i) {
    PoseXYZYaw b = random_pose(gen), d = random_pose(gen);
    PoseXYZYaw a = compose(b, d);
    PoseXYZYaw rel = relative(a, b);
    CHECK(std::abs(wrap_angle(rel.yaw - d.yaw)) <= 1e-12);
    CHECK((rel.position - d.position).norm() < 1e-10);
    check_pose_eq(compose(b, rel), a, 1e-10);
  }
}

TEST_CASE("transform / untransform round trip") {
  std::mt19937_64 gen(23);
  for (int i = 0; i < 20; ++i) {
    PoseXYZYaw p = random_pose(gen);
    Eigen::Vector3d point(1.5, -2.0, 0.7);
    CHECK((p.untransform(p.transform(point)) - point).norm() < 1e-12);
  }
}

TEST_CASE("config defaults are valid and exposed") {
  Config cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.f_r1 == doctest::Approx(0.15));
  CHECK(cfg.f_r2 == doctest::Approx(0.10));
  CHECK(cfg.f_sz == doctest::Approx(1.2));
  CHECK(cfg.f_sr == doctest::Approx(5.0));
  CHECK(cfg.f_sc == doctest::Approx(6.0));
  CHECK(cfg.f_cs == 4);
  CHECK(cfg.f_gr == doctest::Approx(0.25));
  CHECK(cfg.f_lr == doctest::Approx(0.1));
  CHECK(cfg.f_lx == doctest::Approx(15.0));
  CHECK(cfg.f_ly == doctest::Approx(15.0));
  CHECK(cfg.f_lz == doctest::Approx(4.0));
  CHECK(cfg.f_B == doctest::Approx(3.0));
  CHECK(cfg.l_hit == doctest::Approx(std::log(0.7 / 0.3)));
  CHECK(cfg.k_min() == 3);
}

TEST_CASE("config parse applies values and rejects unknown keys") {
  Config cfg = Config::parse(R"({"f_sr": 7.5, "n_pos": 6, "ring_radii": [2.0]})");
  CHECK(cfg.f_sr == doctest::Approx(7.5));
  CHECK(cfg.n_pos == 6);
  CHECK(cfg.ring_radii.size() == 1);

  CHECK_THROWS_AS(Config::parse(R"({"f_srr": 7.5})"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse(R"({"bogus": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse("[1,2]"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse("{"), std::invalid_argument);
}

TEST_CASE("config invariants enforced") {
  CHECK_THROWS_AS(Config::parse(R"({"f_r1": 0.0})"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse(R"({"f_r1": 1.0})"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse(R"({"f_cs": 2})"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse(R"({"f_gr": -0.25})"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse(R"({"p_occ": 0.3, "p_free": 0.4})"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse(R"({"prior_noise": [0.1, 0.1, 0.1, 0.0]})"),
                  std::invalid_argument);
  // Zero odometry noise is allowed (noise-free missions), zero lengths are not.
  CHECK_NOTHROW(Config::parse(R"({"sigma_t": 0.0, "sigma_psi": 0.0, "sigma_det": 0.0})"));
  CHECK_THROWS_AS(Config::parse(R"({"f_sz": 0.0})"), std::invalid_argument);
}

TEST_CASE("rng substreams are deterministic and independent") {
  RngStream a(42), b(42);
  // Same seed, same call sequence -> same values.
  for (int i = 0; i < 10; ++i) {
    CHECK(a.stream("odometry").normal(0, 1) == b.stream("odometry").normal(0, 1));
    CHECK(a.stream("sampling").uniform(0, 1) == b.stream("sampling").uniform(0, 1));
  }

  // Draw extra values from an unrelated stream on one side only; shared
  // streams must stay in lockstep.
  RngStream c(7), d(7);
  (void)c.stream("detection").normal(0, 1);
  (void)c.stream("detection").normal(0, 1);
  for (int i = 0; i < 5; ++i)
    CHECK(c.stream("odometry").normal(0, 1) == d.stream("odometry").normal(0, 1));

  // Different seeds diverge.
  RngStream e(1), f(2);
  CHECK(e.stream("odometry").uniform(0, 1) != f.stream("odometry").uniform(0, 1));

  // Zero std is the mean exactly.
  CHECK(e.stream("odometry").normal(3.5, 0.0) == 3.5);
}
