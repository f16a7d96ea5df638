#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "actslam/refiner.hpp"
#include "actslam/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

using namespace actslam;

namespace {

PoseXYZYaw at(double x, double y, double z, double yaw = 0) {
  PoseXYZYaw p;
  p.position = {x, y, z};
  p.yaw = yaw;
  return p;
}

Viewpoint make_vp(double x, double y, double ig, int cluster_id = -1) {
  Viewpoint vp;
  vp.pose = at(x, y, 0);
  vp.ig = ig;
  vp.cluster_id = cluster_id;
  return vp;
}

double euclid(const PoseXYZYaw& a, const PoseXYZYaw& b) {
  return (a.position - b.position).norm();
}

double zero_corr(const Viewpoint&, const Viewpoint&) { return 0.0; }

/// Chain of `n` key poses stepping 1 m east with noiseless measurements, so
/// pose i sits exactly at x = i while per-edge uncertainty still accumulates.
SemanticGraph chain_graph(int n) {
  SemanticGraph g;
  g.add_first_pose(PoseXYZYaw{}, Eigen::Vector4d(0.01, 0.01, 0.01, 0.005), 0);
  PoseXYZYaw step = at(1, 0, 0);
  for (int i = 1; i < n; ++i) {
    g.add_key_pose(step, Eigen::Vector4d(0.05, 0.05, 0.05, 0.01), i);
  }
  return g;
}

SlcCandidate candidate_at(const SemanticGraph& g, PoseId id) {
  SlcCandidate c;
  c.viewpoint = id;
  c.viewpoint_pose = g.pose(id).estimate;
  return c;
}

}  // namespace

TEST_CASE("remaining_ig discounts by accumulated Explore overlap") {
  const Viewpoint vp = make_vp(0, 0, 10);

  CHECK(remaining_ig({}, vp, zero_corr) == 10.0);

  std::vector<PathElement> refined;
  refined.push_back({make_vp(1, 0, 5), 1.0, 5.0});
  auto corr03 = [](const Viewpoint&, const Viewpoint&) { return 0.3; };
  CHECK(remaining_ig(refined, vp, corr03) == doctest::Approx(7.0).epsilon(1e-12));

  // Overlaps summing past 1 clamp to zero.
  refined.push_back({make_vp(2, 0, 5), 1.0, 5.0});
  auto corr07 = [](const Viewpoint&, const Viewpoint&) { return 0.7; };
  CHECK(remaining_ig(refined, vp, corr07) == 0.0);

  // CloseLoop elements never discount exploration gain.
  std::vector<PathElement> closures;
  closures.push_back({SlcCandidate{}, 1.0, 0.5});
  auto corr09 = [](const Viewpoint&, const Viewpoint&) { return 0.9; };
  CHECK(remaining_ig(closures, vp, corr09) == 10.0);
}

TEST_CASE("refine without candidates reproduces the tour with fresh costs") {
  SemanticGraph g = chain_graph(2);
  const std::vector<Viewpoint> tour = {make_vp(12, 0, 50, 0), make_vp(14, 0, 40, 1),
                                       make_vp(13, 5, 30, 2)};
  const auto out =
      refine(at(10, 0, 0), tour, {}, g, 1e9, euclid, zero_corr, {});

  REQUIRE(out.size() == 3);
  for (size_t i = 0; i < out.size(); ++i) {
    CHECK(!out[i].is_close_loop());
    CHECK(out[i].explore().cluster_id == static_cast<int>(i));
    CHECK(out[i].ig == tour[i].ig);
  }
  CHECK(out[0].cost == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out[1].cost == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out[2].cost == doctest::Approx(std::sqrt(26.0)).epsilon(1e-12));
}

TEST_CASE("refine records overlap-discounted exploration gain") {
  SemanticGraph g = chain_graph(2);
  const std::vector<Viewpoint> tour = {make_vp(12, 0, 10, 0), make_vp(14, 0, 10, 1),
                                       make_vp(16, 0, 10, 2)};
  auto corr04 = [](const Viewpoint&, const Viewpoint&) { return 0.4; };
  const auto out = refine(at(10, 0, 0), tour, {}, g, 1e9, euclid, corr04, {});

  REQUIRE(out.size() == 3);
  CHECK(out[0].ig == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(out[1].ig == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(out[2].ig == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("refine terminates at the first viewpoint over budget") {
  SemanticGraph g = chain_graph(2);
  const std::vector<Viewpoint> tour = {make_vp(12, 0, 50, 0), make_vp(14, 0, 40, 1)};
  const auto out = refine(at(10, 0, 0), tour, {}, g, 3.0, euclid, zero_corr, {});

  REQUIRE(out.size() == 1);
  CHECK(out[0].explore().cluster_id == 0);
  CHECK(out[0].cost == doctest::Approx(2.0));
}

TEST_CASE("a candidate whose scaled gain trails the viewpoint utility is skipped") {
  SemanticGraph g = chain_graph(11);
  const double ig0 = g.predict_slc_ig(10, 0, 10.0);
  // Utility of the first viewpoint: 1000 cells / 2 m = 500 cells per meter.
  REQUIRE(6.0 * ig0 < 500.0);

  const std::vector<Viewpoint> tour = {make_vp(12, 0, 1000, 0),
                                       make_vp(14, 0, 1000, 1)};
  const std::vector<SlcCandidate> candidates = {candidate_at(g, 0)};
  const auto out =
      refine(at(10, 0, 0), tour, candidates, g, 100.0, euclid, zero_corr, {});

  REQUIRE(out.size() == 2);
  CHECK(!out[0].is_close_loop());
  CHECK(!out[1].is_close_loop());
}

TEST_CASE("a high-gain candidate is inserted exactly once, before the viewpoint") {
  SemanticGraph g = chain_graph(11);
  const double ig0 = g.predict_slc_ig(10, 0, 10.0);
  // Tiny exploration utility (0.01 cells / 2 m) so the closure wins the test.
  REQUIRE(6.0 * ig0 > 0.005);
  const std::vector<PoseXYZYaw> estimates_before = g.pose_states();
  const size_t factors_before = g.factors().size();

  const std::vector<Viewpoint> tour = {make_vp(12, 0, 0.01, 0),
                                       make_vp(14, 0, 0.01, 1)};
  const std::vector<SlcCandidate> candidates = {candidate_at(g, 0)};
  const auto out =
      refine(at(10, 0, 0), tour, candidates, g, 100.0, euclid, zero_corr, {});

  // Hand trace: closure (10 m to pose 0), viewpoint 0 recosted from pose 0
  // (12 m), viewpoint 1 (2 m); the single candidate cannot repeat.
  REQUIRE(out.size() == 3);
  CHECK(out[0].is_close_loop());
  CHECK(out[0].close_loop().viewpoint == 0);
  CHECK(out[0].cost == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(out[0].ig == doctest::Approx(ig0).epsilon(1e-9));
  CHECK(!out[1].is_close_loop());
  CHECK(out[1].explore().cluster_id == 0);
  CHECK(out[1].cost == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(!out[2].is_close_loop());
  CHECK(out[2].cost == doctest::Approx(2.0).epsilon(1e-12));

  // The graph came back untouched.
  CHECK(g.factors().size() == factors_before);
  const std::vector<PoseXYZYaw> estimates_after = g.pose_states();
  for (size_t i = 0; i < estimates_before.size(); ++i) {
    CHECK(estimates_after[i].position == estimates_before[i].position);
    CHECK(estimates_after[i].yaw == estimates_before[i].yaw);
  }
}

TEST_CASE("closure gains stack sequentially and alternate with viewpoints") {
  SemanticGraph g = chain_graph(11);
  const std::vector<Viewpoint> tour = {make_vp(12, 0, 0.01, 0),
                                       make_vp(14, 0, 0.01, 1)};
  const std::vector<SlcCandidate> candidates = {candidate_at(g, 0),
                                                candidate_at(g, 5)};
  const auto out =
      refine(at(10, 0, 0), tour, candidates, g, 100.0, euclid, zero_corr, {});

  int closures = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i].is_close_loop()) {
      ++closures;
      if (i + 1 < out.size()) CHECK(!out[i + 1].is_close_loop());
    }
  }
  CHECK(closures == 2);
  CHECK(out.size() == 4);

  // Each recorded gain must equal an independent prediction made with every
  // earlier closure's virtual factor in place.
  SlcIgSession replay(g);
  for (const PathElement& element : out) {
    if (!element.is_close_loop()) continue;
    const PoseId lc = element.close_loop().viewpoint;
    const double expected = replay.preview(g.latest_pose_id(), lc, element.cost);
    CHECK(element.ig == doctest::Approx(expected).epsilon(1e-9));
    replay.commit(g.latest_pose_id(), lc, element.cost);
  }
}

TEST_CASE("refine invariants hold across random instances") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    RngStream rng(seed);
    auto& u = rng.stream("refine");

    const int n_poses = 4 + static_cast<int>(u.integer(6));  // 4..9
    SemanticGraph g;
    g.add_first_pose(PoseXYZYaw{}, Eigen::Vector4d(0.01, 0.01, 0.01, 0.005), 0);
    for (int i = 1; i < n_poses; ++i) {
      PoseXYZYaw step = at(u.uniform(0.5, 1.5), u.uniform(-0.3, 0.3), 0,
                           u.uniform(-0.4, 0.4));
      g.add_key_pose(step, Eigen::Vector4d(0.05, 0.05, 0.05, 0.01), i);
    }

    std::vector<Viewpoint> tour;
    const int n_vps = 1 + static_cast<int>(u.integer(4));  // 1..4
    for (int i = 0; i < n_vps; ++i) {
      tour.push_back(make_vp(u.uniform(-5, 15), u.uniform(-5, 15),
                             u.uniform(0, 20), i));
    }
    std::vector<SlcCandidate> candidates;
    const int n_cand = static_cast<int>(u.integer(3));  // 0..2
    for (int i = 0; i < n_cand; ++i) {
      candidates.push_back(
          candidate_at(g, static_cast<PoseId>(u.integer(n_poses - 1))));
    }
    const double budget = u.uniform(5, 60);
    auto corr = [](const Viewpoint& a, const Viewpoint& b) {
      const double d2 = (a.pose.position - b.pose.position).squaredNorm();
      return 0.5 * std::exp(-d2 / 50.0);
    };

    const size_t factors_before = g.factors().size();
    const auto out = refine(at(0, 0, 0), tour, candidates, g, budget, euclid,
                            corr, {});
    CAPTURE(seed);
    CHECK(g.factors().size() == factors_before);

    double total = 0;
    PoseXYZYaw endpoint = at(0, 0, 0);
    int explore_rank = 0;
    int prev_was_closure = 0;
    std::vector<int> used_ids;
    for (const PathElement& element : out) {
      total += element.cost;
      CHECK(element.ig >= 0.0);
      CHECK(element.cost ==
            doctest::Approx(euclid(endpoint, element.goal())).epsilon(1e-12));
      endpoint = element.goal();
      if (element.is_close_loop()) {
        CHECK(!prev_was_closure);
        prev_was_closure = 1;
        used_ids.push_back(element.close_loop().viewpoint);
      } else {
        // Explore elements are a prefix of the tour, in order.
        CHECK(element.explore().cluster_id == explore_rank);
        ++explore_rank;
        prev_was_closure = 0;
      }
    }
    CHECK(total <= budget + 1e-12);
    // A candidate pose id can appear at most once per plan.
    std::sort(used_ids.begin(), used_ids.end());
    CHECK(std::adjacent_find(used_ids.begin(), used_ids.end()) == used_ids.end());
  }
}

TEST_CASE("should_replan triggers on frontier churn or executed fraction") {
  ReplanState state;
  state.frontier_snapshot = {1, 2, 3, 4, 5};
  state.executed_fraction = 0;

  CHECK(!should_replan(state, {1, 2, 3, 4, 5}, 0.15, 0.10));

  state.executed_fraction = 0.10;  // boundary inclusive
  CHECK(should_replan(state, {1, 2, 3, 4, 5}, 0.15, 0.10));
  state.executed_fraction = 0.0999;
  CHECK(!should_replan(state, {1, 2, 3, 4, 5}, 0.15, 0.10));

  // 20 snapshot cells, 3 changed: 0.15 >= f_r1 = 0.15.
  ReplanState churn;
  churn.frontier_snapshot.resize(20);
  std::iota(churn.frontier_snapshot.begin(), churn.frontier_snapshot.end(), 0);
  std::vector<int> current(churn.frontier_snapshot.begin(),
                           churn.frontier_snapshot.end() - 3);
  CHECK(should_replan(churn, current, 0.15, 0.10));
  // 2 of 20 changed: 0.10 < 0.15.
  current.push_back(18);
  std::sort(current.begin(), current.end());
  CHECK(!should_replan(churn, current, 0.15, 0.10));

  // Frontiers appearing after an empty snapshot always replan.
  ReplanState empty;
  CHECK(should_replan(empty, {7}, 0.15, 0.10));
  CHECK(!should_replan(empty, {}, 0.15, 0.10));
}

TEST_CASE("drift_compensate re-expresses goals in the odometry frame") {
  const PoseXYZYaw goal = at(3, 4, 1, 0.7);

  // No drift: the goal is unchanged.
  const PoseXYZYaw pose = at(1, -2, 0.5, 0.3);
  const PoseXYZYaw same = drift_compensate(goal, pose, pose);
  CHECK((same.position - goal.position).norm() < 1e-12);
  CHECK(std::abs(wrap_angle(same.yaw - goal.yaw)) < 1e-12);

  // Pure vertical drift shifts the goal by the same offset.
  const PoseXYZYaw slam = at(1, 1, 0, 0.3);
  const PoseXYZYaw vio = at(1, 1, 0.5, 0.3);
  const PoseXYZYaw lifted = drift_compensate(goal, vio, slam);
  CHECK((lifted.position - (goal.position + Eigen::Vector3d(0, 0, 0.5))).norm() <
        1e-12);

  // A goal at the robot maps onto the odometry estimate of the robot.
  const PoseXYZYaw self = drift_compensate(slam, vio, slam);
  CHECK((self.position - vio.position).norm() < 1e-12);
  CHECK(std::abs(wrap_angle(self.yaw - vio.yaw)) < 1e-12);

  // The goal seen from the robot is identical in both frames.
  RngStream rng(7);
  auto& u = rng.stream("drift");
  for (int trial = 0; trial < 25; ++trial) {
    auto rand_pose = [&] {
      return at(u.uniform(-5, 5), u.uniform(-5, 5), u.uniform(-2, 2),
                u.uniform(-3, 3));
    };
    const PoseXYZYaw goal_slam = rand_pose();
    const PoseXYZYaw slam_pose = rand_pose();
    const PoseXYZYaw vio_pose = rand_pose();
    const PoseXYZYaw goal_vio = drift_compensate(goal_slam, vio_pose, slam_pose);
    const PoseXYZYaw in_slam = relative(goal_slam, slam_pose);
    const PoseXYZYaw in_vio = relative(goal_vio, vio_pose);
    CHECK((in_slam.position - in_vio.position).norm() < 1e-9);
    CHECK(std::abs(wrap_angle(in_slam.yaw - in_vio.yaw)) < 1e-9);
  }
}
