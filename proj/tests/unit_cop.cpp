#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "actslam/cop.hpp"
#include "actslam/rng.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <vector>

using namespace actslam;

namespace {

PoseXYZYaw at(double x, double y, double z) {
  PoseXYZYaw p;
  p.position = {x, y, z};
  return p;
}

/// Instance with Euclidean costs between all vertex poses and the start.
CopInstance euclidean_instance(const PoseXYZYaw& start,
                               const std::vector<CopVertex>& vertices,
                               const Eigen::MatrixXd& correlation, double budget) {
  CopInstance inst;
  inst.start = start;
  inst.vertices = vertices;
  inst.correlation = correlation;
  inst.budget = budget;
  const int n = inst.size();
  inst.cost.resize(n + 1, n + 1);
  auto pos = [&](int i) {
    return i == 0 ? start.position : vertices[i - 1].pose.position;
  };
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) inst.cost(i, j) = (pos(i) - pos(j)).norm();
  }
  return inst;
}

/// The worked three-vertex instance: rewards 10, 8, 6 on a line at x = 1,2,3,
/// correlations w01 = 0.5, w02 = 0.25, w12 = 0.
CopInstance worked_instance(double budget) {
  std::vector<CopVertex> v = {{1, 10.0, at(1, 0, 0)},
                              {2, 8.0, at(2, 0, 0)},
                              {3, 6.0, at(3, 0, 0)}};
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 1) = w(1, 0) = 0.5;
  w(0, 2) = w(2, 0) = 0.25;
  return euclidean_instance(at(0, 0, 0), v, w, budget);
}

CopInstance random_instance(std::uint64_t seed, int n, double budget_scale) {
  RngStream rng(seed);
  auto& u = rng.stream("cop");
  std::vector<CopVertex> v;
  for (int i = 0; i < n; ++i) {
    v.push_back({i, u.uniform(0, 10), at(u.uniform(-6, 6), u.uniform(-6, 6), 0)});
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      w(i, j) = w(j, i) = u.uniform(0, 1) < 0.5 ? 0.0 : u.uniform(0, 0.6);
    }
  }
  return euclidean_instance(at(0, 0, 0), v, w, u.uniform(4, 20) * budget_scale);
}

}  // namespace

TEST_CASE("objective: visited rewards plus capped correlated coverage") {
  const CopInstance inst = worked_instance(100.0);
  const std::vector<int> all = {0, 1, 2};
  CHECK(objective(inst, all) == doctest::Approx(24.0).epsilon(1e-12));
  const std::vector<int> first = {0};
  CHECK(objective(inst, first) == doctest::Approx(15.5).epsilon(1e-12));
  const std::vector<int> two = {0, 1};
  CHECK(objective(inst, two) == doctest::Approx(19.5).epsilon(1e-12));
  CHECK(objective(inst, {}) == 0.0);
}

TEST_CASE("objective caps coverage at the full reward") {
  std::vector<CopVertex> v = {{0, 5, at(1, 0, 0)}, {1, 5, at(2, 0, 0)},
                              {2, 7, at(3, 0, 0)}};
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 2) = w(2, 0) = 0.8;
  w(1, 2) = w(2, 1) = 0.9;
  const CopInstance inst = euclidean_instance(at(0, 0, 0), v, w, 100.0);
  // Coverage of vertex 2 sums to 1.7 but is capped at 1.
  const std::vector<int> visited = {0, 1};
  CHECK(objective(inst, visited) == doctest::Approx(5 + 5 + 7).epsilon(1e-12));
}

TEST_CASE("objective is monotone in the visited set") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const CopInstance inst = random_instance(seed, 6, 1.0);
    std::vector<int> visited;
    double prev = objective(inst, visited);
    for (int v = 0; v < inst.size(); ++v) {
      visited.push_back(v);
      const double now = objective(inst, visited);
      CHECK(now >= prev - 1e-12);
      prev = now;
    }
  }
}

TEST_CASE("value implements the greedy criterion") {
  const CopInstance inst = worked_instance(100.0);
  CHECK(value(inst, 0, {}) == doctest::Approx(15.5).epsilon(1e-12));
  const std::vector<int> s = {0};
  CHECK(value(inst, 1, s) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(value(inst, 2, s) == doctest::Approx(6 + 0 - 10 * 0.25).epsilon(1e-12));
  CHECK_THROWS_AS(value(inst, 0, s), std::invalid_argument);

  // Without correlations the value is the plain reward.
  std::vector<CopVertex> v = {{0, 4, at(1, 0, 0)}, {1, 9, at(2, 0, 0)}};
  const CopInstance plain =
      euclidean_instance(at(0, 0, 0), v, Eigen::MatrixXd::Zero(2, 2), 10.0);
  CHECK(value(plain, 1, {}) == doctest::Approx(9.0));
}

TEST_CASE("held_karp_path: base cases and exactness against permutations") {
  const CopInstance inst = worked_instance(100.0);

  const std::vector<int> one = {1};
  const Tour single = held_karp_path(inst, one);
  CHECK(single.vertices == std::vector<int>{1});
  CHECK(single.cost == doctest::Approx(2.0).epsilon(1e-12));

  const std::vector<int> all = {0, 1, 2};
  const Tour line = held_karp_path(inst, all);
  CHECK(line.vertices == std::vector<int>{0, 1, 2});
  CHECK(line.cost == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(line.objective == doctest::Approx(24.0).epsilon(1e-12));

  const Tour empty = held_karp_path(inst, {});
  CHECK(empty.vertices.empty());
  CHECK(empty.cost == 0.0);

  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    RngStream rng(seed);
    auto& u = rng.stream("hk");
    const int n = 4 + static_cast<int>(u.integer(5));  // 4..8
    const CopInstance random = random_instance(seed * 31 + 1, n, 1.0);
    std::vector<int> selected(n);
    for (int i = 0; i < n; ++i) selected[i] = i;
    const Tour tour = held_karp_path(random, selected);
    const double oracle = oracles::open_path_cost_bruteforce(random, selected);
    CAPTURE(seed);
    CHECK(tour.cost == doctest::Approx(oracle).epsilon(1e-12));
    // The returned order realizes the claimed cost.
    double replay = random.cost(0, tour.vertices.front() + 1);
    for (size_t i = 0; i + 1 < tour.vertices.size(); ++i) {
      replay += random.cost(tour.vertices[i] + 1, tour.vertices[i + 1] + 1);
    }
    CHECK(replay == doctest::Approx(tour.cost).epsilon(1e-12));
    CHECK(tour.vertices.size() == selected.size());
  }
}

TEST_CASE("held_karp_path rejects selections beyond the DP cap") {
  std::vector<CopVertex> v;
  for (int i = 0; i < 13; ++i) v.push_back({i, 1.0, at(i + 1, 0, 0)});
  const CopInstance inst =
      euclidean_instance(at(0, 0, 0), v, Eigen::MatrixXd::Zero(13, 13), 1000.0);
  std::vector<int> selected(13);
  for (int i = 0; i < 13; ++i) selected[i] = i;
  CHECK_THROWS_AS(held_karp_path(inst, selected), std::invalid_argument);
}

TEST_CASE("solve: greedy growth, budget stop, and hand-traced results") {
  // Generous budget: all three vertices fit; shortest open path is the line.
  const Tour full = solve(worked_instance(10.0));
  CHECK(full.vertices == std::vector<int>{0, 1, 2});
  CHECK(full.cost == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(full.objective == doctest::Approx(24.0).epsilon(1e-12));

  // Budget 1: the highest-value vertex (index 0, value 15.5) fits at cost 1;
  // any second vertex pushes the path over budget.
  const Tour tight = solve(worked_instance(1.0));
  CHECK(tight.vertices == std::vector<int>{0});
  CHECK(tight.cost == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tight.objective == doctest::Approx(15.5).epsilon(1e-12));

  // Budget below the cheapest start->vertex cost: empty tour, zero reward.
  const Tour none = solve(worked_instance(0.5));
  CHECK(none.vertices.empty());
  CHECK(none.cost == 0.0);
  CHECK(none.objective == 0.0);
}

TEST_CASE("solve is deterministic and never exceeds the budget") {
  double ratio_sum = 0;
  double ratio_min = std::numeric_limits<double>::infinity();
  int with_optimum = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    RngStream rng(seed);
    auto& u = rng.stream("size");
    const int n = 3 + static_cast<int>(u.integer(4));  // 3..6
    const CopInstance inst = random_instance(seed * 17 + 5, n, 1.0);

    const Tour tour = solve(inst);
    const Tour again = solve(inst);
    CHECK(tour.vertices == again.vertices);
    CHECK(tour.cost == again.cost);
    CHECK(tour.cost <= inst.budget + 1e-12);
    CHECK(tour.objective ==
          doctest::Approx(objective(inst, tour.vertices)).epsilon(1e-12));

    const double best = oracles::cop_best_objective_bruteforce(inst);
    CHECK(tour.objective <= best + 1e-9);
    if (best > 0) {
      const double ratio = tour.objective / best;
      ratio_sum += ratio;
      ratio_min = std::min(ratio_min, ratio);
      ++with_optimum;
    }
  }
  REQUIRE(with_optimum > 0);
  MESSAGE("greedy/optimal objective ratio: mean ",
          ratio_sum / with_optimum, ", min ", ratio_min, " over ", with_optimum,
          " instances");
}

TEST_CASE("compute_budget scales the mean cost of the nearest viewpoints") {
  auto euclid = [](const PoseXYZYaw& a, const PoseXYZYaw& b) {
    return (a.position - b.position).norm();
  };
  const PoseXYZYaw start = at(0, 0, 0);

  const std::vector<PoseXYZYaw> one = {at(10, 0, 0)};
  CHECK(compute_budget(start, one, euclid, 3.0) == doctest::Approx(30.0));

  const std::vector<PoseXYZYaw> three = {at(2, 0, 0), at(4, 0, 0), at(6, 0, 0)};
  CHECK(compute_budget(start, three, euclid, 3.0) == doctest::Approx(12.0));

  // Five viewpoints: only the three nearest enter the mean.
  const std::vector<PoseXYZYaw> five = {at(5, 0, 0), at(2, 0, 0), at(9, 0, 0),
                                        at(4, 0, 0), at(6, 0, 0)};
  CHECK(compute_budget(start, five, euclid, 3.0) ==
        doctest::Approx(3.0 * (2 + 4 + 5) / 3.0));

  auto unreachable = [](const PoseXYZYaw&, const PoseXYZYaw&) {
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(compute_budget(start, three, unreachable, 3.0),
                  std::runtime_error);
  CHECK_THROWS_AS(compute_budget(start, {}, euclid, 3.0), std::invalid_argument);

  // Unreachable viewpoints are skipped, not averaged.
  auto partial = [&](const PoseXYZYaw& a, const PoseXYZYaw& b) {
    return b.position.x() > 5 ? std::numeric_limits<double>::infinity()
                              : euclid(a, b);
  };
  CHECK(compute_budget(start, five, partial, 3.0) ==
        doctest::Approx(3.0 * (2 + 4 + 5) / 3.0));
}

TEST_CASE("instance validation rejects malformed matrices") {
  CopInstance inst = worked_instance(10.0);
  inst.validate();

  CopInstance bad = inst;
  bad.cost(0, 1) += 0.5;  // asymmetric
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = inst;
  bad.correlation(0, 1) = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = inst;
  bad.correlation(1, 1) = 0.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = inst;
  bad.budget = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = inst;
  bad.vertices[0].reward = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("instances and tours serialize to JSON") {
  const CopInstance inst = worked_instance(10.0);
  const nlohmann::json ji = to_json(inst);
  CHECK(ji.at("vertices").size() == 3);
  CHECK(ji.at("cost").size() == 4);
  CHECK(ji.at("correlation")[0][1] == doctest::Approx(0.5));
  CHECK(ji.at("budget") == doctest::Approx(10.0));

  const nlohmann::json jt = to_json(solve(inst));
  CHECK(jt.at("vertices") == nlohmann::json({0, 1, 2}));
  CHECK(jt.at("objective") == doctest::Approx(24.0));
}
