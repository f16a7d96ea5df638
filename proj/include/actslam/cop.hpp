#pragma once

#include "actslam/pose.hpp"

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <span>
#include <vector>

namespace actslam {

struct CopVertex {
  int id = -1;        // caller's label (e.g. frontier cluster id)
  double reward = 0;  // r_v >= 0
  PoseXYZYaw pose;
};

/// Correlated-orienteering instance over a complete graph: path costs in
/// meters between every pair and from the start, pairwise reward
/// correlations in [0,1], and a travel budget.
struct CopInstance {
  std::vector<CopVertex> vertices;
  PoseXYZYaw start;
  Eigen::MatrixXd cost;         // (n+1)^2; row/col 0 is the start pose
  Eigen::MatrixXd correlation;  // n^2; symmetric, zero diagonal
  double budget = 0;            // meters

  int size() const { return static_cast<int>(vertices.size()); }
  /// Structural invariants (symmetry, ranges, dimensions); throws
  /// std::invalid_argument on violation.
  void validate() const;
};

/// Open path from the start pose; vertices are indices into
/// CopInstance::vertices.
struct Tour {
  std::vector<int> vertices;
  double cost = 0;       // meters
  double objective = 0;  // reward units
};

/// Collected reward of a visited set: full reward for visited vertices plus
/// correlation-capped partial reward for the rest.
double objective(const CopInstance& instance, std::span<const int> visited);

/// Greedy selection criterion for v given already-selected S: own reward
/// plus correlated reward still open, minus correlated reward S already
/// covers.
double value(const CopInstance& instance, int v, std::span<const int> selected);

/// Hard cap on the exact-path subset DP (2^n * n^2 work).
inline constexpr int kHeldKarpCap = 12;

/// Exact minimum-cost open path from the start visiting all of `selected`,
/// by Bellman-Held-Karp dynamic programming. Throws std::invalid_argument
/// beyond kHeldKarpCap vertices.
Tour held_karp_path(const CopInstance& instance, std::span<const int> selected);

/// Greedy constructive solver: repeatedly add the argmax-value vertex (ties:
/// lowest index) and re-run the exact path; stop when the path first exceeds
/// the budget (dropping that vertex) or the DP cap would be exceeded.
Tour solve(const CopInstance& instance);

/// Exploration budget: f_b times the mean path cost to the K nearest
/// reachable viewpoints (K = min(3, reachable count)). astar_cost returns
/// +infinity for unreachable goals; throws std::runtime_error when every
/// viewpoint is unreachable.
double compute_budget(
    const PoseXYZYaw& start, std::span<const PoseXYZYaw> viewpoints,
    const std::function<double(const PoseXYZYaw&, const PoseXYZYaw&)>& astar_cost,
    double f_b);

nlohmann::json to_json(const CopInstance& instance);
nlohmann::json to_json(const Tour& tour);

}  // namespace actslam
