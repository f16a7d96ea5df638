#include "actslam/cop.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace actslam {

void CopInstance::validate() const {
  const int n = size();
  if (cost.rows() != n + 1 || cost.cols() != n + 1) {
    throw std::invalid_argument("cost matrix must be (n+1) x (n+1)");
  }
  if (correlation.rows() != n || correlation.cols() != n) {
    throw std::invalid_argument("correlation matrix must be n x n");
  }
  if (!(budget > 0)) throw std::invalid_argument("budget must be positive");
  for (const CopVertex& v : vertices) {
    if (v.reward < 0) throw std::invalid_argument("rewards must be non-negative");
  }
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      if (cost(i, j) < 0) throw std::invalid_argument("costs must be non-negative");
      if (cost(i, j) != cost(j, i)) {
        throw std::invalid_argument("cost matrix must be symmetric");
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (correlation(i, i) != 0) {
      throw std::invalid_argument("correlation diagonal must be zero");
    }
    for (int j = 0; j < n; ++j) {
      if (correlation(i, j) < 0 || correlation(i, j) > 1) {
        throw std::invalid_argument("correlations must lie in [0,1]");
      }
      if (correlation(i, j) != correlation(j, i)) {
        throw std::invalid_argument("correlation matrix must be symmetric");
      }
    }
  }
}

double objective(const CopInstance& instance, std::span<const int> visited) {
  const int n = instance.size();
  std::vector<char> in(n, 0);
  for (int v : visited) in.at(v) = 1;
  double total = 0;
  for (int v = 0; v < n; ++v) {
    if (in[v]) {
      total += instance.vertices[v].reward;
    } else {
      double coverage = 0;
      for (int u = 0; u < n; ++u) {
        if (in[u]) coverage += instance.correlation(u, v);
      }
      total += instance.vertices[v].reward * std::min(1.0, coverage);
    }
  }
  return total;
}

double value(const CopInstance& instance, int v, std::span<const int> selected) {
  const int n = instance.size();
  std::vector<char> in(n, 0);
  for (int u : selected) in.at(u) = 1;
  if (in.at(v)) throw std::invalid_argument("value: vertex already selected");
  double out = instance.vertices[v].reward;
  for (int u = 0; u < n; ++u) {
    if (u == v) continue;
    if (in[u]) {
      out -= instance.vertices[u].reward * instance.correlation(u, v);
    } else {
      out += instance.vertices[u].reward * instance.correlation(v, u);
    }
  }
  return out;
}

Tour held_karp_path(const CopInstance& instance, std::span<const int> selected) {
  const int k = static_cast<int>(selected.size());
  if (k > kHeldKarpCap) {
    throw std::invalid_argument("held_karp_path: selection exceeds the DP cap");
  }
  Tour tour;
  if (k == 0) {
    tour.objective = objective(instance, selected);
    return tour;
  }
  for (int v : selected) {
    if (v < 0 || v >= instance.size()) {
      throw std::out_of_range("held_karp_path: vertex index out of range");
    }
  }

  // dp[mask][j]: cheapest open path from the start visiting exactly `mask`
  // (bits over `selected`) and ending at selected[j].
  const int full = (1 << k) - 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(full + 1, std::vector<double>(k, inf));
  std::vector<std::vector<int>> parent(full + 1, std::vector<int>(k, -1));
  auto c = [&](int a, int b) { return instance.cost(a, b); };
  for (int j = 0; j < k; ++j) {
    dp[1 << j][j] = c(0, selected[j] + 1);
  }
  for (int mask = 1; mask <= full; ++mask) {
    for (int j = 0; j < k; ++j) {
      if (!(mask & (1 << j)) || dp[mask][j] == inf) continue;
      for (int t = 0; t < k; ++t) {
        if (mask & (1 << t)) continue;
        const int next = mask | (1 << t);
        const double cand = dp[mask][j] + c(selected[j] + 1, selected[t] + 1);
        if (cand < dp[next][t]) {
          dp[next][t] = cand;
          parent[next][t] = j;
        }
      }
    }
  }

  int end = 0;
  for (int j = 1; j < k; ++j) {
    if (dp[full][j] < dp[full][end]) end = j;
  }
  tour.cost = dp[full][end];
  std::vector<int> order;
  int mask = full;
  int j = end;
  while (j >= 0) {
    order.push_back(selected[j]);
    const int prev = parent[mask][j];
    mask &= ~(1 << j);
    j = prev;
  }
  std::reverse(order.begin(), order.end());
  tour.vertices = std::move(order);
  tour.objective = objective(instance, selected);
  return tour;
}

Tour solve(const CopInstance& instance) {
  instance.validate();
  const int n = instance.size();
  std::vector<int> chosen;
  Tour best = held_karp_path(instance, chosen);
  std::vector<char> in(n, 0);
  while (static_cast<int>(chosen.size()) < std::min(n, kHeldKarpCap)) {
    int pick = -1;
    double pick_value = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v) {
      if (in[v]) continue;
      const double val = value(instance, v, chosen);
      if (val > pick_value) {
        pick = v;
        pick_value = val;
      }
    }
    if (pick < 0) break;
    chosen.push_back(pick);
    const Tour trial = held_karp_path(instance, chosen);
    if (trial.cost > instance.budget) {
      chosen.pop_back();
      break;
    }
    in[pick] = 1;
    best = trial;
  }
  return best;
}

double compute_budget(
    const PoseXYZYaw& start, std::span<const PoseXYZYaw> viewpoints,
    const std::function<double(const PoseXYZYaw&, const PoseXYZYaw&)>& astar_cost,
    double f_b) {
  if (viewpoints.empty()) {
    throw std::invalid_argument("compute_budget: no viewpoints");
  }
  std::vector<double> costs;
  for (const PoseXYZYaw& vp : viewpoints) {
    const double c = astar_cost(start, vp);
    if (std::isfinite(c)) costs.push_back(c);
  }
  if (costs.empty()) {
    throw std::runtime_error("compute_budget: every viewpoint is unreachable");
  }
  const size_t k = std::min<size_t>(3, costs.size());
  std::partial_sort(costs.begin(), costs.begin() + k, costs.end());
  double sum = 0;
  for (size_t i = 0; i < k; ++i) sum += costs[i];
  return f_b * sum / static_cast<double>(k);
}

nlohmann::json to_json(const CopInstance& instance) {
  nlohmann::json j;
  j["budget"] = instance.budget;
  j["start"] = {instance.start.position.x(), instance.start.position.y(),
                instance.start.position.z(), instance.start.yaw};
  j["vertices"] = nlohmann::json::array();
  for (const CopVertex& v : instance.vertices) {
    j["vertices"].push_back({{"id", v.id},
                             {"reward", v.reward},
                             {"pose",
                              {v.pose.position.x(), v.pose.position.y(),
                               v.pose.position.z(), v.pose.yaw}}});
  }
  auto matrix = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["cost"] = matrix(instance.cost);
  j["correlation"] = matrix(instance.correlation);
  return j;
}

nlohmann::json to_json(const Tour& tour) {
  return {{"vertices", tour.vertices},
          {"cost", tour.cost},
          {"objective", tour.objective}};
}

}  // namespace actslam
