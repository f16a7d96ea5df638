#include "oracles.hpp"

#include "actslam/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace actslam::oracles {
namespace {

int popcount(unsigned v) {
  int c = 0;
  for (; v; v >>= 1) c += static_cast<int>(v & 1u);
  return c;
}

struct PlainFit {
  double psi = 0;
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double residual = std::numeric_limits<double>::infinity();
  bool ok = false;
};

/// Re-derivation of the closed-form fit from scratch: scalar accumulators for
/// the two trigonometric coefficients instead of the cross-covariance matrix.
PlainFit plain_fit(const std::vector<Eigen::Vector3d>& a,
                   const std::vector<Eigen::Vector3d>& b) {
  const double k = static_cast<double>(a.size());
  Eigen::Vector3d ma = Eigen::Vector3d::Zero();
  Eigen::Vector3d mb = Eigen::Vector3d::Zero();
  for (const auto& p : a) ma += p;
  for (const auto& p : b) mb += p;
  ma /= k;
  mb /= k;
  double cos_coef = 0;
  double sin_coef = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const Eigen::Vector3d da = a[i] - ma;
    const Eigen::Vector3d db = b[i] - mb;
    cos_coef += db.x() * da.x() + db.y() * da.y();
    sin_coef += db.x() * da.y() - db.y() * da.x();
  }
  PlainFit fit;
  if (cos_coef == 0.0 && sin_coef == 0.0) return fit;  // yaw unobservable
  fit.psi = std::atan2(sin_coef, cos_coef);
  const Eigen::Matrix3d r = yaw_rotation(fit.psi);
  fit.t = ma - r * mb;
  double sum = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - r * b[i] - fit.t).squaredNorm();
  }
  fit.residual = sum / k;
  fit.ok = true;
  return fit;
}

}  // namespace

std::optional<AlignmentResult> align_bruteforce(
    std::span<const LandmarkRef> map_set, std::span<const LabeledPoint> local_set,
    int k_min, double tau) {
  const int n = static_cast<int>(map_set.size());
  const int m = static_cast<int>(local_set.size());
  for (int k = std::min(n, m); k >= k_min; --k) {
    double best_residual = std::numeric_limits<double>::infinity();
    PlainFit best_fit;
    std::vector<std::pair<int, int>> best_pairs;

    for (unsigned ms = 0; ms < (1u << n); ++ms) {
      if (popcount(ms) != k) continue;
      std::vector<int> map_members;
      for (int i = 0; i < n; ++i) {
        if (ms & (1u << i)) map_members.push_back(i);
      }
      for (unsigned ts = 0; ts < (1u << m); ++ts) {
        if (popcount(ts) != k) continue;
        std::vector<int> locals;
        for (int i = 0; i < m; ++i) {
          if (ts & (1u << i)) locals.push_back(i);
        }
        std::sort(locals.begin(), locals.end());
        do {
          bool classes_ok = true;
          for (int i = 0; i < k; ++i) {
            if (map_set[map_members[i]].label != local_set[locals[i]].label) {
              classes_ok = false;
              break;
            }
          }
          if (!classes_ok) continue;
          std::vector<Eigen::Vector3d> a, b;
          for (int i = 0; i < k; ++i) {
            a.push_back(map_set[map_members[i]].position);
            b.push_back(local_set[locals[i]].position);
          }
          const PlainFit fit = plain_fit(a, b);
          if (fit.ok && fit.residual < best_residual) {
            best_residual = fit.residual;
            best_fit = fit;
            best_pairs.clear();
            for (int i = 0; i < k; ++i) {
              best_pairs.emplace_back(map_set[map_members[i]].id, locals[i]);
            }
          }
        } while (std::next_permutation(locals.begin(), locals.end()));
      }
    }

    if (best_residual <= tau) {
      AlignmentResult result;
      result.t = best_fit.t;
      result.psi = best_fit.psi;
      result.residual = best_fit.residual;
      result.k = k;
      std::sort(best_pairs.begin(), best_pairs.end(),
                [](const auto& x, const auto& y) { return x.second < y.second; });
      result.correspondences = std::move(best_pairs);
      return result;
    }
  }
  return std::nullopt;
}

double fit_residual_gridsearch(std::span<const Eigen::Vector3d> seq_a,
                               std::span<const Eigen::Vector3d> seq_b,
                               double psi_step) {
  const double k = static_cast<double>(seq_a.size());
  Eigen::Vector3d ma = Eigen::Vector3d::Zero();
  Eigen::Vector3d mb = Eigen::Vector3d::Zero();
  for (const auto& p : seq_a) ma += p;
  for (const auto& p : seq_b) mb += p;
  ma /= k;
  mb /= k;
  double best = std::numeric_limits<double>::infinity();
  for (double psi = -M_PI; psi < M_PI; psi += psi_step) {
    const Eigen::Matrix3d r = yaw_rotation(psi);
    const Eigen::Vector3d t = ma - r * mb;
    double sum = 0;
    for (size_t i = 0; i < seq_a.size(); ++i) {
      sum += (seq_a[i] - r * seq_b[i] - t).squaredNorm();
    }
    best = std::min(best, sum / k);
  }
  return best;
}

double open_path_cost_bruteforce(const CopInstance& instance,
                                 std::span<const int> selected) {
  std::vector<int> order(selected.begin(), selected.end());
  std::sort(order.begin(), order.end());
  if (order.empty()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = instance.cost(0, order.front() + 1);
    for (size_t i = 0; i + 1 < order.size(); ++i) {
      cost += instance.cost(order[i] + 1, order[i + 1] + 1);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

double cop_best_objective_bruteforce(const CopInstance& instance) {
  const int n = instance.size();
  double best = 0.0;  // empty selection
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> subset;
    for (int v = 0; v < n; ++v) {
      if (mask & (1u << v)) subset.push_back(v);
    }
    if (open_path_cost_bruteforce(instance, subset) > instance.budget) continue;
    double reward = 0;
    for (int v = 0; v < n; ++v) {
      if (mask & (1u << v)) {
        reward += instance.vertices[v].reward;
      } else {
        double cover = 0;
        for (int u : subset) cover += instance.correlation(u, v);
        reward += instance.vertices[v].reward * std::min(1.0, cover);
      }
    }
    best = std::max(best, reward);
  }
  return best;
}

std::vector<int> dbscan_naive(std::span<const Eigen::Vector3d> points, double eps,
                              int min_pts) {
  const int n = static_cast<int>(points.size());
  auto region_query = [&](int p) {
    std::vector<int> out;
    for (int q = 0; q < n; ++q) {
      if ((points[p] - points[q]).norm() <= eps) out.push_back(q);
    }
    return out;
  };

  std::vector<int> label(n, -2);  // -2 unvisited, -1 noise
  int cluster = 0;
  for (int p = 0; p < n; ++p) {
    if (label[p] != -2) continue;
    std::vector<int> seeds = region_query(p);
    if (static_cast<int>(seeds.size()) < min_pts) {
      label[p] = -1;
      continue;
    }
    label[p] = cluster;
    for (size_t i = 0; i < seeds.size(); ++i) {
      const int q = seeds[i];
      if (label[q] == -1) label[q] = cluster;
      if (label[q] != -2) continue;
      label[q] = cluster;
      std::vector<int> more = region_query(q);
      if (static_cast<int>(more.size()) >= min_pts) {
        seeds.insert(seeds.end(), more.begin(), more.end());
      }
    }
    ++cluster;
  }
  return label;
}

std::optional<double> grid_dijkstra_cost(const VoxelGrid& grid,
                                         const Eigen::Vector3d& start,
                                         const Eigen::Vector3d& goal) {
  if (!grid.contains(start) || !grid.contains(goal)) return std::nullopt;
  const int source = grid.linear(grid.cell_of(start));
  const int target = grid.linear(grid.cell_of(goal));
  if (grid.state_linear(source) != CellState::kFree ||
      grid.state_linear(target) != CellState::kFree) {
    return std::nullopt;
  }
  if (source == target) return 0.0;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(grid.cell_count(), inf);
  std::vector<char> done(grid.cell_count(), 0);
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>>
      queue;
  dist[source] = 0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, id] = queue.top();
    queue.pop();
    if (done[id]) continue;
    done[id] = 1;
    if (id == target) return d;
    const Eigen::Vector3i cell = grid.cell_of_linear(id);
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const Eigen::Vector3i next = cell + Eigen::Vector3i(dx, dy, dz);
          if (!grid.valid_cell(next)) continue;
          const int nid = grid.linear(next);
          if (done[nid] || grid.state_linear(nid) != CellState::kFree) continue;
          // Diagonal moves must not slip between blocked cells: every cell
          // sharing an axis with the move has to be free as well.
          const auto passable = [&](int px, int py, int pz) {
            const Eigen::Vector3i c = cell + Eigen::Vector3i(px, py, pz);
            return grid.valid_cell(c) && grid.state(c) == CellState::kFree;
          };
          bool squeeze = false;
          if (dx != 0 && dy != 0 && !passable(dx, dy, 0)) squeeze = true;
          if (dx != 0 && dz != 0 && !passable(dx, 0, dz)) squeeze = true;
          if (dy != 0 && dz != 0 && !passable(0, dy, dz)) squeeze = true;
          if (dx != 0 && (dy != 0 || dz != 0) && !passable(dx, 0, 0)) squeeze = true;
          if (dy != 0 && (dx != 0 || dz != 0) && !passable(0, dy, 0)) squeeze = true;
          if (dz != 0 && (dx != 0 || dy != 0) && !passable(0, 0, dz)) squeeze = true;
          if (squeeze) continue;
          const double step =
              grid.resolution() * std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
          if (d + step < dist[nid]) {
            dist[nid] = d + step;
            queue.emplace(d + step, nid);
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace actslam::oracles
