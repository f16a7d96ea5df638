#include "actslam/slc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace actslam {

std::vector<LandmarkRef> landmark_refs(const SemanticGraph& graph) {
  std::vector<LandmarkRef> refs;
  refs.reserve(graph.landmark_count());
  for (int id = 0; id < graph.landmark_count(); ++id) {
    const LandmarkNode& node = graph.landmark(id);
    refs.push_back({id, node.position, node.label});
  }
  return refs;
}

std::vector<Submap> cluster_submaps(std::span<const LandmarkRef> landmarks,
                                    double eps_db, int min_pts, int f_cs) {
  const int n = static_cast<int>(landmarks.size());
  auto neighbors = [&](int p) {
    std::vector<int> out;
    for (int q = 0; q < n; ++q) {
      if ((landmarks[p].position - landmarks[q].position).norm() <= eps_db) {
        out.push_back(q);
      }
    }
    return out;
  };

  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> cluster_of(n, kUnvisited);
  int num_clusters = 0;
  for (int p = 0; p < n; ++p) {
    if (cluster_of[p] != kUnvisited) continue;
    std::vector<int> seed = neighbors(p);
    if (static_cast<int>(seed.size()) < min_pts) {
      cluster_of[p] = kNoise;
      continue;
    }
    const int cluster = num_clusters++;
    cluster_of[p] = cluster;
    for (size_t head = 0; head < seed.size(); ++head) {
      const int q = seed[head];
      if (cluster_of[q] == kNoise) cluster_of[q] = cluster;  // border point
      if (cluster_of[q] != kUnvisited) continue;
      cluster_of[q] = cluster;
      std::vector<int> next = neighbors(q);
      if (static_cast<int>(next.size()) >= min_pts) {
        seed.insert(seed.end(), next.begin(), next.end());
      }
    }
  }

  std::vector<Submap> out(num_clusters);
  for (int p = 0; p < n; ++p) {
    if (cluster_of[p] < 0) continue;
    Submap& s = out[cluster_of[p]];
    s.landmark_ids.push_back(landmarks[p].id);
    s.centroids.push_back(landmarks[p].position);
    s.classes.push_back(landmarks[p].label);
  }
  // Members arrive in input order; sort each submap by landmark id and order
  // submaps by smallest id.
  for (Submap& s : out) {
    std::vector<int> order(s.landmark_ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return s.landmark_ids[a] < s.landmark_ids[b]; });
    Submap sorted;
    for (int k : order) {
      sorted.landmark_ids.push_back(s.landmark_ids[k]);
      sorted.centroids.push_back(s.centroids[k]);
      sorted.classes.push_back(s.classes[k]);
    }
    s = std::move(sorted);
  }
  std::erase_if(out, [&](const Submap& s) { return s.size() < f_cs; });
  std::sort(out.begin(), out.end(), [](const Submap& a, const Submap& b) {
    return a.landmark_ids.front() < b.landmark_ids.front();
  });
  return out;
}

std::optional<SlcCandidate> select_viewpoint(const SemanticGraph& graph,
                                             const Submap& submap, double f_sr) {
  int best = -1;
  double best_time = std::numeric_limits<double>::infinity();
  for (PoseId id = 0; id < graph.pose_count(); ++id) {
    const PoseNode& node = graph.pose(id);
    const bool covers_all = std::all_of(
        submap.centroids.begin(), submap.centroids.end(),
        [&](const Eigen::Vector3d& c) {
          return (c - node.estimate.position).norm() <= f_sr;
        });
    if (covers_all && node.timestamp < best_time) {
      best = id;
      best_time = node.timestamp;
    }
  }
  if (best < 0) return std::nullopt;
  return SlcCandidate{submap, best, graph.pose(best).estimate};
}

FitResult closed_form_fit(std::span<const Eigen::Vector3d> seq_a,
                          std::span<const Eigen::Vector3d> seq_b) {
  if (seq_a.empty() || seq_a.size() != seq_b.size()) {
    throw std::invalid_argument("closed_form_fit needs equal-length non-empty sets");
  }
  const double k = static_cast<double>(seq_a.size());
  Eigen::Vector3d mean_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_b = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < seq_a.size(); ++i) {
    mean_a += seq_a[i];
    mean_b += seq_b[i];
  }
  mean_a /= k;
  mean_b /= k;

  // M = sum (b - mean_b)(a - mean_a)^T; the optimal yaw only needs the four
  // horizontal entries.
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < seq_a.size(); ++i) {
    m += (seq_b[i] - mean_b) * (seq_a[i] - mean_a).transpose();
  }
  const double c = m(0, 0) + m(1, 1);
  const double s = m(0, 1) - m(1, 0);

  FitResult fit;
  if (c == 0.0 && s == 0.0) {
    fit.degenerate = true;
    fit.residual = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.psi = std::atan2(s, c);
  const Eigen::Matrix3d r = yaw_rotation(fit.psi);
  fit.t = mean_a - r * mean_b;
  double sum = 0;
  for (size_t i = 0; i < seq_a.size(); ++i) {
    sum += (seq_a[i] - r * seq_b[i] - fit.t).squaredNorm();
  }
  fit.residual = sum / k;
  return fit;
}

namespace {

/// Depth-first assignment of each chosen local detection to a distinct,
/// class-compatible map landmark, in ascending index order; every complete
/// assignment is fitted.
struct CorrespondenceSearch {
  std::span<const LandmarkRef> map_set;
  std::span<const LabeledPoint> local_set;
  const std::vector<int>* chosen_locals = nullptr;

  std::vector<int> partners;     // map index per chosen local
  std::vector<char> used;        // map index occupancy
  std::vector<Eigen::Vector3d> a;
  std::vector<Eigen::Vector3d> b;

  double best_residual = std::numeric_limits<double>::infinity();
  FitResult best_fit;
  std::vector<int> best_partners;

  void run() {
    partners.assign(chosen_locals->size(), -1);
    used.assign(map_set.size(), 0);
    descend(0);
  }

  void descend(size_t depth) {
    if (depth == chosen_locals->size()) {
      a.clear();
      b.clear();
      for (size_t p = 0; p < partners.size(); ++p) {
        a.push_back(map_set[partners[p]].position);
        b.push_back(local_set[(*chosen_locals)[p]].position);
      }
      const FitResult fit = closed_form_fit(a, b);
      if (!fit.degenerate && fit.residual < best_residual) {
        best_residual = fit.residual;
        best_fit = fit;
        best_partners = partners;
      }
      return;
    }
    const LabeledPoint& local = local_set[(*chosen_locals)[depth]];
    for (size_t m = 0; m < map_set.size(); ++m) {
      if (used[m] || map_set[m].label != local.label) continue;
      used[m] = 1;
      partners[depth] = static_cast<int>(m);
      descend(depth + 1);
      used[m] = 0;
    }
  }
};

/// Lexicographic k-combinations of {0..m-1}.
bool next_combination(std::vector<int>& comb, int m) {
  const int k = static_cast<int>(comb.size());
  for (int i = k - 1; i >= 0; --i) {
    if (comb[i] < m - (k - i)) {
      ++comb[i];
      for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<AlignmentResult> align(std::span<const LandmarkRef> map_set,
                                     std::span<const LabeledPoint> local_set,
                                     int k_min, double tau) {
  if (k_min < 1) throw std::invalid_argument("align: k_min must be at least 1");
  const int n = static_cast<int>(map_set.size());
  const int m = static_cast<int>(local_set.size());
  for (int k = std::min(n, m); k >= k_min; --k) {
    double best_residual = std::numeric_limits<double>::infinity();
    FitResult best_fit;
    std::vector<int> best_locals;
    std::vector<int> best_partners;

    std::vector<int> chosen(k);
    std::iota(chosen.begin(), chosen.end(), 0);
    do {
      CorrespondenceSearch search{map_set, local_set, &chosen};
      search.run();
      if (search.best_residual < best_residual) {
        best_residual = search.best_residual;
        best_fit = search.best_fit;
        best_locals = chosen;
        best_partners = search.best_partners;
      }
    } while (next_combination(chosen, m));

    if (best_residual <= tau) {
      AlignmentResult result;
      result.t = best_fit.t;
      result.psi = best_fit.psi;
      result.residual = best_fit.residual;
      result.k = k;
      for (int p = 0; p < k; ++p) {
        result.correspondences.emplace_back(map_set[best_partners[p]].id,
                                            best_locals[p]);
      }
      return result;
    }
  }
  return std::nullopt;
}

std::optional<AlignmentResult> detect_loop_closure(
    const SemanticGraph& graph, std::span<const LabeledPoint> detections,
    double f_sr, int k_min, double tau) {
  if (graph.pose_count() == 0) return std::nullopt;
  const Eigen::Vector3d here = graph.pose(graph.latest_pose_id()).estimate.position;
  std::vector<LandmarkRef> window;
  for (const LandmarkRef& ref : landmark_refs(graph)) {
    if ((ref.position - here).norm() <= 2.0 * f_sr) window.push_back(ref);
  }
  return align(window, detections, k_min, tau);
}

}  // namespace actslam
