#include "actslam/frontier.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numbers>
#include <unordered_set>

namespace actslam {
namespace {

const std::array<Eigen::Vector3i, 6> kFaceNeighbors = {
    Eigen::Vector3i{1, 0, 0},  Eigen::Vector3i{-1, 0, 0}, Eigen::Vector3i{0, 1, 0},
    Eigen::Vector3i{0, -1, 0}, Eigen::Vector3i{0, 0, 1},  Eigen::Vector3i{0, 0, -1}};

/// Mean and span of the member cell centers.
void fill_geometry(const VoxelGrid& grid, FrontierCluster& cluster) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector3d hi = -lo;
  for (const auto& c : cluster.cells) {
    const Eigen::Vector3d center = grid.center_of(c);
    sum += center;
    lo = lo.cwiseMin(center);
    hi = hi.cwiseMax(center);
  }
  cluster.centroid = sum / static_cast<double>(cluster.cells.size());
  cluster.extent = hi - lo;
}

void split_recursive(const VoxelGrid& grid, FrontierCluster cluster, double f_sz,
                     std::vector<FrontierCluster>& out) {
  fill_geometry(grid, cluster);
  if (cluster.extent.maxCoeff() <= f_sz || cluster.cells.size() < 2) {
    std::sort(cluster.cells.begin(), cluster.cells.end(),
              [&](const Eigen::Vector3i& a, const Eigen::Vector3i& b) {
                return grid.linear(a) < grid.linear(b);
              });
    out.push_back(std::move(cluster));
    return;
  }

  // Largest-variance axis of the cell centers (ties toward lower axis index).
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (const auto& c : cluster.cells) {
    const Eigen::Vector3d d = grid.center_of(c) - cluster.centroid;
    var += d.cwiseProduct(d);
  }
  int axis = 0;
  if (var.y() > var.x()) axis = 1;
  if (var.z() > var[axis]) axis = 2;

  std::sort(cluster.cells.begin(), cluster.cells.end(),
            [&](const Eigen::Vector3i& a, const Eigen::Vector3i& b) {
              if (a[axis] != b[axis]) return a[axis] < b[axis];
              return grid.linear(a) < grid.linear(b);
            });
  const size_t mid = cluster.cells.size() / 2;
  FrontierCluster lower, upper;
  lower.cells.assign(cluster.cells.begin(), cluster.cells.begin() + mid);
  upper.cells.assign(cluster.cells.begin() + mid, cluster.cells.end());
  split_recursive(grid, std::move(lower), f_sz, out);
  split_recursive(grid, std::move(upper), f_sz, out);
}

}  // namespace

bool is_frontier_cell(const VoxelGrid& grid, const Eigen::Vector3i& cell) {
  if (grid.state(cell) != CellState::kFree) return false;
  for (const auto& d : kFaceNeighbors) {
    const Eigen::Vector3i n = cell + d;
    if (grid.valid_cell(n) && grid.state(n) == CellState::kUnknown) return true;
  }
  return false;
}

int cell_count_ig(const VoxelGrid& grid, const PoseXYZYaw& pose, const SensorModel& sensor) {
  if (!grid.contains(pose.position)) return 0;
  const Eigen::Matrix3d rot = yaw_rotation(pose.yaw);
  std::unordered_set<int> counted;
  for (const Eigen::Vector3d& dir : sensor.body_dirs()) {
    const Eigen::Vector3d endpoint = pose.position + rot * dir * sensor.range;
    for (const Eigen::Vector3i& cell : grid.traverse(pose.position, endpoint)) {
      const CellState s = grid.state(cell);
      if (s == CellState::kOccupied) break;
      if (s == CellState::kUnknown) counted.insert(grid.linear(cell));
    }
  }
  return static_cast<int>(counted.size());
}

std::vector<int> viewpoint_footprint(const VoxelGrid& grid, const PoseXYZYaw& pose,
                                     const SensorModel& sensor) {
  std::vector<int> cells;
  const Eigen::Vector3d lo = pose.position - Eigen::Vector3d::Constant(sensor.range);
  const Eigen::Vector3d hi = pose.position + Eigen::Vector3d::Constant(sensor.range);
  Eigen::Vector3i clo = grid.cell_of(lo).cwiseMax(Eigen::Vector3i::Zero());
  Eigen::Vector3i chi =
      grid.cell_of(hi).cwiseMin(grid.dims() - Eigen::Vector3i::Ones());
  for (int z = clo.z(); z <= chi.z(); ++z)
    for (int y = clo.y(); y <= chi.y(); ++y)
      for (int x = clo.x(); x <= chi.x(); ++x) {
        const Eigen::Vector3i c(x, y, z);
        if (sensor.in_frustum(pose, grid.center_of(c))) cells.push_back(grid.linear(c));
      }
  return cells;  // ascending: z/y/x loop order matches linear index order
}

double footprint_correlation(const std::vector<int>& fu, const std::vector<int>& fv) {
  if (fu.empty() || fv.empty()) return 0.0;
  std::vector<int> inter;
  std::set_intersection(fu.begin(), fu.end(), fv.begin(), fv.end(),
                        std::back_inserter(inter));
  return static_cast<double>(inter.size()) /
         static_cast<double>(std::min(fu.size(), fv.size()));
}

double correlation(const VoxelGrid& grid, const Viewpoint& u, const Viewpoint& v,
                   const SensorModel& sensor) {
  return footprint_correlation(viewpoint_footprint(grid, u.pose, sensor),
                               viewpoint_footprint(grid, v.pose, sensor));
}

std::vector<FrontierCluster> split_cluster(const VoxelGrid& grid,
                                           const FrontierCluster& cluster, double f_sz) {
  std::vector<FrontierCluster> out;
  if (cluster.cells.empty()) return out;
  FrontierCluster copy = cluster;
  split_recursive(grid, std::move(copy), f_sz, out);
  return out;
}

std::optional<Viewpoint> sample_viewpoint(const VoxelGrid& grid,
                                          const FrontierCluster& cluster,
                                          const SamplingParams& params,
                                          RngStream::Sub& rng) {
  constexpr double kTwoPi = 2 * std::numbers::pi;
  std::optional<Viewpoint> best;
  for (int i = 0; i < params.n_pos; ++i) {
    // Draws happen for every candidate regardless of rejection so the
    // consumed sequence is independent of grid content.
    const double theta = rng.uniform(0.0, kTwoPi);
    const double dz = rng.uniform(-params.height_band, params.height_band);
    const double r = params.ring_radii[i % params.ring_radii.size()];
    Eigen::Vector3d pos = cluster.centroid;
    pos.x() += r * std::cos(theta);
    pos.y() += r * std::sin(theta);
    pos.z() += dz;
    // Clusters hugging the floor or ceiling would otherwise demand positions
    // inside the boundary cell layer where the robot can never fly.
    const double z_lo = grid.origin().z() + 1.5 * grid.resolution();
    const double z_hi =
        grid.origin().z() + grid.dims().z() * grid.resolution() - 1.5 * grid.resolution();
    if (z_lo <= z_hi) pos.z() = std::clamp(pos.z(), z_lo, z_hi);
    if (grid.state_at(pos) != CellState::kFree) continue;

    double pos_best_ig = -1;
    double pos_best_yaw = 0;
    for (int j = 0; j < params.n_yaw; ++j) {
      const double yaw = wrap_angle(-std::numbers::pi + kTwoPi * j / params.n_yaw);
      PoseXYZYaw pose;
      pose.position = pos;
      pose.yaw = yaw;
      const int ig = cell_count_ig(grid, pose, params.ig_sensor);
      if (ig > pos_best_ig) {
        pos_best_ig = ig;
        pos_best_yaw = yaw;
      }
    }
    if (pos_best_ig > (best ? best->ig : 0.0)) {
      Viewpoint vp;
      vp.pose.position = pos;
      vp.pose.yaw = pos_best_yaw;
      vp.ig = pos_best_ig;
      vp.cluster_id = cluster.id;
      best = vp;
    }
  }
  return best;
}

const std::vector<FrontierCluster>& FrontierTracker::update(const VoxelGrid& grid,
                                                            const UpdateBBox& bbox) {
  if (bbox.empty()) return clusters_;

  // Re-test every cell in the bbox dilated by one: a log-odds change in a
  // cell can flip the frontier status of its face neighbors.
  const Eigen::Vector3i lo = (bbox.min - Eigen::Vector3i::Ones()).cwiseMax(0);
  const Eigen::Vector3i hi =
      (bbox.max + Eigen::Vector3i::Ones()).cwiseMin(grid.dims() - Eigen::Vector3i::Ones());
  for (int z = lo.z(); z <= hi.z(); ++z)
    for (int y = lo.y(); y <= hi.y(); ++y)
      for (int x = lo.x(); x <= hi.x(); ++x) {
        const Eigen::Vector3i c(x, y, z);
        const int id = grid.linear(c);
        if (is_frontier_cell(grid, c))
          frontier_.insert(id);
        else
          frontier_.erase(id);
      }

  // Remember previous ids so unchanged clusters keep theirs.
  std::map<std::vector<int>, int> prev_ids;
  for (const FrontierCluster& cl : clusters_) {
    std::vector<int> key;
    key.reserve(cl.cells.size());
    for (const auto& c : cl.cells) key.push_back(grid.linear(c));
    prev_ids.emplace(std::move(key), cl.id);
  }

  // Recluster the full set: 6-connected flood fill in ascending id order.
  clusters_.clear();
  std::unordered_set<int> seen;
  for (int seed : frontier_) {
    if (seen.count(seed)) continue;
    std::vector<int> component;
    std::deque<int> queue{seed};
    seen.insert(seed);
    while (!queue.empty()) {
      const int id = queue.front();
      queue.pop_front();
      component.push_back(id);
      const Eigen::Vector3i c = grid.cell_of_linear(id);
      for (const auto& d : kFaceNeighbors) {
        const Eigen::Vector3i n = c + d;
        if (!grid.valid_cell(n)) continue;
        const int nid = grid.linear(n);
        if (frontier_.count(nid) && !seen.count(nid)) {
          seen.insert(nid);
          queue.push_back(nid);
        }
      }
    }
    std::sort(component.begin(), component.end());

    FrontierCluster raw;
    raw.cells.reserve(component.size());
    for (int id : component) raw.cells.push_back(grid.cell_of_linear(id));
    for (FrontierCluster& leaf : split_cluster(grid, raw, f_sz_)) {
      std::vector<int> key;
      key.reserve(leaf.cells.size());
      for (const auto& c : leaf.cells) key.push_back(grid.linear(c));
      const auto it = prev_ids.find(key);
      leaf.id = (it != prev_ids.end()) ? it->second : next_id_++;
      clusters_.push_back(std::move(leaf));
    }
  }

  // Deterministic order: by first (smallest) member cell.
  std::sort(clusters_.begin(), clusters_.end(),
            [&](const FrontierCluster& a, const FrontierCluster& b) {
              return grid.linear(a.cells.front()) < grid.linear(b.cells.front());
            });
  return clusters_;
}

}  // namespace actslam
