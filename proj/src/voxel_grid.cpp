#include "actslam/voxel_grid.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace actslam {

VoxelGrid::VoxelGrid(const Eigen::Vector3d& origin, double resolution,
                     const Eigen::Vector3i& dims, const Params& params)
    : origin_(origin), resolution_(resolution), dims_(dims), params_(params) {
  if (resolution <= 0) throw std::invalid_argument("voxel grid: resolution must be > 0");
  if ((dims.array() <= 0).any())
    throw std::invalid_argument("voxel grid: dims must be positive");
  const size_t n = static_cast<size_t>(dims.x()) * dims.y() * dims.z();
  log_odds_.assign(n, 0.0);
  touched_.assign(n, 0);
  hit_stamp_.assign(n, 0);
  miss_stamp_.assign(n, 0);
}

bool VoxelGrid::contains(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d rel = p - origin_;
  const Eigen::Vector3d ext = extent();
  return (rel.array() >= 0.0).all() && (rel.array() < ext.array()).all();
}

bool VoxelGrid::valid_cell(const Eigen::Vector3i& c) const {
  return (c.array() >= 0).all() && (c.array() < dims_.array()).all();
}

Eigen::Vector3i VoxelGrid::cell_of(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d rel = (p - origin_) / resolution_;
  return Eigen::Vector3i(static_cast<int>(std::floor(rel.x())),
                         static_cast<int>(std::floor(rel.y())),
                         static_cast<int>(std::floor(rel.z())));
}

Eigen::Vector3d VoxelGrid::center_of(const Eigen::Vector3i& c) const {
  return origin_ + (c.cast<double>() + Eigen::Vector3d::Constant(0.5)) * resolution_;
}

double VoxelGrid::probability(const Eigen::Vector3i& c) const {
  return 1.0 / (1.0 + std::exp(-log_odds(c)));
}

CellState VoxelGrid::state_linear(int id) const {
  const double p = 1.0 / (1.0 + std::exp(-log_odds_[id]));
  if (p > params_.p_occ) return CellState::kOccupied;
  if (p < params_.p_free) return CellState::kFree;
  return CellState::kUnknown;
}

CellState VoxelGrid::state(const Eigen::Vector3i& c) const { return state_linear(linear(c)); }

CellState VoxelGrid::state_at(const Eigen::Vector3d& p) const {
  if (!contains(p)) return CellState::kUnknown;
  return state(cell_of(p));
}

std::vector<Eigen::Vector3i> VoxelGrid::walk(const Eigen::Vector3d& a,
                                             const Eigen::Vector3d& b) const {
  std::vector<Eigen::Vector3i> cells;
  Eigen::Vector3i cell = cell_of(a);
  cells.push_back(cell);

  const Eigen::Vector3d d = b - a;
  if (d.squaredNorm() == 0.0) return cells;

  const bool goal_inside = contains(b);
  const Eigen::Vector3i goal = goal_inside ? cell_of(b) : Eigen::Vector3i(-1, -1, -1);

  Eigen::Vector3i step{0, 0, 0};
  Eigen::Vector3d t_max = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d t_delta = t_max;
  for (int k = 0; k < 3; ++k) {
    if (d[k] > 0) {
      step[k] = 1;
      const double boundary = origin_[k] + (cell[k] + 1) * resolution_;
      t_max[k] = (boundary - a[k]) / d[k];
      t_delta[k] = resolution_ / d[k];
    } else if (d[k] < 0) {
      step[k] = -1;
      const double boundary = origin_[k] + cell[k] * resolution_;
      t_max[k] = (boundary - a[k]) / d[k];
      t_delta[k] = -resolution_ / d[k];
    }
  }

  const int max_cells = dims_.x() + dims_.y() + dims_.z() + 3;
  for (int guard = 0; guard < max_cells; ++guard) {
    if (goal_inside && cell == goal) break;
    int k = 0;
    if (t_max[1] < t_max[k]) k = 1;
    if (t_max[2] < t_max[k]) k = 2;
    if (t_max[k] > 1.0 + 1e-12) break;  // ran past the segment end
    cell[k] += step[k];
    if (!valid_cell(cell)) break;
    t_max[k] += t_delta[k];
    cells.push_back(cell);
  }
  return cells;
}

std::vector<Eigen::Vector3i> VoxelGrid::traverse(const Eigen::Vector3d& a,
                                                 const Eigen::Vector3d& b) const {
  if (!contains(a)) throw std::invalid_argument("traverse: start outside grid");
  if (contains(b)) {
    // Canonical orientation: walk from the lexicographically smaller endpoint
    // so that traverse(a,b) and traverse(b,a) emit the same cells even when
    // the segment crosses cell corners exactly.
    const bool reversed = std::tie(b.x(), b.y(), b.z()) < std::tie(a.x(), a.y(), a.z());
    if (reversed) {
      std::vector<Eigen::Vector3i> cells = walk(b, a);
      std::reverse(cells.begin(), cells.end());
      return cells;
    }
  }
  return walk(a, b);
}

void VoxelGrid::apply_update(int id, double delta, UpdateBBox& bbox) {
  const double before = log_odds_[id];
  const double after = std::clamp(before + delta, params_.l_min, params_.l_max);
  if (touched_[id] == 0) {
    touched_[id] = 1;
    ++touched_count_;
  }
  if (after != before) {
    log_odds_[id] = after;
    bbox.expand(cell_of_linear(id));
  }
}

UpdateBBox VoxelGrid::integrate_scan(const PoseXYZYaw& sensor_pose,
                                     std::span<const Ray> rays) {
  if (!contains(sensor_pose.position))
    throw std::invalid_argument("integrate_scan: sensor outside grid");

  ++scan_stamp_;
  std::vector<int> hit_cells, miss_cells;

  for (const Ray& ray : rays) {
    const std::vector<Eigen::Vector3i> cells = walk(sensor_pose.position, ray.endpoint);
    const bool endpoint_inside = contains(ray.endpoint);
    const bool reached =
        endpoint_inside && !cells.empty() && cells.back() == cell_of(ray.endpoint);

    const size_t n = cells.size();
    // Truncated rays (endpoint outside, or walk stopped early) are misses
    // along everything traversed; the surface cell is unknown to us.
    const size_t miss_end = reached ? n - 1 : n;
    for (size_t i = 0; i < miss_end; ++i) {
      const int id = linear(cells[i]);
      if (miss_stamp_[id] != scan_stamp_) {
        miss_stamp_[id] = scan_stamp_;
        miss_cells.push_back(id);
      }
    }
    if (reached && ray.is_hit) {
      const int id = linear(cells.back());
      if (hit_stamp_[id] != scan_stamp_) {
        hit_stamp_[id] = scan_stamp_;
        hit_cells.push_back(id);
      }
    }
  }

  UpdateBBox bbox;
  for (int id : hit_cells) apply_update(id, params_.l_hit, bbox);
  for (int id : miss_cells) {
    if (hit_stamp_[id] == scan_stamp_) continue;  // hit wins within a scan
    apply_update(id, params_.l_miss, bbox);
  }
  return bbox;
}

void VoxelGrid::recenter(const Eigen::Vector3d& robot_position) {
  const Eigen::Vector3d desired = robot_position - 0.5 * extent();
  Eigen::Vector3i shift;
  for (int k = 0; k < 3; ++k)
    shift[k] = static_cast<int>(std::llround((desired[k] - origin_[k]) / resolution_));
  if (shift == Eigen::Vector3i::Zero()) return;

  const size_t n = log_odds_.size();
  std::vector<double> new_lo(n, 0.0);
  std::vector<uint8_t> new_touched(n, 0);
  int64_t new_count = 0;
  for (int z = 0; z < dims_.z(); ++z)
    for (int y = 0; y < dims_.y(); ++y)
      for (int x = 0; x < dims_.x(); ++x) {
        const Eigen::Vector3i src(x + shift.x(), y + shift.y(), z + shift.z());
        if (!valid_cell(src)) continue;
        const int dst_id = (z * dims_.y() + y) * dims_.x() + x;
        const int src_id = linear(src);
        new_lo[dst_id] = log_odds_[src_id];
        new_touched[dst_id] = touched_[src_id];
        new_count += touched_[src_id];
      }
  log_odds_ = std::move(new_lo);
  touched_ = std::move(new_touched);
  touched_count_ = new_count;
  origin_ += shift.cast<double>() * resolution_;
  std::fill(hit_stamp_.begin(), hit_stamp_.end(), 0);
  std::fill(miss_stamp_.begin(), miss_stamp_.end(), 0);
  scan_stamp_ = 0;
}

void VoxelGrid::set_log_odds(const Eigen::Vector3i& c, double value) {
  const int id = linear(c);
  log_odds_[id] = std::clamp(value, params_.l_min, params_.l_max);
  if (touched_[id] == 0) {
    touched_[id] = 1;
    ++touched_count_;
  }
}

nlohmann::json VoxelGrid::dump() const {
  nlohmann::json rle = nlohmann::json::array();
  const char* codes = "UFO";  // indexed by CellState
  int run_start = 0;
  CellState run_state = state_linear(0);
  for (int id = 1; id < cell_count(); ++id) {
    const CellState s = state_linear(id);
    if (s != run_state) {
      rle.push_back({std::string(1, codes[static_cast<int>(run_state)]), id - run_start});
      run_start = id;
      run_state = s;
    }
  }
  rle.push_back(
      {std::string(1, codes[static_cast<int>(run_state)]), cell_count() - run_start});

  return nlohmann::json{{"origin", {origin_.x(), origin_.y(), origin_.z()}},
                        {"resolution", resolution_},
                        {"dims", {dims_.x(), dims_.y(), dims_.z()}},
                        {"states_rle", rle}};
}

}  // namespace actslam
