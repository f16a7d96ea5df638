#include "suites.hpp"

#include "oracles.hpp"

#include "actslam/astar.hpp"
#include "actslam/cop.hpp"
#include "actslam/factor_graph.hpp"
#include "actslam/frontier.hpp"
#include "actslam/rng.hpp"
#include "actslam/sensor.hpp"
#include "actslam/sim.hpp"
#include "actslam/slc.hpp"
#include "actslam/voxel_grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

namespace actslam::oracles {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

PoseXYZYaw pose_at(double x, double y, double z, double yaw = 0) {
  PoseXYZYaw p;
  p.position = {x, y, z};
  p.yaw = yaw;
  return p;
}

/// Complete Euclidean orienteering instance over n random planar vertices.
CopInstance random_cop_instance(RngStream::Sub& u, int n, double budget) {
  CopInstance inst;
  inst.start = pose_at(u.uniform(0, 12), u.uniform(0, 12), 0);
  for (int i = 0; i < n; ++i) {
    inst.vertices.push_back(
        {i, u.uniform(0, 1), pose_at(u.uniform(0, 12), u.uniform(0, 12), 0)});
  }
  inst.cost = Eigen::MatrixXd::Zero(n + 1, n + 1);
  auto position = [&](int row) {
    return row == 0 ? inst.start.position : inst.vertices[row - 1].pose.position;
  };
  for (int a = 0; a <= n; ++a) {
    for (int b = a + 1; b <= n; ++b) {
      const double d = (position(a) - position(b)).norm();
      inst.cost(a, b) = d;
      inst.cost(b, a) = d;
    }
  }
  inst.correlation = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double w = u.integer(2) == 0 ? 0.0 : u.uniform(0, 1);
      inst.correlation(a, b) = w;
      inst.correlation(b, a) = w;
    }
  }
  inst.budget = budget;
  inst.validate();
  return inst;
}

/// Random occupancy grid: mostly Free, a few solid boxes, a few Unknown
/// patches left at neutral log-odds.
VoxelGrid random_grid(RngStream::Sub& u) {
  const Eigen::Vector3i dims(20, 20, 6);
  VoxelGrid grid(Eigen::Vector3d::Zero(), 0.25, dims);
  for (int id = 0; id < grid.cell_count(); ++id) {
    grid.set_log_odds(grid.cell_of_linear(id), -2.0);
  }
  const int n_boxes = 2 + static_cast<int>(u.integer(3));
  for (int b = 0; b < n_boxes; ++b) {
    Eigen::Vector3i lo(static_cast<int>(u.integer(dims.x())),
                       static_cast<int>(u.integer(dims.y())),
                       static_cast<int>(u.integer(dims.z())));
    Eigen::Vector3i span(1 + static_cast<int>(u.integer(6)),
                         1 + static_cast<int>(u.integer(6)),
                         1 + static_cast<int>(u.integer(3)));
    Eigen::Vector3i hi = (lo + span).cwiseMin(dims);
    for (int z = lo.z(); z < hi.z(); ++z)
      for (int y = lo.y(); y < hi.y(); ++y)
        for (int x = lo.x(); x < hi.x(); ++x)
          grid.set_log_odds({x, y, z}, 3.5);
  }
  const int n_unknown = static_cast<int>(u.integer(40));
  for (int i = 0; i < n_unknown; ++i) {
    const Eigen::Vector3i c(static_cast<int>(u.integer(dims.x())),
                            static_cast<int>(u.integer(dims.y())),
                            static_cast<int>(u.integer(dims.z())));
    grid.set_log_odds(c, 0.0);
  }
  return grid;
}

/// Random small well-constrained graph built through the public estimation
/// API: a chain of key poses with landmark observations sprinkled in.
SemanticGraph random_graph(RngStream::Sub& u) {
  SemanticGraph::Params params;
  params.g_da = 0.75;
  SemanticGraph g(params);
  g.add_first_pose(pose_at(u.uniform(-1, 1), u.uniform(-1, 1), 0, u.uniform(-1, 1)),
                   Eigen::Vector4d::Constant(0.1));
  const int n_poses = 2 + static_cast<int>(u.integer(4));
  const char* labels[] = {"a", "b", "c"};
  for (int i = 1; i < n_poses; ++i) {
    PoseXYZYaw rel = pose_at(u.uniform(0.5, 1.5), u.uniform(-0.5, 0.5),
                             u.uniform(-0.2, 0.2), u.uniform(-0.4, 0.4));
    g.add_key_pose(rel, Eigen::Vector4d::Constant(u.uniform(0.05, 0.3)));
    const int n_obs = static_cast<int>(u.integer(3));
    for (int k = 0; k < n_obs; ++k) {
      const Eigen::Vector3d disp(u.uniform(0.5, 3), u.uniform(-2, 2),
                                 u.uniform(-1, 1));
      g.add_landmark_observation(g.latest_pose_id(), disp,
                                 labels[u.integer(3)],
                                 Eigen::Vector3d::Constant(u.uniform(0.05, 0.2)));
    }
  }
  return g;
}

/// Central-difference Jacobian of the stacked whitened residuals.
Eigen::MatrixXd numeric_jacobian(const SemanticGraph& g) {
  const std::vector<PoseXYZYaw> poses = g.pose_states();
  const std::vector<Eigen::Vector3d> landmarks = g.landmark_states();
  const Eigen::VectorXd r0 = g.residuals_at(poses, landmarks);
  const int dim = 4 * static_cast<int>(poses.size()) + 3 * static_cast<int>(landmarks.size());
  Eigen::MatrixXd j(r0.size(), dim);
  const double h = 1e-6;
  for (int d = 0; d < dim; ++d) {
    auto perturb = [&](double delta) {
      std::vector<PoseXYZYaw> p = poses;
      std::vector<Eigen::Vector3d> l = landmarks;
      if (d < 4 * static_cast<int>(p.size())) {
        const int id = d / 4;
        const int c = d % 4;
        if (c < 3)
          p[id].position[c] += delta;
        else
          p[id].yaw += delta;
      } else {
        const int rest = d - 4 * static_cast<int>(p.size());
        l[rest / 3][rest % 3] += delta;
      }
      return g.residuals_at(p, l);
    };
    j.col(d) = (perturb(h) - perturb(-h)) / (2 * h);
  }
  return j;
}

}  // namespace

SuiteReport suite_align(std::uint64_t seed, int instances) {
  SuiteReport report{"align", 0, 0, {}};
  RngStream rng(seed);
  auto& u = rng.stream("align");
  const char* labels[] = {"a", "b", "c"};
  int found = 0;
  for (int inst = 0; inst < instances; ++inst) {
    const int n = 3 + static_cast<int>(u.integer(3));
    const int m = 3 + static_cast<int>(u.integer(3));
    std::vector<LandmarkRef> map_set;
    for (int i = 0; i < n; ++i) {
      map_set.push_back({i,
                         {u.uniform(-5, 5), u.uniform(-5, 5), u.uniform(-1, 1)},
                         labels[u.integer(3)]});
    }
    std::vector<LabeledPoint> local;
    const int mode = static_cast<int>(u.integer(3));
    if (mode == 0) {
      for (int i = 0; i < m; ++i) {
        local.push_back({{u.uniform(-5, 5), u.uniform(-5, 5), u.uniform(-1, 1)},
                         labels[u.integer(3)]});
      }
    } else {
      const double psi = u.uniform(-3, 3);
      const Eigen::Vector3d t{u.uniform(-3, 3), u.uniform(-3, 3), u.uniform(-1, 1)};
      const double sigma = mode == 2 ? 0.05 : 0.0;
      const int overlap = std::min(n, m);
      for (int i = 0; i < overlap; ++i) {
        Eigen::Vector3d p = yaw_rotation(psi).transpose() * (map_set[i].position - t);
        p += Eigen::Vector3d(u.normal(0, sigma), u.normal(0, sigma), u.normal(0, sigma));
        local.push_back({p, map_set[i].label});
      }
      for (int i = overlap; i < m; ++i) {
        local.push_back({{u.uniform(-5, 5), u.uniform(-5, 5), u.uniform(-1, 1)},
                         labels[u.integer(3)]});
      }
    }

    const auto fast = align(map_set, local, 3, 0.05);
    const auto slow = align_bruteforce(map_set, local, 3, 0.05);
    ++report.checks;
    bool agree = fast.has_value() == slow.has_value();
    if (agree && fast) {
      ++found;
      auto pair_set = [](const std::vector<std::pair<int, int>>& c) {
        return std::set<std::pair<int, int>>(c.begin(), c.end());
      };
      agree = fast->k == slow->k &&
              std::abs(fast->residual - slow->residual) <= 1e-9 &&
              std::abs(wrap_angle(fast->psi - slow->psi)) <= 1e-9 &&
              (fast->t - slow->t).norm() <= 1e-9 &&
              pair_set(fast->correspondences) == pair_set(slow->correspondences);
    }
    if (!agree) ++report.failures;
  }
  report.notes.push_back("alignments accepted on " + std::to_string(found) + "/" +
                         std::to_string(instances) + " instances");
  return report;
}

SuiteReport suite_heldkarp(std::uint64_t seed, int instances) {
  SuiteReport report{"heldkarp", 0, 0, {}};
  RngStream rng(seed);
  auto& u = rng.stream("hk");
  for (int inst = 0; inst < instances; ++inst) {
    const int n = 2 + static_cast<int>(u.integer(7));  // 2..8
    const CopInstance cop = random_cop_instance(u, n, 1000.0);
    const int k = 1 + static_cast<int>(u.integer(n));
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < k; ++i)
      std::swap(all[i], all[i + static_cast<int>(u.integer(n - i))]);
    std::vector<int> selected(all.begin(), all.begin() + k);
    const Tour tour = held_karp_path(cop, selected);
    const double reference = open_path_cost_bruteforce(cop, selected);
    ++report.checks;
    // Both take the minimum over the same left-to-right path sums, so the
    // costs must tie exactly, not merely within a tolerance.
    if (tour.cost != reference) ++report.failures;
  }
  return report;
}

SuiteReport suite_cop(std::uint64_t seed, int instances) {
  SuiteReport report{"cop", 0, 0, {}};
  RngStream rng(seed);
  auto& u = rng.stream("cop");
  std::vector<double> ratios;
  for (int inst = 0; inst < instances; ++inst) {
    const int n = 1 + static_cast<int>(u.integer(10));  // 1..10
    const CopInstance cop = random_cop_instance(u, n, u.uniform(4, 30));
    const Tour tour = solve(cop);
    const Tour again = solve(cop);
    ++report.checks;
    bool good = tour.cost <= cop.budget;
    good = good && tour.vertices == again.vertices && tour.cost == again.cost &&
           tour.objective == again.objective;
    good = good && objective(cop, tour.vertices) == tour.objective;
    if (n <= 6) {
      const double best = cop_best_objective_bruteforce(cop);
      good = good && tour.objective <= best + 1e-9;
      if (best > 1e-12) ratios.push_back(tour.objective / best);
    }
    if (!good) ++report.failures;
  }
  if (!ratios.empty()) {
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double mean =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / sorted.size();
    report.notes.push_back(
        "optimality ratio on " + std::to_string(sorted.size()) +
        " instances with <=6 vertices: mean " + format_double(mean) + ", median " +
        format_double(sorted[sorted.size() / 2]) + ", min " +
        format_double(sorted.front()));
  }
  return report;
}

SuiteReport suite_covariance(std::uint64_t seed, int instances) {
  SuiteReport report{"covariance", 0, 0, {}};
  RngStream rng(seed);
  auto& u = rng.stream("cov");
  for (int inst = 0; inst < instances; ++inst) {
    SemanticGraph g = random_graph(u);
    g.optimize();
    const Eigen::MatrixXd sigma = g.covariance();
    const Eigen::MatrixXd j = numeric_jacobian(g);
    const Eigen::MatrixXd h = j.transpose() * j;
    const Eigen::MatrixXd reference =
        h.ldlt().solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    ++report.checks;
    const double scale = std::max(1.0, reference.cwiseAbs().maxCoeff());
    if ((sigma - reference).cwiseAbs().maxCoeff() / scale > 1e-5) ++report.failures;
  }
  return report;
}

SuiteReport suite_frontier(const WorldModel& world, std::uint64_t seed, int sequences) {
  SuiteReport report{"frontier", 0, 0, {}};
  RngStream rng(seed);
  auto& u = rng.stream("frontier");
  SensorModel sensor;
  sensor.fov_h = 87.0 * std::numbers::pi / 180.0;
  sensor.fov_v = 58.0 * std::numbers::pi / 180.0;
  sensor.range = 5.0;
  sensor.n_h = 32;
  sensor.n_v = 24;

  for (int s = 0; s < sequences; ++s) {
    VoxelGrid grid(Eigen::Vector3d::Zero(), 0.25, world.grid_dims(0.25));
    FrontierTracker tracker(1.2);
    const int n_scans = 3 + static_cast<int>(u.integer(4));
    for (int scan = 0; scan < n_scans; ++scan) {
      PoseXYZYaw pose;
      do {
        pose.position = {u.uniform(0.3, world.bounds.x() - 0.3),
                         u.uniform(0.3, world.bounds.y() - 0.3),
                         u.uniform(0.3, world.bounds.z() - 0.3)};
      } while (!world.position_free(pose.position));
      pose.yaw = u.uniform(-std::numbers::pi, std::numbers::pi);

      const SenseResult sensed = sense(world, pose, sensor, 0.0, u);
      const UpdateBBox bbox =
          grid.integrate_scan(pose, rays_in_world(sensed.body_rays, pose));
      tracker.update(grid, bbox);

      // From-scratch reference: Free cells with an in-bounds Unknown face
      // neighbor, rederived without the library's frontier predicate.
      std::vector<int> reference;
      const Eigen::Vector3i offsets[6] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                          {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
      for (int id = 0; id < grid.cell_count(); ++id) {
        if (grid.state_linear(id) != CellState::kFree) continue;
        const Eigen::Vector3i cell = grid.cell_of_linear(id);
        for (const Eigen::Vector3i& off : offsets) {
          const Eigen::Vector3i nb = cell + off;
          if (grid.valid_cell(nb) && grid.state(nb) == CellState::kUnknown) {
            reference.push_back(id);
            break;
          }
        }
      }
      ++report.checks;
      if (tracker.frontier_cells() != reference) ++report.failures;
    }
  }
  return report;
}

SuiteReport suite_astar(std::uint64_t seed, int queries) {
  SuiteReport report{"astar", 0, 0, {}};
  RngStream rng(seed);
  auto& u = rng.stream("astar");
  int reachable = 0;
  while (report.checks < queries) {
    const VoxelGrid grid = random_grid(u);
    // Several queries per grid amortize the map construction.
    for (int q = 0; q < 5 && report.checks < queries; ++q) {
      auto random_free = [&]() -> std::optional<Eigen::Vector3d> {
        for (int attempt = 0; attempt < 64; ++attempt) {
          const Eigen::Vector3i c(static_cast<int>(u.integer(grid.dims().x())),
                                  static_cast<int>(u.integer(grid.dims().y())),
                                  static_cast<int>(u.integer(grid.dims().z())));
          if (grid.state(c) == CellState::kFree) return grid.center_of(c);
        }
        return std::nullopt;
      };
      const auto start = random_free();
      const auto goal = random_free();
      if (!start || !goal) continue;
      const auto fast = astar(grid, *start, *goal);
      const auto slow = grid_dijkstra_cost(grid, *start, *goal);
      ++report.checks;
      if (fast.has_value() != slow.has_value()) {
        ++report.failures;
      } else if (fast) {
        ++reachable;
        if (std::abs(fast->cost - *slow) > 1e-9) ++report.failures;
      }
    }
  }
  report.notes.push_back(std::to_string(reachable) + "/" + std::to_string(queries) +
                         " queries reachable");
  return report;
}

SuiteReport suite_dbscan(std::uint64_t seed, int sets) {
  SuiteReport report{"dbscan", 0, 0, {}};
  RngStream rng(seed);
  auto& u = rng.stream("dbscan");
  for (int inst = 0; inst < sets; ++inst) {
    const int n = static_cast<int>(u.integer(41));  // 0..40
    const double eps = u.uniform(0.4, 3.0);
    const int min_pts = 1 + static_cast<int>(u.integer(4));
    const int f_cs = 3;
    std::vector<LandmarkRef> refs;
    std::vector<Eigen::Vector3d> points;
    const int n_centers = 1 + static_cast<int>(u.integer(4));
    std::vector<Eigen::Vector3d> centers;
    for (int c = 0; c < n_centers; ++c) {
      centers.emplace_back(u.uniform(-8, 8), u.uniform(-8, 8), u.uniform(-2, 2));
    }
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d& base = centers[u.integer(centers.size())];
      points.push_back(base + Eigen::Vector3d(u.uniform(-2, 2), u.uniform(-2, 2),
                                              u.uniform(-0.5, 0.5)));
      refs.push_back({i, points.back(), "x"});
    }

    const auto submaps = cluster_submaps(refs, eps, min_pts, f_cs);
    const std::vector<int> labels = dbscan_naive(points, eps, min_pts);
    std::map<int, std::vector<int>> by_cluster;
    for (int i = 0; i < n; ++i) {
      if (labels[i] >= 0) by_cluster[labels[i]].push_back(i);
    }
    std::set<std::vector<int>> expected;
    for (auto& [id, members] : by_cluster) {
      std::sort(members.begin(), members.end());
      if (static_cast<int>(members.size()) >= f_cs) expected.insert(members);
    }
    std::set<std::vector<int>> got;
    for (const Submap& sm : submaps) got.insert(sm.landmark_ids);
    ++report.checks;
    if (got != expected) ++report.failures;
  }
  return report;
}

}  // namespace actslam::oracles
