#include "actslam/mission.hpp"

#include "actslam/astar.hpp"
#include "actslam/cop.hpp"
#include "actslam/factor_graph.hpp"
#include "actslam/frontier.hpp"
#include "actslam/refiner.hpp"
#include "actslam/rng.hpp"
#include "actslam/sensor.hpp"
#include "actslam/sim.hpp"
#include "actslam/slc.hpp"
#include "actslam/voxel_grid.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace actslam {
namespace {

constexpr double kTickLength = 1.0;      // m, nominal travel per control tick
constexpr double kArrivalTol = 0.05;     // m, final-goal position tolerance
constexpr double kWaypointTol = 0.15;    // m, interior-waypoint pass tolerance
constexpr double kYawTol = 0.02;         // rad, goal-yaw tolerance
constexpr double kBumperMargin = 0.05;   // m, stop distance short of a surface
constexpr double kBlockedTime = 0.1;     // s, charged to a tick that cannot move
constexpr double kPanoramaTime = 1.0;    // s, charged per full yaw sweep
constexpr int kBlockedLimit = 2;         // blocked ticks before the element aborts
constexpr int kMaxTicks = 20000;         // hard runaway stop
constexpr int kMaxViewpoints = 8;        // planner cap per replan
constexpr int kMaxSampledClusters = 48;  // largest clusters probed per replan
constexpr int kCovCadence = 8;           // key poses between uncertainty refreshes
constexpr double kNoiseFloorPos = 1e-3;  // m, factor noise floor
constexpr double kNoiseFloorYaw = 5e-4;  // rad

Eigen::Vector4d to_vec4(const std::array<double, 4>& a) {
  return {a[0], a[1], a[2], a[3]};
}

PoseXYZYaw clamp_into(const PoseXYZYaw& p, const VoxelGrid& grid) {
  const Eigen::Vector3d lo = grid.origin() + Eigen::Vector3d::Constant(1e-6);
  const Eigen::Vector3d hi = grid.origin() + grid.extent() - Eigen::Vector3d::Constant(1e-6);
  PoseXYZYaw out = p;
  out.position = p.position.cwiseMax(lo).cwiseMin(hi);
  return out;
}

/// Memoized A*-over-the-global-grid travel costs for one planning round.
/// Queries prefer the obstacle-inflated mask and fall back to the raw Free
/// mask so a robot hugging a wall can still plan; query endpoints are always
/// forced traversable (they are where the robot is or intends to stand).
class RouteCache {
 public:
  explicit RouteCache(const VoxelGrid& grid)
      : grid_(grid), inflated_(inflated_free_mask(grid)), raw_(free_mask(grid)) {}

  double cost(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const int ca = cell_id(a);
    const int cb = cell_id(b);
    const std::pair<int, int> key{std::min(ca, cb), std::max(ca, cb)};
    const auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const auto r = route(a, b);
    const double c = r ? r->cost : std::numeric_limits<double>::infinity();
    memo_.emplace(key, c);
    return c;
  }

  std::optional<AstarResult> route(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const Eigen::Vector3d ca = clamp_point(a);
    const Eigen::Vector3d cb = clamp_point(b);
    if (auto r = masked(inflated_, ca, cb)) return r;
    return masked(raw_, ca, cb);
  }

 private:
  Eigen::Vector3d clamp_point(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d lo = grid_.origin() + Eigen::Vector3d::Constant(1e-6);
    const Eigen::Vector3d hi = grid_.origin() + grid_.extent() - Eigen::Vector3d::Constant(1e-6);
    return p.cwiseMax(lo).cwiseMin(hi);
  }

  int cell_id(const Eigen::Vector3d& p) const {
    return grid_.linear(grid_.cell_of(clamp_point(p)));
  }

  std::optional<AstarResult> masked(std::vector<char>& mask, const Eigen::Vector3d& a,
                                    const Eigen::Vector3d& b) {
    const int ia = grid_.linear(grid_.cell_of(a));
    const int ib = grid_.linear(grid_.cell_of(b));
    const char keep_a = mask[ia];
    const char keep_b = mask[ib];
    mask[ia] = 1;
    mask[ib] = 1;
    auto r = astar_masked(grid_, mask, a, b);
    mask[ia] = keep_a;
    mask[ib] = keep_b;
    return r;
  }

  const VoxelGrid& grid_;
  std::vector<char> inflated_;
  std::vector<char> raw_;
  std::map<std::pair<int, int>, double> memo_;
};

class MissionRunner {
 public:
  MissionRunner(const WorldModel& world, const Config& cfg, std::uint64_t seed,
                const MissionOptions& opts)
      : world_(world),
        cfg_(cfg),
        opts_(opts),
        rng_(seed),
        graph_(graph_params(cfg)),
        global_(Eigen::Vector3d::Zero(), cfg.f_gr, world.grid_dims(cfg.f_gr),
                grid_params(cfg)),
        local_(world.start.position - local_extent(cfg) / 2, cfg.f_lr, local_dims(cfg),
               grid_params(cfg)),
        tracker_(cfg.f_sz),
        map_sensor_(SensorModel::mapping(cfg)),
        ig_sensor_(SensorModel::ig(cfg)) {
    log_.seed = seed;
  }

  MissionLog run() {
    cfg_.validate();
    world_.validate();

    robot_.true_pose = world_.start;
    robot_.vio_pose = world_.start;
    vio_at_key_ = robot_.vio_pose;
    graph_.add_first_pose(world_.start, to_vec4(cfg_.prior_noise), 0.0);
    refresh_uncertainty();
    initial_sweep();
    record_step();

    std::string status;
    while (true) {
      if (tracker_.empty()) {
        status = "complete";
        break;
      }
      if (robot_.traveled >= cfg_.mission_budget) {
        status = "budget_exhausted";
        break;
      }
      if (ticks_ >= kMaxTicks) {
        status = "deadlock";
        break;
      }
      const bool plan_done = next_idx_ >= plan_.size();
      const bool boundary_replan = at_boundary_ && opts_.replan_enabled &&
                                   !plan_.empty() && !plan_done && should_replan_now();
      if (need_plan_ || plan_done || boundary_replan) {
        if (plan_done && !need_plan_) replan_reason_ = "plan_done";
        if (const auto fail = replan()) {
          status = *fail;
          break;
        }
        continue;
      }
      at_boundary_ = false;
      execute_tick();
    }

    finish(status);
    return std::move(log_);
  }

 private:
  static SemanticGraph::Params graph_params(const Config& cfg) {
    SemanticGraph::Params p;
    p.sigma_t = cfg.sigma_t;
    p.sigma_psi = cfg.sigma_psi;
    p.g_da = cfg.g_da;
    p.lm_rel_tol = cfg.lm_rel_tol;
    p.lm_max_iters = cfg.lm_max_iters;
    return p;
  }

  static VoxelGrid::Params grid_params(const Config& cfg) {
    VoxelGrid::Params p;
    p.l_hit = cfg.l_hit;
    p.l_miss = cfg.l_miss;
    p.l_min = cfg.l_min;
    p.l_max = cfg.l_max;
    p.p_occ = cfg.p_occ;
    p.p_free = cfg.p_free;
    return p;
  }

  static Eigen::Vector3d local_extent(const Config& cfg) {
    return {cfg.f_lx, cfg.f_ly, cfg.f_lz};
  }

  static Eigen::Vector3i local_dims(const Config& cfg) {
    return {static_cast<int>(std::ceil(cfg.f_lx / cfg.f_lr)),
            static_cast<int>(std::ceil(cfg.f_ly / cfg.f_lr)),
            static_cast<int>(std::ceil(cfg.f_lz / cfg.f_lr))};
  }

  Eigen::Vector3d det_noise() const {
    return Eigen::Vector3d::Constant(std::max(cfg_.sigma_det, kNoiseFloorPos));
  }

  /// Robot pose in the map frame: the latest key-pose estimate advanced by
  /// the odometry accumulated since that key pose.
  PoseXYZYaw slam_pose() const {
    return compose(graph_.pose(graph_.latest_pose_id()).estimate,
                   relative(robot_.vio_pose, vio_at_key_));
  }

  void refresh_uncertainty() {
    const CovarianceSummary s = graph_.covariance_summary();
    avg_pose_unc_ = s.avg_pose_trace;
    avg_landmark_unc_ = s.avg_landmark_trace;
  }

  void push_event(const std::string& tag, nlohmann::json detail) {
    log_.events.push_back(
        {time_, static_cast<int>(log_.steps.size()), tag, std::move(detail)});
    pending_tags_.push_back(tag);
  }

  void record_step() {
    StepRecord r;
    r.time = time_;
    r.true_pose = robot_.true_pose;
    r.vio_pose = robot_.vio_pose;
    r.slam_pose = slam_pose();
    r.traveled = robot_.traveled;
    r.coverage = global_.coverage();
    r.avg_pose_unc = avg_pose_unc_;
    r.avg_landmark_unc = avg_landmark_unc_;
    r.events = std::move(pending_tags_);
    pending_tags_.clear();
    log_.steps.push_back(std::move(r));
  }

  // ── Sensing and mapping ───────────────────────────────────────────────────

  /// Depth rays at one ground-truth pose, expressed in its body frame.
  std::vector<Ray> cast_body_rays(const PoseXYZYaw& true_pose) const {
    std::vector<Ray> rays;
    const auto dirs = map_sensor_.body_dirs();
    rays.reserve(dirs.size());
    const Eigen::Matrix3d rot = true_pose.rotation();
    for (const Eigen::Vector3d& dir : dirs) {
      const Ray world_ray =
          world_.cast_sensor_ray(true_pose.position, rot * dir, map_sensor_.range);
      rays.push_back({true_pose.untransform(world_ray.endpoint), world_ray.is_hit});
    }
    return rays;
  }

  void integrate_at_estimates(const std::vector<Ray>& body_rays, double stop_yaw_offset) {
    PoseXYZYaw vio = robot_.vio_pose;
    vio.yaw = wrap_angle(vio.yaw + stop_yaw_offset);
    local_.recenter(vio.position);
    local_.integrate_scan(clamp_into(vio, local_), rays_in_world(body_rays, vio));

    PoseXYZYaw slam = clamp_into(slam_pose(), global_);
    slam.yaw = wrap_angle(slam.yaw + stop_yaw_offset);
    const UpdateBBox bbox = global_.integrate_scan(slam, rays_in_world(body_rays, slam));
    tracker_.update(global_, bbox);
  }

  /// Map from every stop of a full in-place yaw sweep (depth only; detection
  /// handling is the caller's business).
  void integrate_sweep() {
    for (int s = 0; s < cfg_.n_yaw_pano; ++s) {
      const double offset = 2.0 * std::numbers::pi * s / cfg_.n_yaw_pano;
      PoseXYZYaw stop = robot_.true_pose;
      stop.yaw = wrap_angle(stop.yaw + offset);
      integrate_at_estimates(cast_body_rays(stop), offset);
    }
  }

  /// Look around once before doing anything: map the surroundings and seed
  /// the graph with the objects visible from the start.
  void initial_sweep() {
    const auto dets = panorama(world_, robot_.true_pose, map_sensor_, cfg_.n_yaw_pano,
                               cfg_.sigma_det, rng_.stream("pano"));
    integrate_sweep();
    time_ += kPanoramaTime;
    for (const Detection& d : dets)
      graph_.add_landmark_observation(0, d.body_disp, d.label, det_noise());
    graph_.optimize();
    refresh_uncertainty();
  }

  /// One sensing cycle at the current pose: depth into both maps, detections
  /// into the key-pose policy.
  void sense_integrate_and_key() {
    const SenseResult sres = sense(world_, robot_.true_pose, map_sensor_,
                                   cfg_.sigma_det, rng_.stream("det"));
    local_.recenter(robot_.vio_pose.position);
    local_.integrate_scan(clamp_into(robot_.vio_pose, local_),
                          rays_in_world(sres.body_rays, robot_.vio_pose));
    const PoseXYZYaw slam = clamp_into(slam_pose(), global_);
    const UpdateBBox bbox =
        global_.integrate_scan(slam, rays_in_world(sres.body_rays, slam));
    tracker_.update(global_, bbox);
    maybe_key_pose(sres.detections);
  }

  // ── Graph bookkeeping ─────────────────────────────────────────────────────

  void maybe_key_pose(const std::vector<Detection>& dets) {
    const double dyaw =
        std::abs(wrap_angle(robot_.vio_pose.yaw - vio_at_key_.yaw));
    const bool want = vio_dist_since_key_ >= cfg_.key_dist || dyaw >= cfg_.key_yaw() ||
                      (!dets.empty() && vio_dist_since_key_ >= cfg_.key_det_dist);
    if (want) add_key_pose(dets);
  }

  void add_key_pose(const std::vector<Detection>& dets) {
    const double d = vio_dist_since_key_;
    Eigen::Vector4d noise;
    noise.head<3>().setConstant(std::max(cfg_.sigma_t * d, kNoiseFloorPos));
    noise[3] = std::max(cfg_.sigma_psi * d, kNoiseFloorYaw);
    const PoseId id =
        graph_.add_key_pose(relative(robot_.vio_pose, vio_at_key_), noise, time_);
    for (const Detection& det : dets)
      graph_.add_landmark_observation(id, det.body_disp, det.label, det_noise());
    // A pure odometry extension is already at its optimum; solving pays off
    // only when the key pose brings new landmark evidence.
    if (!dets.empty()) graph_.optimize();
    vio_at_key_ = robot_.vio_pose;
    vio_dist_since_key_ = 0;
    if (graph_.pose_count() % cov_cadence() == 0) refresh_uncertainty();
  }

  /// Dense marginal covariance is cubic in the pose count; long missions
  /// refresh the uncertainty summary less often.
  int cov_cadence() const { return graph_.pose_count() <= 256 ? kCovCadence : 64; }

  // ── Planning ──────────────────────────────────────────────────────────────

  bool should_replan_now() {
    ReplanState st;
    st.frontier_snapshot = frontier_snapshot_;
    st.executed_fraction =
        plan_.empty() ? 1.0 : static_cast<double>(executed_) / plan_.size();
    st.remaining_budget = cfg_.mission_budget - robot_.traveled;
    return should_replan(st, tracker_.frontier_cells(), cfg_.f_r1, cfg_.f_r2);
  }

  /// Rebuild viewpoints, solve the orienteering tour, refine with closure
  /// insertions. Returns the terminal status when no executable plan exists.
  std::optional<std::string> replan() {
    ++log_.replans;
    const PoseXYZYaw slam_now = slam_pose();
    RouteCache routes(global_);
    auto travel = [&routes](const PoseXYZYaw& a, const PoseXYZYaw& b) {
      return routes.cost(a.position, b.position);
    };

    SamplingParams sp;
    sp.n_pos = cfg_.n_pos;
    sp.ring_radii = cfg_.ring_radii;
    sp.n_yaw = cfg_.n_yaw;
    sp.ig_sensor = ig_sensor_;
    // Sampling cost scales with cluster count; when drift smear shatters the
    // frontier into many slivers, only the biggest clusters are worth a look.
    std::vector<const FrontierCluster*> pool;
    pool.reserve(tracker_.clusters().size());
    for (const FrontierCluster& cluster : tracker_.clusters()) pool.push_back(&cluster);
    if (static_cast<int>(pool.size()) > kMaxSampledClusters) {
      std::sort(pool.begin(), pool.end(),
                [](const FrontierCluster* a, const FrontierCluster* b) {
                  if (a->cells.size() != b->cells.size())
                    return a->cells.size() > b->cells.size();
                  return a->id < b->id;
                });
      pool.resize(kMaxSampledClusters);
    }
    std::vector<Viewpoint> vps;
    for (const FrontierCluster* cluster : pool) {
      if (auto vp = sample_viewpoint(global_, *cluster, sp, rng_.stream("vp")))
        vps.push_back(*vp);
    }
    std::erase_if(vps, [&](const Viewpoint& v) {
      return !std::isfinite(travel(slam_now, v.pose));
    });
    if (vps.empty()) return "deadlock";

    std::sort(vps.begin(), vps.end(), [](const Viewpoint& a, const Viewpoint& b) {
      if (a.ig != b.ig) return a.ig > b.ig;
      return a.cluster_id < b.cluster_id;
    });
    if (vps.size() > kMaxViewpoints) vps.resize(kMaxViewpoints);

    double nearest = std::numeric_limits<double>::infinity();
    std::vector<PoseXYZYaw> vp_poses;
    vp_poses.reserve(vps.size());
    for (const Viewpoint& v : vps) {
      vp_poses.push_back(v.pose);
      nearest = std::min(nearest, travel(slam_now, v.pose));
    }
    const double remaining = cfg_.mission_budget - robot_.traveled;
    const double budget =
        std::min(compute_budget(slam_now, vp_poses, travel, cfg_.f_B), remaining);
    if (!(budget > 0) || nearest > budget)
      return remaining < nearest ? "budget_exhausted" : "deadlock";

    const int n = static_cast<int>(vps.size());
    CopInstance inst;
    inst.start = slam_now;
    inst.budget = budget;
    inst.vertices.reserve(vps.size());
    for (const Viewpoint& v : vps)
      inst.vertices.push_back({v.cluster_id, v.ig, v.pose});
    inst.cost = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i) {
      inst.cost(0, i + 1) = inst.cost(i + 1, 0) = travel(slam_now, vps[i].pose);
      for (int j = i + 1; j < n; ++j)
        inst.cost(i + 1, j + 1) = inst.cost(j + 1, i + 1) =
            travel(vps[i].pose, vps[j].pose);
    }
    std::unordered_map<int, std::vector<int>> footprints;
    auto footprint_of = [&](const Viewpoint& v) -> const std::vector<int>& {
      auto it = footprints.find(v.cluster_id);
      if (it == footprints.end())
        it = footprints
                 .emplace(v.cluster_id,
                          viewpoint_footprint(global_, v.pose, ig_sensor_))
                 .first;
      return it->second;
    };
    inst.correlation = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        inst.correlation(i, j) = inst.correlation(j, i) =
            footprint_correlation(footprint_of(vps[i]), footprint_of(vps[j]));

    const Tour tour = solve(inst);
    std::vector<Viewpoint> ordered;
    ordered.reserve(tour.vertices.size());
    for (int idx : tour.vertices) ordered.push_back(vps[idx]);
    if (ordered.empty()) {
      // The greedy solver stops outright when its first pick busts the
      // budget, even though cheaper viewpoints fit; keep the mission moving
      // with the nearest affordable one (it exists: nearest <= budget here).
      int fallback = -1;
      double fallback_cost = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        const double c = travel(slam_now, vps[i].pose);
        if (c <= budget && c < fallback_cost) {
          fallback = i;
          fallback_cost = c;
        }
      }
      if (fallback >= 0) ordered.push_back(vps[fallback]);
    }

    std::vector<SlcCandidate> candidates;
    if (opts_.slc_enabled) {
      const auto refs = landmark_refs(graph_);
      for (const Submap& sm :
           cluster_submaps(refs, cfg_.eps_db, cfg_.db_min_pts, cfg_.f_cs)) {
        if (auto cand = select_viewpoint(graph_, sm, cfg_.f_sr))
          candidates.push_back(std::move(*cand));
      }
    }

    auto corr = [&](const Viewpoint& u, const Viewpoint& v) {
      return footprint_correlation(footprint_of(u), footprint_of(v));
    };
    plan_ = refine(slam_now, ordered, candidates, graph_, budget, travel, corr,
                   {cfg_.f_sc});
    if (plan_.empty())
      return remaining < nearest ? "budget_exhausted" : "deadlock";

    next_idx_ = 0;
    executed_ = 0;
    element_route_.reset();
    wp_idx_ = 0;
    blocked_streak_ = 0;
    frontier_snapshot_ = tracker_.frontier_cells();
    at_boundary_ = false;
    need_plan_ = false;

    nlohmann::json elements = nlohmann::json::array();
    for (const PathElement& e : plan_) {
      nlohmann::json je;
      je["kind"] = e.is_close_loop() ? "close_loop" : "explore";
      je["cost"] = e.cost;
      je["ig"] = e.ig;
      const PoseXYZYaw& g = e.goal();
      je["goal"] = {g.position.x(), g.position.y(), g.position.z(), g.yaw};
      if (e.is_close_loop())
        je["lc"] = e.close_loop().viewpoint;
      else
        je["cluster"] = e.explore().cluster_id;
      elements.push_back(std::move(je));
    }
    push_event("REPLAN", {{"reason", replan_reason_},
                          {"clusters", tracker_.clusters().size()},
                          {"viewpoints", vps.size()},
                          {"candidates", candidates.size()},
                          {"budget", budget},
                          {"tour", tour.vertices.size()},
                          {"plan", std::move(elements)}});
    replan_reason_ = "boundary";
    return std::nullopt;
  }

  // ── Execution ─────────────────────────────────────────────────────────────

  void abort_element(const char* reason) {
    need_plan_ = true;
    replan_reason_ = reason;
    element_route_.reset();
    blocked_streak_ = 0;
  }

  void execute_tick() {
    ++ticks_;
    const PathElement& elem = plan_[next_idx_];
    const PoseXYZYaw goal_map = elem.goal();
    const PoseXYZYaw slam_now = slam_pose();

    if (!element_route_) {
      RouteCache routes(global_);
      element_route_ = routes.route(slam_now.position, goal_map.position);
      wp_idx_ = 0;
      if (!element_route_) {
        abort_element("no_path");
        return;
      }
    }

    const auto& wps = element_route_->waypoints;
    while (wp_idx_ + 1 < wps.size() &&
           (wps[wp_idx_] - slam_now.position).norm() <= kWaypointTol)
      ++wp_idx_;
    const bool final_wp = wp_idx_ + 1 >= wps.size();
    const Eigen::Vector3d wp_map = wps[std::min(wp_idx_, wps.size() - 1)];

    if (final_wp && (goal_map.position - slam_now.position).norm() <= kArrivalTol) {
      const double dyaw = wrap_angle(goal_map.yaw - slam_now.yaw);
      if (std::abs(dyaw) > kYawTol) {
        turn_tick(dyaw);
        return;
      }
      complete_element();
      return;
    }
    drive_tick(final_wp ? goal_map.position : wp_map, slam_now);
  }

  void turn_tick(double dyaw) {
    PoseXYZYaw rel;
    rel.yaw = dyaw;
    step_motion(robot_, rel, cfg_.sigma_t, cfg_.sigma_psi, rng_.stream("odom"));
    time_ += std::abs(dyaw);  // 1 rad/s
    blocked_streak_ = 0;
    sense_integrate_and_key();
    record_step();
  }

  void drive_tick(const Eigen::Vector3d& wp_map, const PoseXYZYaw& slam_now) {
    PoseXYZYaw wp_pose;
    wp_pose.position = wp_map;
    wp_pose.yaw = slam_now.yaw;
    const Eigen::Vector3d target_v =
        drift_compensate(wp_pose, robot_.vio_pose, slam_now).position;
    const Eigen::Vector3d delta = target_v - robot_.vio_pose.position;
    const double dist = delta.norm();
    const double step = std::min(kTickLength, dist);
    const Eigen::Vector3d dirv = delta / dist;

    // Face the direction of travel when it has a horizontal component; hold
    // the current heading on (near-)vertical legs.
    double desired_yaw = robot_.vio_pose.yaw;
    if (std::hypot(dirv.x(), dirv.y()) > 0.2)
      desired_yaw = std::atan2(dirv.y(), dirv.x());

    PoseXYZYaw target;
    target.position = robot_.vio_pose.position + step * dirv;
    target.yaw = desired_yaw;
    PoseXYZYaw rel = relative(target, robot_.vio_pose);

    // Ground-truth bumper: clip the commanded translation short of whatever
    // surface it would cross, and feed the contact back into the map as a
    // single depth return so the planner learns about it.
    const Eigen::Vector3d true_delta = robot_.true_pose.rotation() * rel.position;
    const double true_len = true_delta.norm();
    if (true_len > 0) {
      const Eigen::Vector3d dir = true_delta / true_len;
      if (const auto hit = world_.raycast(robot_.true_pose.position, dir,
                                          true_len + kBumperMargin)) {
        const double allowed = std::max(0.0, hit->distance - kBumperMargin);
        if (allowed < true_len) {
          const Ray contact =
              world_.cast_sensor_ray(robot_.true_pose.position, dir, hit->distance + 1.0);
          const Ray body{robot_.true_pose.untransform(contact.endpoint), contact.is_hit};
          integrate_at_estimates({body}, 0.0);
          rel.position *= allowed / true_len;
        }
      }
    }

    const double d = rel.position.norm();
    const bool translates = d > 1e-6;
    const bool rotates = std::abs(rel.yaw) > kYawTol;
    if (!translates && !rotates) {
      ++blocked_streak_;
      time_ += kBlockedTime;
      sense_integrate_and_key();
      record_step();
      if (blocked_streak_ >= kBlockedLimit) abort_element("blocked");
      return;
    }
    if (!translates) ++blocked_streak_;
    else blocked_streak_ = 0;

    const PoseXYZYaw inc =
        step_motion(robot_, rel, cfg_.sigma_t, cfg_.sigma_psi, rng_.stream("odom"));
    vio_dist_since_key_ += inc.position.norm();
    time_ += d + std::abs(rel.yaw);  // 1 m/s, 1 rad/s
    sense_integrate_and_key();
    record_step();
    if (blocked_streak_ >= kBlockedLimit) abort_element("blocked");
  }

  void complete_element() {
    const PathElement& elem = plan_[next_idx_];
    if (elem.is_close_loop()) {
      run_panorama_and_slc(elem.close_loop());
    } else {
      push_event("VP_REACHED",
                 {{"cluster", elem.explore().cluster_id}, {"ig", elem.ig}});
    }
    ++executed_;
    ++next_idx_;
    element_route_.reset();
    wp_idx_ = 0;
    at_boundary_ = true;
    record_step();
  }

  void run_panorama_and_slc(const SlcCandidate& cand) {
    const auto dets = panorama(world_, robot_.true_pose, map_sensor_, cfg_.n_yaw_pano,
                               cfg_.sigma_det, rng_.stream("pano"));
    integrate_sweep();
    time_ += kPanoramaTime;

    // The sweep gets its own key pose so the alignment constrains the pose
    // the robot actually observed from.
    add_key_pose({});
    const PoseId current = graph_.latest_pose_id();

    std::vector<LabeledPoint> lps;
    lps.reserve(dets.size());
    for (const Detection& d : dets) lps.push_back({d.body_disp, d.label});
    const auto res =
        detect_loop_closure(graph_, lps, cfg_.f_sr, cfg_.k_min(), cfg_.tau_slc);
    if (res) {
      push_event("SLC_DETECTED", {{"k", res->k},
                                  {"residual", res->residual},
                                  {"matches", res->correspondences.size()}});
      ++log_.slc_detected;
      graph_.apply_slc(current, cand.viewpoint, res->as_pose(), to_vec4(cfg_.slc_noise));
      push_event("SLC_APPLIED", {{"lc", cand.viewpoint}, {"current", current}});
      ++log_.slc_applied;
    }
    // Feed the panorama's observations in after any correction so data
    // association happens against the corrected estimates.
    for (const Detection& d : dets)
      graph_.add_landmark_observation(current, d.body_disp, d.label, det_noise());
    graph_.optimize();
    refresh_uncertainty();
  }

  void finish(const std::string& status) {
    graph_.optimize();
    refresh_uncertainty();
    log_.status = status;
    record_step();

    const PoseXYZYaw slam_now = slam_pose();
    log_.traveled = robot_.traveled;
    log_.coverage = global_.coverage();
    log_.final_vio_pos_err =
        (robot_.vio_pose.position - robot_.true_pose.position).norm();
    log_.final_slam_pos_err = (slam_now.position - robot_.true_pose.position).norm();
    log_.final_vio_yaw_err =
        std::abs(wrap_angle(robot_.vio_pose.yaw - robot_.true_pose.yaw));
    log_.final_slam_yaw_err = std::abs(wrap_angle(slam_now.yaw - robot_.true_pose.yaw));
    log_.final_avg_pose_unc = avg_pose_unc_;
    log_.final_avg_landmark_unc = avg_landmark_unc_;
    log_.key_poses = graph_.pose_count();
    log_.landmarks = graph_.landmark_count();
    log_.final_map = global_.dump();
    log_.final_graph = graph_.dump();
  }

  // ── State ─────────────────────────────────────────────────────────────────

  WorldModel world_;
  Config cfg_;
  MissionOptions opts_;
  RngStream rng_;
  SemanticGraph graph_;
  VoxelGrid global_;
  VoxelGrid local_;
  FrontierTracker tracker_;
  SensorModel map_sensor_;
  SensorModel ig_sensor_;

  RobotState robot_;
  PoseXYZYaw vio_at_key_;        // vio pose when the latest key pose was added
  double vio_dist_since_key_ = 0;  // m, odometry-measured
  double time_ = 0;                // s
  int ticks_ = 0;

  std::vector<PathElement> plan_;
  size_t next_idx_ = 0;
  int executed_ = 0;
  std::vector<int> frontier_snapshot_;
  std::optional<AstarResult> element_route_;
  size_t wp_idx_ = 0;
  int blocked_streak_ = 0;
  bool need_plan_ = true;
  bool at_boundary_ = false;
  std::string replan_reason_ = "initial";

  double avg_pose_unc_ = 0;
  double avg_landmark_unc_ = 0;
  std::vector<std::string> pending_tags_;
  MissionLog log_;
};

void append_number(std::string& row, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  row += buf;
  row += ',';
}

void append_pose(std::string& row, const PoseXYZYaw& p) {
  append_number(row, p.position.x());
  append_number(row, p.position.y());
  append_number(row, p.position.z());
  append_number(row, p.yaw);
}

}  // namespace

MissionLog run_mission(const WorldModel& world, const Config& cfg, std::uint64_t seed,
                       const MissionOptions& opts) {
  return MissionRunner(world, cfg, seed, opts).run();
}

void write_metrics_csv(const MissionLog& log, std::ostream& out) {
  out << "# actslam metrics v1\n"
      << "time,true_x,true_y,true_z,true_yaw,vio_x,vio_y,vio_z,vio_yaw,"
         "slam_x,slam_y,slam_z,slam_yaw,traveled,coverage,avg_pose_unc,"
         "avg_landmark_unc,events\n";
  std::string row;
  for (const StepRecord& s : log.steps) {
    row.clear();
    append_number(row, s.time);
    append_pose(row, s.true_pose);
    append_pose(row, s.vio_pose);
    append_pose(row, s.slam_pose);
    append_number(row, s.traveled);
    append_number(row, s.coverage);
    append_number(row, s.avg_pose_unc);
    append_number(row, s.avg_landmark_unc);
    for (size_t i = 0; i < s.events.size(); ++i) {
      if (i) row += ';';
      row += s.events[i];
    }
    row += '\n';
    out << row;
  }
}

void write_metrics_csv(const MissionLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_metrics_csv(log, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json events_json(const MissionLog& log) {
  nlohmann::json j;
  j["version"] = "actslam events v1";
  j["seed"] = log.seed;
  j["status"] = log.status;
  j["summary"] = {{"traveled", log.traveled},
                  {"coverage", log.coverage},
                  {"final_vio_pos_err", log.final_vio_pos_err},
                  {"final_slam_pos_err", log.final_slam_pos_err},
                  {"final_vio_yaw_err", log.final_vio_yaw_err},
                  {"final_slam_yaw_err", log.final_slam_yaw_err},
                  {"final_avg_pose_unc", log.final_avg_pose_unc},
                  {"final_avg_landmark_unc", log.final_avg_landmark_unc},
                  {"key_poses", log.key_poses},
                  {"landmarks", log.landmarks},
                  {"replans", log.replans},
                  {"slc_detected", log.slc_detected},
                  {"slc_applied", log.slc_applied}};
  nlohmann::json events = nlohmann::json::array();
  for (const MissionEvent& e : log.events) {
    events.push_back(
        {{"time", e.time}, {"step", e.step}, {"tag", e.tag}, {"detail", e.detail}});
  }
  j["events"] = std::move(events);
  return j;
}

}  // namespace actslam
