#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace actslam {

/// All mission tunables with their defaults. Field names follow the planner
/// parameter naming used throughout the project (f_* knobs), units in
/// comments. Loadable from JSON; unknown keys are rejected so typos fail
/// loudly instead of silently running defaults.
struct Config {
  // ── Replanning triggers ────────────────────────────────────────────────
  double f_r1 = 0.15;  // fraction of frontier change that forces a replan
  double f_r2 = 0.10;  // executed fraction of the refined path that forces a replan

  // ── Frontiers and sensing ──────────────────────────────────────────────
  double f_sz = 1.2;  // m, max frontier-cluster extent before splitting
  double f_sr = 5.0;  // m, sensing range
  double f_sc = 6.0;  // dimensionless scale applied to loop-closure IG in refinement
  int f_cs = 4;       // min landmarks for a loop-closure submap

  // ── Maps ───────────────────────────────────────────────────────────────
  double f_gr = 0.25;  // m, global map resolution
  double f_lr = 0.1;   // m, local map resolution
  double f_lx = 15.0;  // m, local map x extent
  double f_ly = 15.0;  // m, local map y extent
  double f_lz = 4.0;   // m, local map z extent

  // ── Planning budget ────────────────────────────────────────────────────
  double f_B = 3.0;            // budget = f_B * mean cost to nearest viewpoints
  double mission_budget = 400.0;  // m, total travel allowed per mission

  // ── Log-odds occupancy model ───────────────────────────────────────────
  double l_hit = std::log(0.7 / 0.3);   // log-odds increment for a hit
  double l_miss = std::log(0.4 / 0.6);  // log-odds increment for a miss
  double l_min = -2.0;                  // clamp floor
  double l_max = 3.5;                   // clamp ceiling
  double p_occ = 0.65;   // probability above which a cell is Occupied
  double p_free = 0.35;  // probability below which a cell is Free

  // ── Depth sensor model ─────────────────────────────────────────────────
  double fov_h_deg = 87.0;  // horizontal field of view
  double fov_v_deg = 58.0;  // vertical field of view
  int n_rays_h = 64;        // mapping rays across the horizontal FoV
  int n_rays_v = 48;        // mapping rays across the vertical FoV
  int ig_rays_h = 16;       // coarsened rays for IG counting
  int ig_rays_v = 8;

  // ── Viewpoint sampling ─────────────────────────────────────────────────
  int n_pos = 12;                              // candidate positions per cluster
  std::vector<double> ring_radii = {1.0, 1.5};  // m, sampling rings around centroid
  int n_yaw = 8;                               // yaw candidates per position

  // ── Noise and association ──────────────────────────────────────────────
  double sigma_t = 0.05;    // m odometry noise per meter traveled, per axis
  double sigma_psi = 0.01;  // rad yaw noise per meter traveled
  double sigma_det = 0.1;   // m detection noise per axis
  double g_da = 0.75;       // m, landmark data-association gate
  std::array<double, 4> prior_noise = {0.01, 0.01, 0.01, 0.005};  // anchor stds
  std::array<double, 4> slc_noise = {0.05, 0.05, 0.05, 0.01};     // loop-closure stds

  // ── Key-pose insertion policy ──────────────────────────────────────────
  double key_dist = 0.5;      // m translation since last key pose
  double key_yaw_deg = 30.0;  // deg yaw change since last key pose
  double key_det_dist = 0.2;  // m travel with a detection present

  // ── Loop-closure search ────────────────────────────────────────────────
  double eps_db = 4.0;    // m, submap clustering radius
  int db_min_pts = 1;     // submap clustering density threshold
  double tau_slc = 0.05;  // m^2, mean-squared alignment acceptance threshold
  int n_yaw_pano = 12;    // panorama yaw stops

  // ── Optimizer ──────────────────────────────────────────────────────────
  double lm_rel_tol = 1e-9;  // relative cost-decrease stopping threshold
  int lm_max_iters = 100;

  /// Min correspondences accepted by alignment: 3 points fix (t, psi)
  /// uniquely, and one landmark fewer than a full submap may still match.
  int k_min() const { return std::max(3, f_cs - 1); }

  double fov_h() const { return fov_h_deg * kDegToRad; }
  double fov_v() const { return fov_v_deg * kDegToRad; }
  double key_yaw() const { return key_yaw_deg * kDegToRad; }

  /// Throws std::invalid_argument when an invariant is violated
  /// (non-positive lengths, fractions outside (0,1), f_cs < 3, ...).
  void validate() const;

  /// Parse from a JSON file. Missing keys keep defaults; unknown keys throw.
  static Config load(const std::string& path);
  /// Parse from a JSON string (same rules as load).
  static Config parse(const std::string& json_text);

 private:
  static constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
};

}  // namespace actslam
