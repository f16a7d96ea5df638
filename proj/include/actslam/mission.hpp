#pragma once

#include "actslam/config.hpp"
#include "actslam/pose.hpp"
#include "actslam/world.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace actslam {

/// Ablation switches for a mission run.
struct MissionOptions {
  bool slc_enabled = true;
  bool replan_enabled = true;
};

/// One logged simulation step: poses in their native frames (true in world,
/// vio in odometry, slam in map), cumulative metrics, and the event tags that
/// fired on this step.
struct StepRecord {
  double time = 0;      // s
  PoseXYZYaw true_pose;
  PoseXYZYaw vio_pose;
  PoseXYZYaw slam_pose;
  double traveled = 0;          // m, ground-truth arc length
  double coverage = 0;          // fraction of global-map cells touched
  double avg_pose_unc = 0;      // mean pose marginal trace
  double avg_landmark_unc = 0;  // mean landmark marginal trace
  std::vector<std::string> events;  // REPLAN, VP_REACHED, SLC_DETECTED, SLC_APPLIED
};

/// A structured mission event with free-form detail for post-hoc analysis.
struct MissionEvent {
  double time = 0;  // s
  int step = 0;     // index into MissionLog::steps
  std::string tag;
  nlohmann::json detail;
};

/// Complete record of one mission: per-step metrics, structured events,
/// terminal status, summary numbers, and final map/graph dumps.
struct MissionLog {
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<MissionEvent> events;
  std::string status;  // "complete" | "budget_exhausted" | "deadlock"

  double traveled = 0;            // m
  double coverage = 0;            // final global coverage fraction
  double final_vio_pos_err = 0;   // m, |vio - true| at mission end
  double final_slam_pos_err = 0;  // m, |slam - true| at mission end
  double final_vio_yaw_err = 0;   // rad
  double final_slam_yaw_err = 0;  // rad
  double final_avg_pose_unc = 0;
  double final_avg_landmark_unc = 0;
  int key_poses = 0;
  int landmarks = 0;
  int replans = 0;
  int slc_detected = 0;
  int slc_applied = 0;

  nlohmann::json final_map;
  nlohmann::json final_graph;
};

/// Run one deterministic mission: explore the world until no frontiers
/// remain, the travel budget runs out, or the planner can reach nothing.
/// Identical (world, config, seed, options) produce identical logs.
MissionLog run_mission(const WorldModel& world, const Config& cfg, std::uint64_t seed,
                       const MissionOptions& opts = {});

/// Per-step metrics as versioned CSV (one row per StepRecord, doubles at
/// full round-trip precision, event tags ';'-joined in the last column).
void write_metrics_csv(const MissionLog& log, std::ostream& out);
void write_metrics_csv(const MissionLog& log, const std::string& path);

/// Status, summary numbers, and the structured event list.
nlohmann::json events_json(const MissionLog& log);

}  // namespace actslam
