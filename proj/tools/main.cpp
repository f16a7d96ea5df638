// actsim: mission runner, SLC ablation driver, and oracle self-checks for
// the active metric-semantic exploration library.

#include "actslam/config.hpp"
#include "actslam/mission.hpp"
#include "actslam/world.hpp"

#include "suites.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using actslam::Config;
using actslam::MissionLog;
using actslam::MissionOptions;
using actslam::WorldModel;

constexpr int kExitFailure = 1;  // refusal or oracle mismatch
constexpr int kExitUsage = 2;    // missing/unparseable inputs, unknown names

struct RunSpec {
  std::string world_path;
  std::string config_path;
  std::uint64_t seed = 1;
  bool no_slc = false;
  bool no_replan = false;
  std::string out_dir;
  bool force = false;
};

/// Load world and config, translating missing files and parse errors into
/// a usage-style exit with a message that names the offending path.
int load_inputs(const RunSpec& spec, WorldModel& world, Config& cfg) {
  if (!fs::exists(spec.world_path)) {
    std::cerr << "error: world file not found: " << spec.world_path << "\n";
    return kExitUsage;
  }
  if (!fs::exists(spec.config_path)) {
    std::cerr << "error: config file not found: " << spec.config_path << "\n";
    return kExitUsage;
  }
  try {
    world = WorldModel::load(spec.world_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << spec.world_path << ": " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    cfg = Config::load(spec.config_path);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << spec.config_path << ": " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}

int refuse_overwrite(const fs::path& dir, const std::vector<std::string>& names,
                     bool force) {
  if (force) return 0;
  for (const std::string& name : names) {
    if (fs::exists(dir / name)) {
      std::cerr << "error: " << (dir / name).string()
                << " already exists; pass --force to overwrite\n";
      return kExitFailure;
    }
  }
  return 0;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

void print_summary(const MissionLog& log) {
  std::printf("status               %s\n", log.status.c_str());
  std::printf("trajectory length    %.2f m\n", log.traveled);
  std::printf("coverage             %.4f\n", log.coverage);
  std::printf("position error vio   %.4f m\n", log.final_vio_pos_err);
  std::printf("position error slam  %.4f m\n", log.final_slam_pos_err);
  std::printf("yaw error vio        %.5f rad\n", log.final_vio_yaw_err);
  std::printf("yaw error slam       %.5f rad\n", log.final_slam_yaw_err);
  std::printf("avg pose unc         %.6f\n", log.final_avg_pose_unc);
  std::printf("avg landmark unc     %.6f\n", log.final_avg_landmark_unc);
  std::printf("key poses            %d\n", log.key_poses);
  std::printf("landmarks            %d\n", log.landmarks);
  std::printf("replans              %d\n", log.replans);
  std::printf("slc detected/applied %d/%d\n", log.slc_detected, log.slc_applied);
}

int cmd_run(const RunSpec& spec) {
  WorldModel world;
  Config cfg;
  if (const int rc = load_inputs(spec, world, cfg)) return rc;

  const fs::path dir(spec.out_dir);
  fs::create_directories(dir);
  const std::vector<std::string> outputs = {"metrics.csv", "events.json", "map.json",
                                            "graph.json"};
  if (const int rc = refuse_overwrite(dir, outputs, spec.force)) return rc;

  MissionOptions opts;
  opts.slc_enabled = !spec.no_slc;
  opts.replan_enabled = !spec.no_replan;
  const MissionLog log = actslam::run_mission(world, cfg, spec.seed, opts);

  actslam::write_metrics_csv(log, (dir / "metrics.csv").string());
  write_json(dir / "events.json", actslam::events_json(log));
  write_json(dir / "map.json", log.final_map);
  write_json(dir / "graph.json", log.final_graph);

  print_summary(log);
  std::printf("outputs written to   %s\n", dir.string().c_str());
  return 0;
}

/// One seed's on/off comparison row.
struct AblationRow {
  std::uint64_t seed = 0;
  double pose_unc_on = 0, pose_unc_off = 0;
  double landmark_unc_on = 0, landmark_unc_off = 0;
  double pos_err_on = 0, pos_err_off = 0;

  static double reduction(double off, double on) {
    return off > 0 ? (off - on) / off : 0.0;
  }
  double pose_unc_reduction() const { return reduction(pose_unc_off, pose_unc_on); }
  double landmark_unc_reduction() const {
    return reduction(landmark_unc_off, landmark_unc_on);
  }
  double pos_err_reduction() const { return reduction(pos_err_off, pos_err_on); }
};

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_ablate(const RunSpec& spec, const std::vector<std::uint64_t>& seeds) {
  WorldModel world;
  Config cfg;
  if (const int rc = load_inputs(spec, world, cfg)) return rc;

  const fs::path dir(spec.out_dir);
  fs::create_directories(dir);
  if (const int rc = refuse_overwrite(dir, {"ablation.csv"}, spec.force)) return rc;

  std::vector<AblationRow> rows;
  for (const std::uint64_t seed : seeds) {
    MissionOptions on;
    MissionOptions off;
    off.slc_enabled = false;
    const MissionLog log_on = actslam::run_mission(world, cfg, seed, on);
    const MissionLog log_off = actslam::run_mission(world, cfg, seed, off);
    AblationRow row;
    row.seed = seed;
    row.pose_unc_on = log_on.final_avg_pose_unc;
    row.pose_unc_off = log_off.final_avg_pose_unc;
    row.landmark_unc_on = log_on.final_avg_landmark_unc;
    row.landmark_unc_off = log_off.final_avg_landmark_unc;
    row.pos_err_on = log_on.final_slam_pos_err;
    row.pos_err_off = log_off.final_slam_pos_err;
    rows.push_back(row);
    std::printf("seed %llu: pose unc %.6f -> %.6f, landmark unc %.6f -> %.6f, "
                "pos err %.4f -> %.4f\n",
                static_cast<unsigned long long>(seed), row.pose_unc_off,
                row.pose_unc_on, row.landmark_unc_off, row.landmark_unc_on,
                row.pos_err_off, row.pos_err_on);
  }

  std::ostringstream csv;
  csv << "# ablation table v1: slc off vs on per seed; reductions are "
         "(off - on) / off\n";
  csv << "seed,pose_unc_off,pose_unc_on,pose_unc_reduction,"
         "landmark_unc_off,landmark_unc_on,landmark_unc_reduction,"
         "pos_err_off,pos_err_on,pos_err_reduction\n";
  csv.precision(17);
  std::vector<double> pose_reds, landmark_reds, err_reds;
  for (const AblationRow& r : rows) {
    csv << r.seed << ',' << r.pose_unc_off << ',' << r.pose_unc_on << ','
        << r.pose_unc_reduction() << ',' << r.landmark_unc_off << ','
        << r.landmark_unc_on << ',' << r.landmark_unc_reduction() << ','
        << r.pos_err_off << ',' << r.pos_err_on << ',' << r.pos_err_reduction()
        << '\n';
    pose_reds.push_back(r.pose_unc_reduction());
    landmark_reds.push_back(r.landmark_unc_reduction());
    err_reds.push_back(r.pos_err_reduction());
  }
  csv << "median," << ",,," << median(pose_reds) << ",,," << median(landmark_reds)
      << ",,," << median(err_reds) << '\n';
  write_text(dir / "ablation.csv", csv.str());

  std::printf("median reductions: pose unc %.1f%%, landmark unc %.1f%%, "
              "pos err %.1f%%\n",
              100 * median(pose_reds), 100 * median(landmark_reds),
              100 * median(err_reds));
  std::printf("table written to %s\n", (dir / "ablation.csv").string().c_str());
  return 0;
}

int cmd_oracle(const std::string& suite) {
  using namespace actslam::oracles;
  SuiteReport report;
  if (suite == "align") {
    report = suite_align();
  } else if (suite == "heldkarp") {
    report = suite_heldkarp();
  } else if (suite == "cop") {
    report = suite_cop();
  } else if (suite == "covariance") {
    report = suite_covariance();
  } else if (suite == "frontier") {
    const fs::path world_path = fs::path(ACTSLAM_WORLDS_DIR) / "single_room.json";
    report = suite_frontier(WorldModel::load(world_path.string()));
  } else if (suite == "astar") {
    report = suite_astar();
  } else if (suite == "dbscan") {
    report = suite_dbscan();
  } else {
    std::cerr << "error: unknown oracle suite '" << suite
              << "' (expected align, heldkarp, cop, covariance, frontier, "
                 "astar, or dbscan)\n";
    return kExitUsage;
  }
  std::printf("%s: %d checks, %d failures\n", report.name.c_str(), report.checks,
              report.failures);
  for (const std::string& note : report.notes) {
    std::printf("  %s\n", note.c_str());
  }
  return report.ok() ? 0 : kExitFailure;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"actsim: active metric-semantic exploration simulator"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string seeds_csv;
  std::string suite;

  CLI::App* run = app.add_subcommand("run", "run one mission and write its logs");
  run->add_option("--world", spec.world_path, "world JSON file")->required();
  run->add_option("--config", spec.config_path, "config JSON file")->required();
  run->add_option("--seed", spec.seed, "mission seed");
  run->add_flag("--no-slc", spec.no_slc, "disable loop closures");
  run->add_flag("--no-replan", spec.no_replan, "stop after the initial plan");
  run->add_option("--out", spec.out_dir, "output directory")->required();
  run->add_flag("--force", spec.force, "overwrite existing outputs");

  CLI::App* ablate =
      app.add_subcommand("ablate", "compare loop closures on vs off over seeds");
  ablate->add_option("--world", spec.world_path, "world JSON file")->required();
  ablate->add_option("--config", spec.config_path, "config JSON file")->required();
  ablate->add_option("--seeds", seeds_csv, "comma-separated seed list")->required();
  ablate->add_option("--out", spec.out_dir, "output directory")->required();
  ablate->add_flag("--force", spec.force, "overwrite existing outputs");

  CLI::App* oracle =
      app.add_subcommand("oracle", "cross-check one implementation against its "
                                   "brute-force reference");
  oracle->add_option("suite", suite,
                     "align | heldkarp | cop | covariance | frontier | astar | dbscan")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(spec);
    if (ablate->parsed()) {
      const std::vector<std::uint64_t> seeds = parse_seeds(seeds_csv);
      if (seeds.empty()) {
        std::cerr << "error: --seeds needs at least one seed\n";
        return kExitUsage;
      }
      return cmd_ablate(spec, seeds);
    }
    if (oracle->parsed()) return cmd_oracle(suite);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
