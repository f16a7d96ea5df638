#pragma once

#include "actslam/pose.hpp"

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace actslam {

using PoseId = int;
using LandmarkId = int;

/// One measurement constraint. Pose-pose factors (prior, odometry, loop
/// closure) have 4-dimensional residuals; range-bearing factors constrain a
/// pose against a landmark with a 3-dimensional body-frame displacement
/// residual z - R(psi_i)^T (l - p_i).
struct Factor {
  enum class Type { kPrior, kOdometry, kRangeBearing, kLoopClosure };

  Type type = Type::kPrior;
  int i = -1;  // pose id
  int j = -1;  // second pose id (odometry/loop closure) or landmark id
  PoseXYZYaw pose_meas;                                   // pose-pose measurement
  Eigen::Vector3d point_meas = Eigen::Vector3d::Zero();   // body-frame displacement
  Eigen::Vector4d pose_noise = Eigen::Vector4d::Ones();   // stds (x,y,z,yaw)
  Eigen::Vector3d point_noise = Eigen::Vector3d::Ones();  // stds (x,y,z)
  bool is_virtual = false;  // prediction-only factor, never persisted

  int residual_dim() const { return type == Type::kRangeBearing ? 3 : 4; }
};

struct PoseNode {
  PoseXYZYaw estimate;
  double timestamp = 0;  // s, insertion time (drives oldest-pose selection)
};

struct LandmarkNode {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::string label;
  double first_seen = 0;  // s
};

struct CovarianceSummary {
  double total_trace = 0;         // sum of all node marginal traces
  double avg_pose_trace = 0;      // mean over pose nodes
  double avg_landmark_trace = 0;  // mean over landmark nodes (0 when none)
};

struct OptimizeReport {
  bool converged = false;
  bool failed = false;  // singular normal equations; estimates untouched
  int iterations = 0;   // accepted steps
  double initial_cost = 0;
  double final_cost = 0;
};

/// Metric-semantic factor graph over 4-DoF poses and 3D landmark centroids,
/// with batch Levenberg-Marquardt optimization, dense marginal covariance,
/// and virtual-factor information-gain prediction. Copyable: prediction may
/// run on snapshots.
class SemanticGraph {
 public:
  struct Params {
    double sigma_t = 0.05;    // m odometry noise per meter, scales virtual factors
    double sigma_psi = 0.01;  // rad per meter
    double g_da = 0.75;       // m, landmark association gate
    double lm_rel_tol = 1e-9;
    int lm_max_iters = 100;
  };

  SemanticGraph() : SemanticGraph(Params{}) {}
  explicit SemanticGraph(const Params& params) : params_(params) {}

  // ── Construction ────────────────────────────────────────────────────────
  /// First pose with its gauge-fixing prior. Must be called exactly once,
  /// before any other node.
  PoseId add_first_pose(const PoseXYZYaw& pose, const Eigen::Vector4d& prior_noise,
                        double timestamp = 0);
  /// New pose initialized by composing the previous pose estimate with
  /// vio_relative; adds the odometry factor. Noise entries must be > 0.
  PoseId add_key_pose(const PoseXYZYaw& vio_relative, const Eigen::Vector4d& noise,
                      double timestamp = 0);
  /// Project a body-frame detection through the pose estimate; associate to
  /// the nearest same-label landmark within the gate or create a new one;
  /// add the range-bearing factor. Returns the landmark id.
  LandmarkId add_landmark_observation(PoseId pose_id, const Eigen::Vector3d& body_disp,
                                      const std::string& label,
                                      const Eigen::Vector3d& noise);
  /// Loop-closure factor carrying the pose of `current` expressed in
  /// `lc`'s frame. Does not optimize.
  void add_loop_closure(PoseId lc, PoseId current, const PoseXYZYaw& measured,
                        const Eigen::Vector4d& noise);

  // Low-level graph assembly (synthetic fixtures, reference solvers): insert
  // nodes without constraints, or a fully specified factor. Indices and noise
  // are validated; structural soundness is the caller's problem.
  PoseId append_pose(const PoseXYZYaw& estimate, double timestamp = 0);
  LandmarkId append_landmark(const Eigen::Vector3d& position, const std::string& label,
                             double first_seen = 0);
  void add_factor(const Factor& factor);

  // ── Estimation ──────────────────────────────────────────────────────────
  /// Batch Levenberg-Marquardt on the stacked whitened residuals. Cost never
  /// increases across accepted steps; on singular normal equations the
  /// report has failed=true and estimates are untouched.
  OptimizeReport optimize();
  /// Sum of squared whitened residuals at the current estimates.
  double cost() const;

  // ── Covariance and information gain ─────────────────────────────────────
  /// Dense inverse of the information matrix at the current linearization.
  /// Throws std::runtime_error when not positive definite (under-constrained).
  Eigen::MatrixXd covariance() const;
  double covariance_trace() const;
  CovarianceSummary covariance_summary() const;
  /// Trace reduction from a hypothetical loop-closure revisit of `lc` from
  /// `current` after traveling `travel_distance` meters. Leaves the graph
  /// bit-identical. Equivalent to appending the virtual odometry factor,
  /// re-deriving the covariance trace, and removing it.
  double predict_slc_ig(PoseId current, PoseId lc, double travel_distance);
  /// Append the real loop-closure factor derived from an accepted alignment
  /// pose (t, psi) of `current`, then optimize.
  void apply_slc(PoseId current, PoseId lc, const PoseXYZYaw& aligned_pose,
                 const Eigen::Vector4d& noise);

  // ── Access ──────────────────────────────────────────────────────────────
  int pose_count() const { return static_cast<int>(poses_.size()); }
  int landmark_count() const { return static_cast<int>(landmarks_.size()); }
  const PoseNode& pose(PoseId id) const { return poses_.at(id); }
  const LandmarkNode& landmark(LandmarkId id) const { return landmarks_.at(id); }
  PoseId latest_pose_id() const { return pose_count() - 1; }
  const std::vector<Factor>& factors() const { return factors_; }
  const Params& params() const { return params_; }
  bool has_loop_closure() const;

  /// JSON dump of nodes and factors for post-hoc inspection.
  nlohmann::json dump() const;

  // ── Linearization access (finite-difference checks, oracles) ────────────
  std::vector<PoseXYZYaw> pose_states() const;
  std::vector<Eigen::Vector3d> landmark_states() const;
  /// Stacked whitened residuals at arbitrary states (factor order, fixed
  /// row layout).
  Eigen::VectorXd residuals_at(const std::vector<PoseXYZYaw>& poses,
                               const std::vector<Eigen::Vector3d>& landmarks) const;
  /// Dense whitened Jacobian at arbitrary states, rows matching residuals_at.
  Eigen::MatrixXd jacobian_at(const std::vector<PoseXYZYaw>& poses,
                              const std::vector<Eigen::Vector3d>& landmarks) const;

 private:
  friend class SlcIgSession;

  int state_dim() const { return 4 * pose_count() + 3 * landmark_count(); }
  int pose_offset(PoseId id) const { return 4 * id; }
  int landmark_offset(LandmarkId id) const { return 4 * pose_count() + 3 * id; }
  /// Information matrix H = J^T J over whitened residuals at given states.
  Eigen::MatrixXd information_at(const std::vector<PoseXYZYaw>& poses,
                                 const std::vector<Eigen::Vector3d>& landmarks) const;
  /// H and gradient g = J^T r accumulated factor-by-factor.
  void normal_equations(const std::vector<PoseXYZYaw>& poses,
                        const std::vector<Eigen::Vector3d>& landmarks,
                        Eigen::MatrixXd& h, Eigen::VectorXd& g) const;
  Factor make_virtual_factor(PoseId current, PoseId lc, double travel_distance) const;

  Params params_;
  std::vector<PoseNode> poses_;
  std::vector<LandmarkNode> landmarks_;
  std::vector<Factor> factors_;
};

/// Scoped stack of committed virtual loop-closure factors for sequential
/// path refinement: preview() evaluates a candidate's IG against the current
/// stack without changing anything; commit() appends the candidate's virtual
/// factor so later previews see it. All committed factors are removed when
/// the session is destroyed, restoring the graph exactly.
class SlcIgSession {
 public:
  explicit SlcIgSession(SemanticGraph& graph);
  SlcIgSession(const SlcIgSession&) = delete;
  SlcIgSession& operator=(const SlcIgSession&) = delete;
  ~SlcIgSession();

  /// IG of closing from `current` to `lc` after `travel_distance` meters,
  /// stacked on top of everything committed so far.
  double preview(PoseId current, PoseId lc, double travel_distance);
  /// Same as preview, but keeps the virtual factor on the stack.
  double commit(PoseId current, PoseId lc, double travel_distance);

  double baseline_trace() const { return base_trace_; }

 private:
  void refresh_cache();
  double ig_against_cache(const Factor& f) const;

  SemanticGraph& graph_;
  size_t base_factor_count_;
  Eigen::MatrixXd sigma_;  // covariance under the current committed stack
  double base_trace_ = 0;
};

}  // namespace actslam
