#include "actslam/factor_graph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace actslam {
namespace {

void check_positive(const Eigen::Vector4d& noise) {
  for (int k = 0; k < 4; ++k) {
    if (!(noise[k] > 0) || !std::isfinite(noise[k])) {
      throw std::invalid_argument("factor noise entries must be positive and finite");
    }
  }
}

void check_positive(const Eigen::Vector3d& noise) {
  for (int k = 0; k < 3; ++k) {
    if (!(noise[k] > 0) || !std::isfinite(noise[k])) {
      throw std::invalid_argument("factor noise entries must be positive and finite");
    }
  }
}

/// [e3]x v, the derivative direction of a yaw rotation.
Eigen::Vector3d yaw_cross(const Eigen::Vector3d& v) {
  return {-v.y(), v.x(), 0.0};
}

/// Whitened residual and Jacobian blocks of one factor. Pose-pose factors
/// touch two 4-wide state blocks, range-bearing factors a 4-wide pose block
/// and a 3-wide landmark block; priors touch one block.
struct FactorEval {
  Eigen::VectorXd r;
  int off_a = -1;
  int off_b = -1;
  Eigen::MatrixXd ja;
  Eigen::MatrixXd jb;
};

}  // namespace

// ── Construction ────────────────────────────────────────────────────────────

PoseId SemanticGraph::add_first_pose(const PoseXYZYaw& pose,
                                     const Eigen::Vector4d& prior_noise,
                                     double timestamp) {
  if (!poses_.empty() || !landmarks_.empty()) {
    throw std::logic_error("add_first_pose requires an empty graph");
  }
  check_positive(prior_noise);
  poses_.push_back({pose, timestamp});
  Factor f;
  f.type = Factor::Type::kPrior;
  f.i = 0;
  f.pose_meas = pose;
  f.pose_noise = prior_noise;
  factors_.push_back(f);
  return 0;
}

PoseId SemanticGraph::add_key_pose(const PoseXYZYaw& vio_relative,
                                   const Eigen::Vector4d& noise, double timestamp) {
  if (poses_.empty()) throw std::logic_error("graph has no first pose");
  check_positive(noise);
  const PoseId prev = latest_pose_id();
  poses_.push_back({compose(poses_[prev].estimate, vio_relative), timestamp});
  Factor f;
  f.type = Factor::Type::kOdometry;
  f.i = prev;
  f.j = prev + 1;
  f.pose_meas = vio_relative;
  f.pose_noise = noise;
  factors_.push_back(f);
  return prev + 1;
}

LandmarkId SemanticGraph::add_landmark_observation(PoseId pose_id,
                                                   const Eigen::Vector3d& body_disp,
                                                   const std::string& label,
                                                   const Eigen::Vector3d& noise) {
  if (pose_id < 0 || pose_id >= pose_count()) {
    throw std::out_of_range("add_landmark_observation: unknown pose");
  }
  check_positive(noise);
  const Eigen::Vector3d world = poses_[pose_id].estimate.transform(body_disp);

  LandmarkId best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (LandmarkId id = 0; id < landmark_count(); ++id) {
    if (landmarks_[id].label != label) continue;
    const double d = (landmarks_[id].position - world).norm();
    if (d <= params_.g_da && d < best_dist) {
      best = id;
      best_dist = d;
    }
  }
  if (best < 0) {
    best = landmark_count();
    landmarks_.push_back({world, label, poses_[pose_id].timestamp});
  }

  Factor f;
  f.type = Factor::Type::kRangeBearing;
  f.i = pose_id;
  f.j = best;
  f.point_meas = body_disp;
  f.point_noise = noise;
  factors_.push_back(f);
  return best;
}

void SemanticGraph::add_loop_closure(PoseId lc, PoseId current,
                                     const PoseXYZYaw& measured,
                                     const Eigen::Vector4d& noise) {
  if (lc < 0 || lc >= pose_count() || current < 0 || current >= pose_count()) {
    throw std::out_of_range("add_loop_closure: unknown pose");
  }
  if (lc == current) throw std::invalid_argument("loop closure needs distinct poses");
  check_positive(noise);
  Factor f;
  f.type = Factor::Type::kLoopClosure;
  f.i = lc;
  f.j = current;
  f.pose_meas = measured;
  f.pose_noise = noise;
  factors_.push_back(f);
}

PoseId SemanticGraph::append_pose(const PoseXYZYaw& estimate, double timestamp) {
  poses_.push_back({estimate, timestamp});
  return latest_pose_id();
}

LandmarkId SemanticGraph::append_landmark(const Eigen::Vector3d& position,
                                          const std::string& label, double first_seen) {
  landmarks_.push_back({position, label, first_seen});
  return landmark_count() - 1;
}

void SemanticGraph::add_factor(const Factor& factor) {
  if (factor.i < 0 || factor.i >= pose_count()) {
    throw std::out_of_range("add_factor: unknown pose i");
  }
  if (factor.type == Factor::Type::kRangeBearing) {
    if (factor.j < 0 || factor.j >= landmark_count()) {
      throw std::out_of_range("add_factor: unknown landmark j");
    }
    check_positive(factor.point_noise);
  } else {
    if (factor.type != Factor::Type::kPrior &&
        (factor.j < 0 || factor.j >= pose_count())) {
      throw std::out_of_range("add_factor: unknown pose j");
    }
    check_positive(factor.pose_noise);
  }
  factors_.push_back(factor);
}

bool SemanticGraph::has_loop_closure() const {
  return std::any_of(factors_.begin(), factors_.end(), [](const Factor& f) {
    return f.type == Factor::Type::kLoopClosure && !f.is_virtual;
  });
}

// ── Linearization ───────────────────────────────────────────────────────────

std::vector<PoseXYZYaw> SemanticGraph::pose_states() const {
  std::vector<PoseXYZYaw> out(poses_.size());
  for (size_t k = 0; k < poses_.size(); ++k) out[k] = poses_[k].estimate;
  return out;
}

std::vector<Eigen::Vector3d> SemanticGraph::landmark_states() const {
  std::vector<Eigen::Vector3d> out(landmarks_.size());
  for (size_t k = 0; k < landmarks_.size(); ++k) out[k] = landmarks_[k].position;
  return out;
}

namespace {

FactorEval eval_factor(const Factor& f, const std::vector<PoseXYZYaw>& ps,
                       const std::vector<Eigen::Vector3d>& ls, int pose_count) {
  FactorEval e;
  switch (f.type) {
    case Factor::Type::kPrior: {
      const PoseXYZYaw& x = ps[f.i];
      e.r.resize(4);
      e.r.head<3>() = x.position - f.pose_meas.position;
      e.r[3] = wrap_angle(x.yaw - f.pose_meas.yaw);
      e.off_a = 4 * f.i;
      e.ja = Eigen::Matrix4d::Identity();
      for (int k = 0; k < 4; ++k) {
        const double w = 1.0 / f.pose_noise[k];
        e.r[k] *= w;
        e.ja.row(k) *= w;
      }
      break;
    }
    case Factor::Type::kOdometry:
    case Factor::Type::kLoopClosure: {
      const PoseXYZYaw& xi = ps[f.i];
      const PoseXYZYaw& xj = ps[f.j];
      const Eigen::Matrix3d rt = yaw_rotation(xi.yaw).transpose();
      const Eigen::Vector3d delta = xj.position - xi.position;
      e.r.resize(4);
      e.r.head<3>() = rt * delta - f.pose_meas.position;
      e.r[3] = wrap_angle(xj.yaw - xi.yaw - f.pose_meas.yaw);
      e.off_a = 4 * f.i;
      e.off_b = 4 * f.j;
      e.ja = Eigen::Matrix4d::Zero();
      e.jb = Eigen::Matrix4d::Zero();
      e.ja.topLeftCorner<3, 3>() = -rt;
      e.ja.topRightCorner<3, 1>() = -yaw_cross(rt * delta);
      e.ja(3, 3) = -1.0;
      e.jb.topLeftCorner<3, 3>() = rt;
      e.jb(3, 3) = 1.0;
      for (int k = 0; k < 4; ++k) {
        const double w = 1.0 / f.pose_noise[k];
        e.r[k] *= w;
        e.ja.row(k) *= w;
        e.jb.row(k) *= w;
      }
      break;
    }
    case Factor::Type::kRangeBearing: {
      const PoseXYZYaw& xi = ps[f.i];
      const Eigen::Vector3d& l = ls[f.j];
      const Eigen::Matrix3d rt = yaw_rotation(xi.yaw).transpose();
      const Eigen::Vector3d delta = l - xi.position;
      e.r = rt * delta - f.point_meas;
      e.off_a = 4 * f.i;
      e.off_b = 4 * pose_count + 3 * f.j;
      e.ja.resize(3, 4);
      e.ja.leftCols<3>() = -rt;
      e.ja.col(3) = -yaw_cross(rt * delta);
      e.jb = rt;
      for (int k = 0; k < 3; ++k) {
        const double w = 1.0 / f.point_noise[k];
        e.r[k] *= w;
        e.ja.row(k) *= w;
        e.jb.row(k) *= w;
      }
      break;
    }
  }
  return e;
}

}  // namespace

Eigen::VectorXd SemanticGraph::residuals_at(
    const std::vector<PoseXYZYaw>& poses,
    const std::vector<Eigen::Vector3d>& landmarks) const {
  int rows = 0;
  for (const Factor& f : factors_) rows += f.residual_dim();
  Eigen::VectorXd r(rows);
  int row = 0;
  for (const Factor& f : factors_) {
    const FactorEval e = eval_factor(f, poses, landmarks, pose_count());
    r.segment(row, e.r.size()) = e.r;
    row += static_cast<int>(e.r.size());
  }
  return r;
}

Eigen::MatrixXd SemanticGraph::jacobian_at(
    const std::vector<PoseXYZYaw>& poses,
    const std::vector<Eigen::Vector3d>& landmarks) const {
  int rows = 0;
  for (const Factor& f : factors_) rows += f.residual_dim();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(rows, state_dim());
  int row = 0;
  for (const Factor& f : factors_) {
    const FactorEval e = eval_factor(f, poses, landmarks, pose_count());
    j.block(row, e.off_a, e.ja.rows(), e.ja.cols()) = e.ja;
    if (e.off_b >= 0) j.block(row, e.off_b, e.jb.rows(), e.jb.cols()) = e.jb;
    row += static_cast<int>(e.r.size());
  }
  return j;
}

void SemanticGraph::normal_equations(const std::vector<PoseXYZYaw>& poses,
                                     const std::vector<Eigen::Vector3d>& landmarks,
                                     Eigen::MatrixXd& h, Eigen::VectorXd& g) const {
  const int n = state_dim();
  h = Eigen::MatrixXd::Zero(n, n);
  g = Eigen::VectorXd::Zero(n);
  for (const Factor& f : factors_) {
    const FactorEval e = eval_factor(f, poses, landmarks, pose_count());
    const int wa = static_cast<int>(e.ja.cols());
    h.block(e.off_a, e.off_a, wa, wa) += e.ja.transpose() * e.ja;
    g.segment(e.off_a, wa) += e.ja.transpose() * e.r;
    if (e.off_b >= 0) {
      const int wb = static_cast<int>(e.jb.cols());
      h.block(e.off_a, e.off_b, wa, wb) += e.ja.transpose() * e.jb;
      h.block(e.off_b, e.off_a, wb, wa) += e.jb.transpose() * e.ja;
      h.block(e.off_b, e.off_b, wb, wb) += e.jb.transpose() * e.jb;
      g.segment(e.off_b, wb) += e.jb.transpose() * e.r;
    }
  }
}

Eigen::MatrixXd SemanticGraph::information_at(
    const std::vector<PoseXYZYaw>& poses,
    const std::vector<Eigen::Vector3d>& landmarks) const {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  normal_equations(poses, landmarks, h, g);
  return h;
}

double SemanticGraph::cost() const {
  return residuals_at(pose_states(), landmark_states()).squaredNorm();
}

// ── Optimization ────────────────────────────────────────────────────────────

namespace {

/// Positive-definite check on a Gram matrix: every LDLT pivot well above the
/// scale of the largest one.
bool is_positive_definite(const Eigen::LDLT<Eigen::MatrixXd>& ldlt, int n) {
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.maxCoeff();
  if (!(dmax > 0) || !std::isfinite(dmax)) return false;
  const double floor = dmax * static_cast<double>(n) *
                       std::numeric_limits<double>::epsilon() * 16.0;
  return d.minCoeff() > floor;
}

void retract(std::vector<PoseXYZYaw>& ps, std::vector<Eigen::Vector3d>& ls,
             const Eigen::VectorXd& dx) {
  const int np = static_cast<int>(ps.size());
  for (int k = 0; k < np; ++k) {
    ps[k].position += dx.segment<3>(4 * k);
    ps[k].yaw = wrap_angle(ps[k].yaw + dx[4 * k + 3]);
  }
  for (size_t k = 0; k < ls.size(); ++k) {
    ls[k] += dx.segment<3>(4 * np + 3 * static_cast<int>(k));
  }
}

}  // namespace

OptimizeReport SemanticGraph::optimize() {
  OptimizeReport rep;
  auto ps = pose_states();
  auto ls = landmark_states();
  double current_cost = residuals_at(ps, ls).squaredNorm();
  rep.initial_cost = current_cost;
  rep.final_cost = current_cost;
  if (factors_.empty() || current_cost < 1e-15) {
    rep.converged = true;
    return rep;
  }

  const int n = state_dim();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd g(n);
  normal_equations(ps, ls, h, g);
  {
    Eigen::LDLT<Eigen::MatrixXd> probe(h);
    if (!is_positive_definite(probe, n)) {
      rep.failed = true;
      return rep;  // estimates untouched
    }
  }

  double lambda = 1e-4;
  bool converged = false;
  int iterations = 0;
  while (iterations < params_.lm_max_iters) {
    Eigen::MatrixXd damped = h;
    damped.diagonal() += lambda * h.diagonal();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    const Eigen::VectorXd dx = ldlt.solve(-g);
    bool usable = ldlt.info() == Eigen::Success && dx.allFinite();
    double trial_cost = std::numeric_limits<double>::infinity();
    auto trial_ps = ps;
    auto trial_ls = ls;
    if (usable) {
      retract(trial_ps, trial_ls, dx);
      trial_cost = residuals_at(trial_ps, trial_ls).squaredNorm();
      usable = std::isfinite(trial_cost);
    }
    if (usable && trial_cost < current_cost) {
      const double decrease = current_cost - trial_cost;
      ps = std::move(trial_ps);
      ls = std::move(trial_ls);
      current_cost = trial_cost;
      ++iterations;
      lambda = std::max(lambda * 0.5, 1e-12);
      if (current_cost < 1e-15 || decrease <= params_.lm_rel_tol * current_cost) {
        converged = true;
        break;
      }
      normal_equations(ps, ls, h, g);
    } else {
      lambda *= 4.0;
      if (lambda > 1e10) {
        converged = iterations > 0;  // stalled at a step-size floor
        break;
      }
    }
  }

  for (int k = 0; k < pose_count(); ++k) poses_[k].estimate = ps[k];
  for (int k = 0; k < landmark_count(); ++k) landmarks_[k].position = ls[k];
  rep.converged = converged;
  rep.iterations = iterations;
  rep.final_cost = current_cost;
  return rep;
}

// ── Covariance ──────────────────────────────────────────────────────────────

Eigen::MatrixXd SemanticGraph::covariance() const {
  const int n = state_dim();
  if (n == 0) throw std::runtime_error("covariance of an empty graph");
  const Eigen::MatrixXd h = information_at(pose_states(), landmark_states());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (!is_positive_definite(ldlt, n)) {
    throw std::runtime_error("information matrix is not positive definite");
  }
  return ldlt.solve(Eigen::MatrixXd::Identity(n, n));
}

double SemanticGraph::covariance_trace() const { return covariance().trace(); }

CovarianceSummary SemanticGraph::covariance_summary() const {
  const Eigen::MatrixXd sigma = covariance();
  CovarianceSummary s;
  s.total_trace = sigma.trace();
  double pose_sum = 0;
  for (int k = 0; k < pose_count(); ++k) {
    pose_sum += sigma.block<4, 4>(4 * k, 4 * k).trace();
  }
  s.avg_pose_trace = pose_count() > 0 ? pose_sum / pose_count() : 0.0;
  double lm_sum = 0;
  for (int k = 0; k < landmark_count(); ++k) {
    const int off = landmark_offset(k);
    lm_sum += sigma.block<3, 3>(off, off).trace();
  }
  s.avg_landmark_trace = landmark_count() > 0 ? lm_sum / landmark_count() : 0.0;
  return s;
}

Factor SemanticGraph::make_virtual_factor(PoseId current, PoseId lc,
                                          double travel_distance) const {
  if (lc < 0 || lc >= pose_count() || current < 0 || current >= pose_count()) {
    throw std::out_of_range("virtual factor: unknown pose");
  }
  if (lc == current) throw std::invalid_argument("virtual factor needs distinct poses");
  const double d = std::max(travel_distance, 1e-3);
  Factor f;
  f.type = Factor::Type::kOdometry;
  f.i = lc;
  f.j = current;
  f.pose_meas = relative(poses_[current].estimate, poses_[lc].estimate);
  f.pose_noise << params_.sigma_t * d, params_.sigma_t * d, params_.sigma_t * d,
      params_.sigma_psi * d;
  f.is_virtual = true;
  return f;
}

double SemanticGraph::predict_slc_ig(PoseId current, PoseId lc,
                                     double travel_distance) {
  SlcIgSession session(*this);
  return session.preview(current, lc, travel_distance);
}

void SemanticGraph::apply_slc(PoseId current, PoseId lc,
                              const PoseXYZYaw& aligned_pose,
                              const Eigen::Vector4d& noise) {
  const PoseXYZYaw measured = relative(aligned_pose, poses_.at(lc).estimate);
  add_loop_closure(lc, current, measured, noise);
  optimize();
}

// ── Serialization ───────────────────────────────────────────────────────────

nlohmann::json SemanticGraph::dump() const {
  nlohmann::json j;
  j["poses"] = nlohmann::json::array();
  for (int k = 0; k < pose_count(); ++k) {
    const PoseNode& p = poses_[k];
    j["poses"].push_back({{"id", k},
                          {"position", {p.estimate.position.x(), p.estimate.position.y(),
                                        p.estimate.position.z()}},
                          {"yaw", p.estimate.yaw},
                          {"timestamp", p.timestamp}});
  }
  j["landmarks"] = nlohmann::json::array();
  for (int k = 0; k < landmark_count(); ++k) {
    const LandmarkNode& l = landmarks_[k];
    j["landmarks"].push_back({{"id", k},
                              {"position", {l.position.x(), l.position.y(), l.position.z()}},
                              {"label", l.label},
                              {"first_seen", l.first_seen}});
  }
  static const char* kTypeNames[] = {"prior", "odometry", "range_bearing",
                                     "loop_closure"};
  j["factors"] = nlohmann::json::array();
  for (const Factor& f : factors_) {
    nlohmann::json jf = {{"type", kTypeNames[static_cast<int>(f.type)]},
                         {"i", f.i},
                         {"j", f.j},
                         {"virtual", f.is_virtual}};
    if (f.type == Factor::Type::kRangeBearing) {
      jf["measurement"] = {f.point_meas.x(), f.point_meas.y(), f.point_meas.z()};
      jf["noise"] = {f.point_noise.x(), f.point_noise.y(), f.point_noise.z()};
    } else {
      jf["measurement"] = {f.pose_meas.position.x(), f.pose_meas.position.y(),
                           f.pose_meas.position.z(), f.pose_meas.yaw};
      jf["noise"] = {f.pose_noise[0], f.pose_noise[1], f.pose_noise[2], f.pose_noise[3]};
    }
    j["factors"].push_back(std::move(jf));
  }
  return j;
}

// ── Information-gain session ────────────────────────────────────────────────

SlcIgSession::SlcIgSession(SemanticGraph& graph)
    : graph_(graph), base_factor_count_(graph.factors_.size()) {
  refresh_cache();
}

SlcIgSession::~SlcIgSession() { graph_.factors_.resize(base_factor_count_); }

void SlcIgSession::refresh_cache() {
  const int n = graph_.state_dim();
  if (n == 0) throw std::runtime_error("information gain on an empty graph");
  const Eigen::MatrixXd h =
      graph_.information_at(graph_.pose_states(), graph_.landmark_states());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (!is_positive_definite(ldlt, n)) {
    throw std::runtime_error("information matrix is not positive definite");
  }
  sigma_ = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
  base_trace_ = sigma_.trace();
}

double SlcIgSession::ig_against_cache(const Factor& f) const {
  // Adding a factor with whitened Jacobian J changes the covariance to
  // Sigma - Sigma J^T (I + J Sigma J^T)^{-1} J Sigma (matrix inversion
  // lemma), so the trace reduction needs only the cached Sigma and two
  // small dense blocks -- identical to re-deriving the full inverse.
  const FactorEval e =
      eval_factor(f, graph_.pose_states(), graph_.landmark_states(),
                  graph_.pose_count());
  const int rows = static_cast<int>(e.r.size());
  Eigen::MatrixXd js = e.ja * sigma_.middleRows(e.off_a, e.ja.cols());
  if (e.off_b >= 0) js += e.jb * sigma_.middleRows(e.off_b, e.jb.cols());
  Eigen::MatrixXd gain = Eigen::MatrixXd::Identity(rows, rows);
  gain += js.middleCols(e.off_a, e.ja.cols()) * e.ja.transpose();
  if (e.off_b >= 0) gain += js.middleCols(e.off_b, e.jb.cols()) * e.jb.transpose();
  const Eigen::MatrixXd outer = js * js.transpose();
  return gain.ldlt().solve(outer).trace();
}

double SlcIgSession::preview(PoseId current, PoseId lc, double travel_distance) {
  return ig_against_cache(graph_.make_virtual_factor(current, lc, travel_distance));
}

double SlcIgSession::commit(PoseId current, PoseId lc, double travel_distance) {
  const Factor f = graph_.make_virtual_factor(current, lc, travel_distance);
  const double ig = ig_against_cache(f);
  graph_.factors_.push_back(f);
  refresh_cache();
  return ig;
}

}  // namespace actslam
