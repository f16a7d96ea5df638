#include "actslam/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <optional>

namespace actslam {

const PoseXYZYaw& PathElement::goal() const {
  if (const auto* vp = std::get_if<Viewpoint>(&target)) return vp->pose;
  return std::get<SlcCandidate>(target).viewpoint_pose;
}

double remaining_ig(const std::vector<PathElement>& refined, const Viewpoint& vp,
                    const ViewpointCorrelationFn& correlation) {
  double overlap = 0;
  for (const PathElement& element : refined) {
    if (element.is_close_loop()) continue;
    overlap += correlation(element.explore(), vp);
  }
  return vp.ig * std::max(0.0, 1.0 - overlap);
}

std::vector<PathElement> refine(const PoseXYZYaw& start,
                                const std::vector<Viewpoint>& exploration_tour,
                                const std::vector<SlcCandidate>& candidates,
                                SemanticGraph& graph, double budget,
                                const TravelCostFn& travel_cost,
                                const ViewpointCorrelationFn& correlation,
                                const RefineParams& params) {
  std::vector<PathElement> refined;
  std::vector<char> used(candidates.size(), 0);
  // Candidate IGs stack on previously inserted closures; the session removes
  // every committed virtual factor when this function returns.
  std::optional<SlcIgSession> session;
  if (!candidates.empty()) session.emplace(graph);
  const PoseId current = candidates.empty() ? -1 : graph.latest_pose_id();

  double running = 0;
  PoseXYZYaw endpoint = start;
  for (const Viewpoint& vp : exploration_tour) {
    double vp_ig = remaining_ig(refined, vp, correlation);
    double vp_cost = travel_cost(endpoint, vp.pose);

    int best = -1;
    double best_ig = 0;
    double best_cost = 0;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      // A closure from the current pose to itself carries no information.
      if (candidates[c].viewpoint == current) continue;
      const double cost = travel_cost(endpoint, candidates[c].viewpoint_pose);
      if (!std::isfinite(cost)) continue;
      const double ig = session->preview(current, candidates[c].viewpoint, cost);
      const double ratio = ig / cost;
      if (ratio > best_ratio) {
        best = static_cast<int>(c);
        best_ig = ig;
        best_cost = cost;
        best_ratio = ratio;
      }
    }

    if (best >= 0 && params.f_sc * best_ig > vp_ig / vp_cost &&
        running + best_cost <= budget) {
      session->commit(current, candidates[best].viewpoint, best_cost);
      used[best] = 1;
      refined.push_back({candidates[best], best_cost, best_ig});
      running += best_cost;
      endpoint = candidates[best].viewpoint_pose;
      vp_cost = travel_cost(endpoint, vp.pose);  // chaining changed
    }

    if (!std::isfinite(vp_cost) || running + vp_cost > budget) break;
    refined.push_back({vp, vp_cost, vp_ig});
    running += vp_cost;
    endpoint = vp.pose;
  }
  return refined;
}

bool should_replan(const ReplanState& state,
                   const std::vector<int>& current_frontier_cells, double f_r1,
                   double f_r2) {
  if (state.executed_fraction >= f_r2) return true;
  std::vector<int> changed;
  std::set_symmetric_difference(state.frontier_snapshot.begin(),
                                state.frontier_snapshot.end(),
                                current_frontier_cells.begin(),
                                current_frontier_cells.end(),
                                std::back_inserter(changed));
  const double churn = static_cast<double>(changed.size()) /
                       static_cast<double>(std::max<size_t>(1, state.frontier_snapshot.size()));
  return churn >= f_r1;
}

PoseXYZYaw drift_compensate(const PoseXYZYaw& goal_slam, const PoseXYZYaw& vio_pose,
                            const PoseXYZYaw& slam_pose) {
  return compose(vio_pose, relative(goal_slam, slam_pose));
}

}  // namespace actslam
