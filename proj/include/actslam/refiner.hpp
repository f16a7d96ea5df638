#pragma once

#include "actslam/factor_graph.hpp"
#include "actslam/frontier.hpp"
#include "actslam/pose.hpp"
#include "actslam/slc.hpp"

#include <functional>
#include <variant>
#include <vector>

namespace actslam {

/// Travel cost between two poses, typically A* over the global grid;
/// +infinity when unreachable.
using TravelCostFn = std::function<double(const PoseXYZYaw&, const PoseXYZYaw&)>;

/// Exploration overlap weight w(u, v) in [0, 1] between two viewpoints.
using ViewpointCorrelationFn =
    std::function<double(const Viewpoint&, const Viewpoint&)>;

/// One step of a refined plan: sense new space at an exploration viewpoint,
/// or revisit a mapped submap's key pose to close a loop.
struct PathElement {
  std::variant<Viewpoint, SlcCandidate> target;
  double cost = 0;  // m, travel from the previous element (or the path start)
  double ig = 0;    // unknown cells (Explore) or covariance-trace drop (CloseLoop)

  bool is_close_loop() const { return std::holds_alternative<SlcCandidate>(target); }
  const Viewpoint& explore() const { return std::get<Viewpoint>(target); }
  const SlcCandidate& close_loop() const { return std::get<SlcCandidate>(target); }
  /// Pose the executor must reach for this element.
  const PoseXYZYaw& goal() const;
};

/// Planner bookkeeping carried between replans.
struct ReplanState {
  std::vector<int> frontier_snapshot;  // sorted linear cell ids at the last plan
  double executed_fraction = 0;        // of the current refined path, in [0, 1]
  double remaining_budget = 0;         // m
};

/// vp.ig discounted by the overlap already covered by the Explore elements of
/// `refined`: vp.ig * max(0, 1 - sum of w(element, vp)). Never negative.
double remaining_ig(const std::vector<PathElement>& refined, const Viewpoint& vp,
                    const ViewpointCorrelationFn& correlation);

struct RefineParams {
  double f_sc = 6.0;  // scale applied to a closure's IG in the insertion test
};

/// Walk the exploration tour in order. Before each viewpoint, pick the unused
/// loop-closure candidate with the best IG/cost ratio — IG predicted by a
/// virtual closure factor stacked on the closures already inserted, cost by
/// travel from the running path endpoint — and insert it when f_sc * IG
/// exceeds the viewpoint's own IG/cost utility and the budget still covers
/// it. Then append the viewpoint itself, recosted from the new endpoint, or
/// stop at the first viewpoint the budget cannot cover. Each candidate is
/// used at most once; the graph is restored untouched before returning.
std::vector<PathElement> refine(const PoseXYZYaw& start,
                                const std::vector<Viewpoint>& exploration_tour,
                                const std::vector<SlcCandidate>& candidates,
                                SemanticGraph& graph, double budget,
                                const TravelCostFn& travel_cost,
                                const ViewpointCorrelationFn& correlation,
                                const RefineParams& params = {});

/// True when frontier churn since the snapshot reaches f_r1 — measured as
/// |symmetric difference| / max(1, |snapshot|) over sorted cell id sets — or
/// the executed fraction of the current path reaches f_r2. Both inclusive.
bool should_replan(const ReplanState& state,
                   const std::vector<int>& current_frontier_cells, double f_r1,
                   double f_r2);

/// Re-express a goal given in the drift-corrected map frame so an executor
/// tracking the drifting odometry estimate reaches it: the goal's offset from
/// the corrected robot pose is re-applied at the odometry robot pose.
PoseXYZYaw drift_compensate(const PoseXYZYaw& goal_slam, const PoseXYZYaw& vio_pose,
                            const PoseXYZYaw& slam_pose);

}  // namespace actslam
