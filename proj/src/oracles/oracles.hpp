#pragma once

// Brute-force reference implementations, written independently of the main
// library's algorithms and kept deliberately naive. They trade speed for
// obviousness and exist only to cross-check the optimized code on desk-scale
// instances (tests and the `actsim oracle` command).

#include "actslam/cop.hpp"
#include "actslam/slc.hpp"
#include "actslam/voxel_grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace actslam::oracles {

/// Exhaustive labeled alignment by filtered full enumeration: every subset of
/// local detections, every permutation of map landmarks against it, highest
/// cardinality first, accepting at the first k whose best mean-squared
/// residual passes tau.
std::optional<AlignmentResult> align_bruteforce(
    std::span<const LandmarkRef> map_set, std::span<const LabeledPoint> local_set,
    int k_min, double tau);

/// Yaw grid search for the best fit of b onto a under a ~ R(psi) b + t with
/// the centroid-difference translation; returns the lowest mean-squared
/// residual over the grid.
double fit_residual_gridsearch(std::span<const Eigen::Vector3d> seq_a,
                               std::span<const Eigen::Vector3d> seq_b,
                               double psi_step);

/// Textbook DBSCAN over points (region query per point, explicit seed-set
/// expansion). Returns the cluster index per point, -1 for noise; cluster
/// indices count up in order of discovery.
std::vector<int> dbscan_naive(std::span<const Eigen::Vector3d> points, double eps,
                              int min_pts);

/// Minimum open-path cost from the start over all permutations of the
/// selected vertices (factorial enumeration; keep |selected| small).
double open_path_cost_bruteforce(const CopInstance& instance,
                                 std::span<const int> selected);

/// Globally optimal orienteering objective by enumerating every vertex
/// subset and checking budget feasibility with the permutation minimum.
/// Returns the best objective (the empty set is always feasible).
double cop_best_objective_bruteforce(const CopInstance& instance);

/// Plain Dijkstra over the grid's Free cells, 26-connected with Euclidean
/// edge weights between cell centers; none when unreachable or an endpoint
/// cell is not Free.
std::optional<double> grid_dijkstra_cost(const VoxelGrid& grid,
                                         const Eigen::Vector3d& start,
                                         const Eigen::Vector3d& goal);

}  // namespace actslam::oracles
