#pragma once

// Seeded randomized comparison suites pitting the library implementations
// against the brute-force references in oracles.hpp. Shared by the
// `actsim oracle` subcommand and the release-gate binary so both report the
// same numbers for the same seeds.

#include "actslam/world.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace actslam::oracles {

/// Outcome of one comparison suite: how many instances ran, how many
/// disagreed with the reference, and free-form notes (reported ratios etc.).
struct SuiteReport {
  std::string name;
  int checks = 0;
  int failures = 0;
  std::vector<std::string> notes;

  bool ok() const { return failures == 0; }
};

/// Labeled point-set alignment vs filtered full enumeration (n, m <= 5,
/// partial overlap and spurious detections included).
SuiteReport suite_align(std::uint64_t seed = 2026, int instances = 200);

/// Subset-DP open-path cost vs permutation enumeration, |selected| <= 8.
SuiteReport suite_heldkarp(std::uint64_t seed = 2026, int instances = 50);

/// Orienteering solver contract on |V| <= 10: budget feasibility, repeat
/// determinism, stored-objective recheck; notes carry the optimality ratio
/// against subset enumeration on the |V| <= 6 instances.
SuiteReport suite_cop(std::uint64_t seed = 2026, int instances = 200);

/// Dense marginal covariance vs the inverse Gram of a central-finite-
/// difference Jacobian on random small graphs.
SuiteReport suite_covariance(std::uint64_t seed = 2026, int instances = 50);

/// Incrementally tracked frontier cell set vs a from-scratch rescan after
/// every scan of seeded sensing sequences in `world`.
SuiteReport suite_frontier(const WorldModel& world, std::uint64_t seed = 2026,
                           int sequences = 50);

/// Grid A* path cost vs plain Dijkstra on random occupancy grids (agreement
/// on unreachability included).
SuiteReport suite_astar(std::uint64_t seed = 2026, int queries = 100);

/// Landmark density clustering vs textbook DBSCAN on random point sets.
SuiteReport suite_dbscan(std::uint64_t seed = 2026, int sets = 100);

}  // namespace actslam::oracles
