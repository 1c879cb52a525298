#pragma once

#include <cstdint>

#include "wpart/energy.hpp"

namespace wpart {

struct OracleBudget {
  std::uint64_t max_assignments = 100'000'000;
};

struct OracleResult {
  Partition minimizer;  // lexicographically smallest label vector attaining J_min
  EnergyBreakdown energy;
  double J_min = 0.0;
  std::uint64_t count = 0;  // raw number of minimizing assignments
  std::uint64_t assignments = 0;
};

/// N^(in-domain cells), saturating at UINT64_MAX.
std::uint64_t assignment_count(const Grid& grid, int n_labels);

/**
 * Exhaustive minimization of J over every labelling of the in-domain cells.
 *
 * Assignments are visited in lexicographic order (last cell fastest) with
 * incremental energy updates. Energies within 1e-9 (relative) of the minimum
 * count as ties. The work is split over the first cell's label across
 * WPART_THREADS worker threads (default 1); the reduction is in prefix order,
 * so results do not depend on the thread count.
 *
 * Throws BudgetError when the assignment count exceeds the budget.
 */
OracleResult brute_force_min(const GridPtr& grid, int n_labels, const ScalarField& a, const EnergySpec& spec,
                             const OracleBudget& budget = {});

struct GapReport {
  double J = 0.0;
  double J_min = 0.0;
  double gap = 0.0;
  bool optimal = false;
};

GapReport verify_against(const Partition& p, const ScalarField& a, const EnergySpec& spec,
                         const OracleBudget& budget = {});

/// Thread count from the WPART_THREADS environment variable (>= 1).
unsigned worker_threads();

}  // namespace wpart
