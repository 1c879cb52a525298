#include "wpart/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "wpart/error.hpp"

namespace wpart {

namespace {

bool ties(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)); }

struct PrefixResult {
  double J_min = std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
  std::vector<int> labels;
};

// Enumerates every assignment whose first in-domain cell carries `first`.
PrefixResult enumerate_prefix(const GridPtr& grid, int n_labels, const ScalarField& a, const EnergySpec& spec,
                              const std::vector<CellIndex>& cells, int first) {
  std::vector<int> labels(grid->size(), 0);
  for (CellIndex c : cells) labels[c] = 1;
  labels[cells.front()] = first;
  EnergyState state(Partition(grid, n_labels, labels), a, spec);
  double J = state.breakdown().total;

  PrefixResult best;
  const std::size_t n = cells.size();
  while (true) {
    if (best.count == 0 || (J < best.J_min && !ties(J, best.J_min))) {
      best.J_min = J;
      best.count = 1;
      best.labels.assign(state.partition().labels().begin(), state.partition().labels().end());
    } else if (ties(J, best.J_min)) {
      ++best.count;
    }
    // Odometer step over cells[1..n), last cell fastest.
    std::size_t k = n;
    while (k > 1) {
      --k;
      const CellIndex c = cells[k];
      const int l = state.partition()[c];
      if (l < n_labels) {
        J += state.delta_single(c, l + 1);
        state.apply_single(c, l + 1);
        break;
      }
      J += state.delta_single(c, 1);
      state.apply_single(c, 1);
      if (k == 1) return best;
    }
    if (n == 1) return best;
  }
}

}  // namespace

unsigned worker_threads() {
  if (const char* env = std::getenv("WPART_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return 1;
}

std::uint64_t assignment_count(const Grid& grid, int n_labels) {
  std::uint64_t total = 1;
  const auto base = static_cast<std::uint64_t>(n_labels);
  for (std::size_t k = 0; k < grid.domain_cell_count(); ++k) {
    if (total > std::numeric_limits<std::uint64_t>::max() / base) return std::numeric_limits<std::uint64_t>::max();
    total *= base;
  }
  return total;
}

OracleResult brute_force_min(const GridPtr& grid, int n_labels, const ScalarField& a, const EnergySpec& spec,
                             const OracleBudget& budget) {
  if (n_labels < 1) throw PreconditionError("at least one label is required");
  spec.validate(n_labels);
  const std::uint64_t total = assignment_count(*grid, n_labels);
  if (total > budget.max_assignments) {
    throw BudgetError("exhaustive search needs " + std::to_string(total) + " assignments, budget is " +
                          std::to_string(budget.max_assignments),
                      total);
  }
  std::vector<CellIndex> cells;
  for (CellIndex c = 0; c < grid->size(); ++c)
    if (grid->in_domain(c)) cells.push_back(c);

  std::vector<PrefixResult> parts(static_cast<std::size_t>(n_labels));
  const unsigned threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(n_labels));
  if (threads <= 1) {
    for (int f = 1; f <= n_labels; ++f) parts[static_cast<std::size_t>(f - 1)] = enumerate_prefix(grid, n_labels, a, spec, cells, f);
  } else {
    std::atomic<int> next{1};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int f = next++; f <= n_labels; f = next++)
          parts[static_cast<std::size_t>(f - 1)] = enumerate_prefix(grid, n_labels, a, spec, cells, f);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Reduce in prefix (= lexicographic) order.
  PrefixResult best;
  for (auto& part : parts) {
    if (best.count == 0 || (part.J_min < best.J_min && !ties(part.J_min, best.J_min))) {
      best = std::move(part);
    } else if (ties(part.J_min, best.J_min)) {
      best.count += part.count;
    }
  }
  Partition minimizer(grid, n_labels, std::move(best.labels));
  EnergyBreakdown energy = total_energy(minimizer, a, spec);
  const double J_min = energy.total;
  return {std::move(minimizer), std::move(energy), J_min, best.count, total};
}

GapReport verify_against(const Partition& p, const ScalarField& a, const EnergySpec& spec, const OracleBudget& budget) {
  const auto oracle = brute_force_min(p.grid_ptr(), p.n_labels(), a, spec, budget);
  GapReport r;
  r.J = total_energy(p, a, spec).total;
  r.J_min = oracle.J_min;
  r.gap = r.J - r.J_min;
  r.optimal = ties(r.J, r.J_min);
  return r;
}

}  // namespace wpart
