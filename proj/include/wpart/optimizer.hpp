#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "wpart/energy.hpp"
#include "wpart/grid.hpp"

namespace wpart {

enum class InitKind { VoronoiSeeds, Random, Stripes, WatershedMinusW };

struct Annealing {
  double T0 = 1.0;
  double decay = 0.95;  // T_k = T0 * decay^k, decay in (0, 1)
};

struct OptimizerConfig {
  InitKind init = InitKind::VoronoiSeeds;
  std::uint64_t seed = 0;
  int max_sweeps = 200;
  int pour_moves_per_sweep = 16;
  /// Pour radii are drawn uniformly from [r_min, r_max]; 0 selects h and 4h.
  double r_min = 0.0;
  double r_max = 0.0;
  std::optional<Annealing> annealing;
  /// Lloyd relaxation steps applied to the Voronoi seeds before labelling.
  /// Relaxed seeds start near equal volumes, which matters when lambda is large:
  /// no single flip or pour can then move an interface without unbalancing it.
  int lloyd_iterations = 10;
  /// Independent starts from reseeded initial labellings; the lowest final J wins.
  int restarts = 1;

  double radius_min(const Grid& g) const { return r_min > 0.0 ? r_min : g.h(); }
  double radius_max(const Grid& g) const { return r_max > 0.0 ? r_max : 4.0 * g.h(); }
  void validate(const Grid& g) const;
};

/**
 * Ball competitor: every cell of B(center, radius) whose label lies in
 * `sources` is relabelled to the matching entry of `targets`. Targets must
 * avoid the source set.
 */
struct PourMove {
  CellIndex center = 0;
  double radius = 0.0;
  std::vector<int> sources;
  std::vector<int> targets;

  int target_of(int label) const;  // 0 when label is not a source
  void validate(int n_labels, double h) const;
};

struct TraceRecord {
  int sweep = 0;
  double F = 0.0;
  double G = 0.0;
  double J = 0.0;
  std::size_t flips = 0;
  std::size_t pours = 0;
  double temperature = 0.0;
};

using EnergyTrace = std::vector<TraceRecord>;

/// Deterministic random source shared by the initializers and the optimizer.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

/**
 * Initial labelling.
 *
 *  VoronoiSeeds: nearest of N seeds placed on distinct random in-domain cells,
 *                optionally relaxed by Lloyd iterations.
 *  Random:       i.i.d. uniform labels.
 *  Stripes:      N vertical bands of equal width.
 *  WatershedMinusW: basins of -field, merged along lowest saddles to <= N regions.
 *
 * `field` is the weight or landscape function; only the watershed init reads it.
 */
Partition initialize(const GridPtr& grid, int n_labels, const ScalarField& field, const OptimizerConfig& config);

Partition apply_pour(const Partition& p, const PourMove& move);

struct PourProposal {
  PourMove move;
  double delta_J = 0.0;
};

/// All candidate pours for one ball, in enumeration order, each with its exact delta:
/// everything into the majority label, then each minority label into its
/// largest-contact neighbour within the ball.
std::vector<PourProposal> pour_candidates(const EnergyState& state, CellIndex center, double radius);

/// Samples a center on the interface and a radius, and returns the candidate
/// with the lowest delta. Empty when fewer than two phases are non-empty.
std::optional<PourProposal> propose_pour(const EnergyState& state, const OptimizerConfig& config, Rng& rng);

struct SweepResult {
  Partition partition;
  bool improved = false;
};

/// One greedy pass over the cells in checkerboard order; J never increases.
SweepResult icm_sweep(const Partition& p, const ScalarField& a, const EnergySpec& spec);

/// In-place sweep on a live state; returns the number of relabelled cells.
std::size_t icm_sweep(EnergyState& state);

struct MinimizeResult {
  Partition partition;
  EnergyTrace trace;
  EnergyBreakdown energy;
};

/**
 * Alternates ICM sweeps and pour batches until a sweep and a batch both make
 * no move, or max_sweeps is reached. Returns the best partition seen and the
 * per-sweep trace (record 0 is the initial state). Bit-reproducible per seed.
 * With restarts > 1 the run with the lowest final J is returned, earliest on ties.
 */
MinimizeResult minimize(const GridPtr& grid, int n_labels, const ScalarField& a, const EnergySpec& spec,
                        const OptimizerConfig& config);

/// Same, starting from a given partition.
MinimizeResult minimize_from(const Partition& start, const ScalarField& a, const EnergySpec& spec,
                             const OptimizerConfig& config);

/**
 * Absorbs every phase component smaller than min_component_volume into the
 * neighbouring label with which it shares the largest weighted interface,
 * whenever that does not increase J. Iterated to a fixpoint.
 * A non-positive threshold selects the default of four cells.
 */
Partition clean(const Partition& p, const ScalarField& a, const EnergySpec& spec, double min_component_volume = 0.0);

}  // namespace wpart
