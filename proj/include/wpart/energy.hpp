#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "wpart/grid.hpp"

namespace wpart {

enum class BulkKind { VolumeQuadratic, VolumeGenericH, WeightedVolume };

/// Sampled function with linear interpolation and linear extrapolation past the ends.
struct PiecewiseLinear {
  std::vector<double> x;  // strictly increasing
  std::vector<double> y;

  double operator()(double t) const;
  void validate() const;
};

/**
 * Volume-balancing bulk term G.
 *
 *  VolumeQuadratic: G = lambda * sum_i (|W_i| - target_i)^2
 *  VolumeGenericH:  G = sum_i h_table(|W_i|)
 *  WeightedVolume:  m_i = integral of q over W_i;
 *                   G = lambda * sum_i h_table(m_i) when h_table is set,
 *                   otherwise lambda * sum_i (m_i - target_i)^2.
 *
 * alpha and C_alpha are the declared Hoelder exponent and constant of G with
 * respect to the symmetric-difference distance.
 */
struct BulkTermSpec {
  BulkKind kind = BulkKind::VolumeQuadratic;
  double lambda = 1.0;
  std::vector<double> target_volumes;  // empty: equal shares of the total measure
  double alpha = 1.0;
  double C_alpha = 0.0;
  std::optional<PiecewiseLinear> h_table;
  std::optional<ScalarField> q_weight;

  void validate(int n_labels) const;
};

struct EnergySpec {
  BulkTermSpec bulk;
  /// Per-label multiplier on the boundary price of that phase; empty means all ones.
  /// A value below one gives the discounted "black region" phase.
  std::vector<double> label_weights;

  void validate(int n_labels) const;
};

struct EnergyBreakdown {
  double interface_term = 0.0;  // F
  double bulk_term = 0.0;       // G
  double total = 0.0;           // J = F + G
  std::vector<double> per_phase_perimeter;
  double interface_length_unweighted = 0.0;
};

struct InterfaceEnergy {
  double F = 0.0;
  std::vector<double> per_phase;
  double unweighted_length = 0.0;
};

/**
 * F = sum over phases of the a-weighted boundary length of that phase.
 * Every interface face contributes face_weight * h to both phases it separates,
 * so with unit label weights F = 2 * sum_faces face_weight * h. F is accumulated
 * as the left-to-right sum of per_phase, which makes the identity exact.
 */
InterfaceEnergy interface_energy(const Partition& p, const ScalarField& a,
                                 const std::vector<double>& label_weights = {});

double bulk_energy(const Partition& p, const BulkTermSpec& spec);

EnergyBreakdown total_energy(const Partition& p, const ScalarField& a, const EnergySpec& spec);

/// J(p') - J(p) where p' relabels `cells` to new_label.
double energy_delta(const Partition& p, std::span<const CellIndex> cells, int new_label,
                    const ScalarField& a, const EnergySpec& spec);

struct HolderReport {
  std::size_t pairs = 0;
  std::vector<std::size_t> violations;  // indices into the sample list
  double max_lhs = 0.0;
  /// max |G(p) - G(q)| / dist(p, q)^alpha over pairs with dist > 0.
  double tightest_constant = 0.0;
};

/// Checks |G(p) - G(q)| <= C_alpha * dist(p, q)^alpha on every pair.
HolderReport verify_holder_bound(const std::vector<std::pair<Partition, Partition>>& samples,
                                 const BulkTermSpec& spec);

/**
 * Energy of a partition kept up to date under relabelings.
 *
 * Holds a private copy of the partition, the per-phase bulk measures, and the
 * precomputed face weights, so that the change of J under a move costs time
 * proportional to the move. Used by the optimizer and the oracle.
 */
class EnergyState {
 public:
  EnergyState(Partition p, const ScalarField& a, EnergySpec spec);

  const Partition& partition() const noexcept { return partition_; }
  const EnergySpec& spec() const noexcept { return spec_; }
  const ScalarField& weight() const noexcept { return a_; }
  /// Per-phase bulk measure (volume or q-weighted volume).
  const std::vector<double>& measures() const noexcept { return measures_; }
  std::size_t count(int label) const noexcept { return counts_[static_cast<std::size_t>(label - 1)]; }
  int nontrivial_phases() const noexcept;

  /// Weight * h of the face between c and its +x (axis X) or +y (axis Y) neighbor.
  double face_summand(CellIndex c, Axis axis) const noexcept {
    return axis == Axis::X ? face_x_[c] : face_y_[c];
  }
  double face_summand_between(CellIndex c, CellIndex d) const noexcept;

  double delta_single(CellIndex c, int new_label) const;
  /// Change of J when every (cell, label) pair is applied. Cells must be distinct.
  double delta(std::span<const std::pair<CellIndex, int>> changes) const;
  void apply(std::span<const std::pair<CellIndex, int>> changes);
  void apply_single(CellIndex c, int new_label);

  double bulk_term() const;
  EnergyBreakdown breakdown() const;

 private:
  double phase_bulk(std::size_t i, double measure) const;
  double measure_of(CellIndex c) const noexcept;
  double pair_price(int la, int lb, double summand) const noexcept;

  Partition partition_;
  ScalarField a_;
  EnergySpec spec_;
  std::vector<double> targets_;
  std::vector<double> label_weights_;
  std::vector<double> face_x_;
  std::vector<double> face_y_;
  std::vector<double> measures_;
  std::vector<std::size_t> counts_;
  mutable std::vector<int> pending_;  // scratch: new label of a changed cell, 0 otherwise
  mutable std::vector<double> dmeasure_;
  mutable std::vector<std::ptrdiff_t> dcount_;
};

/// Resolved targets: the spec's, or equal shares of the total bulk measure.
std::vector<double> resolved_targets(const BulkTermSpec& spec, const Grid& grid, int n_labels);

}  // namespace wpart
