#pragma once

#include <optional>

#include "wpart/grid.hpp"

namespace wpart {

enum class WeightSource { Direct, Landscape };

struct WeightSpec {
  double delta = 0.01;
  double cap = 1.0;
  WeightSource source = WeightSource::Landscape;
  // Declared Hoelder regularity of the weight; only used for gauge reporting.
  std::optional<double> beta;
  std::optional<double> C_beta;

  void validate() const;
};

struct LandscapeOptions {
  double tol = 1e-8;
  /// 0 selects the default 10 * nx * ny.
  int max_iter = 0;
};

struct LandscapeSolution {
  ScalarField w;
  int iterations = 0;
  double relative_residual = 0.0;
};

/**
 * Solves (-Laplace_h + V) w = 1 on the in-domain cells with the 5-point
 * stencil and zero Dirichlet data on every face shared with an out-of-domain
 * or exterior cell (ghost value -w, so w vanishes at the face).
 *
 * An axis with a single cell carries no coupling (unless both axes do), so a
 * nx x 1 grid solves the one-dimensional problem on (0, nx h).
 *
 * Uses conjugate gradients with a Jacobi preconditioner; the operator is SPD
 * whenever V >= 0. Throws PreconditionError on negative V and ConvergenceError
 * when the relative residual does not reach tol within max_iter.
 */
LandscapeSolution solve_landscape(const ScalarField& V, const LandscapeOptions& options = {});

/// Applies the discrete operator (-Laplace_h + V) to u.
std::vector<double> apply_landscape_operator(const ScalarField& V, std::span<const double> u);

/// a = clamp(delta + w, delta, cap) (landscape source) or clamp(field, delta, cap) (direct).
ScalarField build_weight(const ScalarField& w_or_field, const WeightSpec& spec);

/// Two-cell mean of a across the face.
inline double face_weight(const ScalarField& a, const InterfaceFace& f) {
  return 0.5 * (a[f.cell_a] + a[f.cell_b]);
}

}  // namespace wpart
