#include "wpart/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wpart/error.hpp"

namespace wpart {

void WeightSpec::validate() const {
  if (!(delta > 0.0)) throw PreconditionError("weight delta must be positive");
  if (!(delta <= cap)) throw PreconditionError("weight delta must not exceed cap");
  if (beta && !(*beta > 0.0 && *beta <= 1.0)) throw PreconditionError("weight beta must lie in (0, 1]");
  if (C_beta && !(*C_beta >= 0.0)) throw PreconditionError("weight C_beta must be non-negative");
}

namespace {

// Diagonal of the operator and the in-domain neighbors of each cell.
struct Stencil {
  std::vector<double> diag;
  double inv_h2;
};

Stencil build_stencil(const ScalarField& V) {
  const Grid& g = V.grid();
  const double inv_h2 = 1.0 / (g.h() * g.h());
  Stencil s{std::vector<double>(g.size(), 0.0), inv_h2};
  const bool couple_x = g.nx() > 1 || g.ny() == 1;
  const bool couple_y = g.ny() > 1 || g.nx() == 1;
  for (CellIndex c = 0; c < g.size(); ++c) {
    if (!g.in_domain(c)) continue;
    const int i = g.col(c);
    const int j = g.row(c);
    double d = V[c];
    auto side = [&](bool inside, CellIndex n) {
      // In-domain neighbor: coefficient 1; Dirichlet face: ghost -w gives 2.
      d += (inside && g.in_domain(n)) ? inv_h2 : 2.0 * inv_h2;
    };
    if (couple_x) {
      side(i + 1 < g.nx(), i + 1 < g.nx() ? c + 1 : c);
      side(i > 0, i > 0 ? c - 1 : c);
    }
    if (couple_y) {
      side(j + 1 < g.ny(), j + 1 < g.ny() ? c + g.nx() : c);
      side(j > 0, j > 0 ? c - g.nx() : c);
    }
    s.diag[c] = d;
  }
  return s;
}

void apply(const Grid& g, const Stencil& s, std::span<const double> u, std::span<double> out) {
  const bool couple_x = g.nx() > 1 || g.ny() == 1;
  const bool couple_y = g.ny() > 1 || g.nx() == 1;
  const auto nx = static_cast<CellIndex>(g.nx());
  for (CellIndex c = 0; c < g.size(); ++c) {
    if (!g.in_domain(c)) {
      out[c] = 0.0;
      continue;
    }
    const int i = g.col(c);
    const int j = g.row(c);
    double off = 0.0;
    if (couple_x) {
      if (i + 1 < g.nx() && g.in_domain(c + 1)) off += u[c + 1];
      if (i > 0 && g.in_domain(c - 1)) off += u[c - 1];
    }
    if (couple_y) {
      if (j + 1 < g.ny() && g.in_domain(c + nx)) off += u[c + nx];
      if (j > 0 && g.in_domain(c - nx)) off += u[c - nx];
    }
    out[c] = s.diag[c] * u[c] - s.inv_h2 * off;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_potential(const ScalarField& V) {
  const Grid& g = V.grid();
  for (CellIndex c = 0; c < g.size(); ++c) {
    if (g.in_domain(c) && V[c] < 0.0)
      throw PreconditionError("potential is negative at cell " + std::to_string(c));
  }
}

}  // namespace

std::vector<double> apply_landscape_operator(const ScalarField& V, std::span<const double> u) {
  const Grid& g = V.grid();
  if (u.size() != g.size()) throw PreconditionError("vector size does not match grid");
  const Stencil s = build_stencil(V);
  std::vector<double> out(g.size());
  apply(g, s, u, out);
  return out;
}

LandscapeSolution solve_landscape(const ScalarField& V, const LandscapeOptions& options) {
  if (!(options.tol > 0.0)) throw PreconditionError("landscape tolerance must be positive");
  check_potential(V);
  const Grid& g = V.grid();
  const std::size_t n = g.size();
  const int max_iter = options.max_iter > 0 ? options.max_iter : 10 * g.nx() * g.ny();
  const Stencil s = build_stencil(V);

  std::vector<double> b(n, 0.0);
  for (CellIndex c = 0; c < n; ++c) b[c] = g.in_domain(c) ? 1.0 : 0.0;
  const double b_norm = std::sqrt(dot(b, b));

  // Preconditioned CG from x = 0.
  std::vector<double> x(n, 0.0), r = b, z(n, 0.0), p(n, 0.0), q(n, 0.0);
  for (CellIndex c = 0; c < n; ++c) z[c] = g.in_domain(c) ? r[c] / s.diag[c] : 0.0;
  p = z;
  double rz = dot(r, z);
  double r_norm = b_norm;
  int it = 0;
  // Iterate below tol so the true residual also meets it.
  while (r_norm > 0.5 * options.tol * b_norm && it < max_iter) {
    ++it;
    apply(g, s, p, q);
    const double alpha = rz / dot(p, q);
    for (CellIndex c = 0; c < n; ++c) {
      x[c] += alpha * p[c];
      r[c] -= alpha * q[c];
    }
    for (CellIndex c = 0; c < n; ++c) z[c] = g.in_domain(c) ? r[c] / s.diag[c] : 0.0;
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (CellIndex c = 0; c < n; ++c) p[c] = z[c] + beta * p[c];
    r_norm = std::sqrt(dot(r, r));
  }

  // Report the true residual, not the recursively updated one.
  apply(g, s, x, q);
  double res2 = 0.0;
  for (CellIndex c = 0; c < n; ++c) res2 += (b[c] - q[c]) * (b[c] - q[c]);
  const double rel = std::sqrt(res2) / b_norm;
  if (rel > options.tol) {
    throw ConvergenceError("landscape solve stopped at relative residual " + std::to_string(rel) +
                           " after " + std::to_string(it) + " iterations");
  }
  return {ScalarField(V.grid_ptr(), std::move(x)), it, rel};
}

ScalarField build_weight(const ScalarField& w_or_field, const WeightSpec& spec) {
  spec.validate();
  const Grid& g = w_or_field.grid();
  std::vector<double> a(g.size(), 0.0);
  ScalarField::WeightTag tag{spec.delta, spec.cap};
  for (CellIndex c = 0; c < g.size(); ++c) {
    if (!g.in_domain(c)) continue;
    const double raw = spec.source == WeightSource::Landscape ? spec.delta + w_or_field[c] : w_or_field[c];
    if (raw < spec.delta) ++tag.clamped_low;
    if (raw > spec.cap) ++tag.clamped_high;
    a[c] = std::clamp(raw, spec.delta, spec.cap);
  }
  ScalarField out(w_or_field.grid_ptr(), std::move(a));
  out.tag_as_weight(tag);
  return out;
}

}  // namespace wpart
