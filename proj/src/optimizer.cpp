#include "wpart/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wpart/error.hpp"
#include "wpart/watershed.hpp"

namespace wpart {

namespace {

// Moves must beat rounding noise on the current energy scale to count as improving.
double improvement_threshold(double J) { return 1e-12 * (1.0 + std::abs(J)); }

using Changes = std::vector<std::pair<CellIndex, int>>;

}  // namespace

void OptimizerConfig::validate(const Grid& g) const {
  if (max_sweeps < 0) throw PreconditionError("max_sweeps must be non-negative");
  if (pour_moves_per_sweep < 0) throw PreconditionError("pour_moves_per_sweep must be non-negative");
  if (radius_min(g) < g.h()) throw PreconditionError("r_min must be at least h");
  if (radius_max(g) < radius_min(g)) throw PreconditionError("r_max must be at least r_min");
  if (annealing) {
    if (!(annealing->T0 > 0.0)) throw PreconditionError("annealing T0 must be positive");
    if (!(annealing->decay > 0.0 && annealing->decay < 1.0)) throw PreconditionError("annealing decay must lie in (0, 1)");
  }
  if (lloyd_iterations < 0) throw PreconditionError("lloyd_iterations must be non-negative");
  if (restarts < 1) throw PreconditionError("restarts must be at least 1");
}

int PourMove::target_of(int label) const {
  for (std::size_t k = 0; k < sources.size(); ++k)
    if (sources[k] == label) return targets[k];
  return 0;
}

void PourMove::validate(int n_labels, double h) const {
  if (sources.empty() || sources.size() >= static_cast<std::size_t>(n_labels))
    throw PreconditionError("pour sources must be a proper non-empty label subset");
  if (targets.size() != sources.size()) throw PreconditionError("pour needs one target per source");
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (sources[k] < 1 || sources[k] > n_labels || targets[k] < 1 || targets[k] > n_labels)
      throw PreconditionError("pour label out of range");
    if (std::find(sources.begin(), sources.end(), targets[k]) != sources.end())
      throw PreconditionError("pour target lies in the source set");
    if (std::count(sources.begin(), sources.end(), sources[k]) != 1)
      throw PreconditionError("pour sources must be distinct");
  }
  if (radius < h) throw PreconditionError("pour radius must be at least h");
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

std::vector<int> voronoi_labels(const Grid& g, const std::vector<Point>& seeds) {
  std::vector<int> labels(g.size(), 0);
  for (CellIndex c = 0; c < g.size(); ++c) {
    if (!g.in_domain(c)) continue;
    const Point x = g.center(c);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const double dx = x.x - seeds[k].x;
      const double dy = x.y - seeds[k].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        labels[c] = static_cast<int>(k) + 1;
      }
    }
  }
  return labels;
}

std::vector<int> voronoi_init(const Grid& g, int n_labels, const OptimizerConfig& config, Rng& rng) {
  if (static_cast<std::size_t>(n_labels) > g.domain_cell_count())
    throw PreconditionError("more labels than in-domain cells for voronoi_seeds");
  std::vector<CellIndex> domain;
  for (CellIndex c = 0; c < g.size(); ++c)
    if (g.in_domain(c)) domain.push_back(c);
  // Partial Fisher-Yates: the first n_labels entries become distinct seed cells.
  for (std::size_t k = 0; k < static_cast<std::size_t>(n_labels); ++k) {
    const std::size_t j = k + rng.index(domain.size() - k);
    std::swap(domain[k], domain[j]);
  }
  std::vector<Point> seeds;
  for (int k = 0; k < n_labels; ++k) seeds.push_back(g.center(domain[static_cast<std::size_t>(k)]));

  auto labels = voronoi_labels(g, seeds);
  for (int it = 0; it < config.lloyd_iterations; ++it) {
    std::vector<Point> sum(seeds.size());
    std::vector<std::size_t> count(seeds.size(), 0);
    for (CellIndex c = 0; c < g.size(); ++c) {
      if (labels[c] == 0) continue;
      const auto k = static_cast<std::size_t>(labels[c] - 1);
      const Point x = g.center(c);
      sum[k].x += x.x;
      sum[k].y += x.y;
      ++count[k];
    }
    for (std::size_t k = 0; k < seeds.size(); ++k)
      if (count[k] > 0) seeds[k] = {sum[k].x / count[k], sum[k].y / count[k]};
    labels = voronoi_labels(g, seeds);
  }
  return labels;
}

}  // namespace

Partition initialize(const GridPtr& grid, int n_labels, const ScalarField& field, const OptimizerConfig& config) {
  if (n_labels < 1) throw PreconditionError("at least one label is required");
  const Grid& g = *grid;
  if (n_labels == 1) return Partition(grid, 1);
  Rng rng(config.seed);
  switch (config.init) {
    case InitKind::VoronoiSeeds:
      return Partition(grid, n_labels, voronoi_init(g, n_labels, config, rng));
    case InitKind::Random: {
      std::vector<int> labels(g.size(), 0);
      for (CellIndex c = 0; c < g.size(); ++c)
        if (g.in_domain(c)) labels[c] = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(n_labels)));
      return Partition(grid, n_labels, std::move(labels));
    }
    case InitKind::Stripes: {
      std::vector<int> labels(g.size(), 0);
      for (CellIndex c = 0; c < g.size(); ++c)
        labels[c] = 1 + static_cast<int>(static_cast<long long>(g.col(c)) * n_labels / g.nx());
      return Partition(grid, n_labels, std::move(labels));
    }
    case InitKind::WatershedMinusW:
      if (!field.grid().same_shape(g)) throw PreconditionError("watershed field lives on a different grid");
      return Partition(grid, n_labels, watershed_minus_w(field, n_labels));
  }
  throw PreconditionError("unknown init kind");
}

// ---------------------------------------------------------------------------
// Pour moves

Partition apply_pour(const Partition& p, const PourMove& move) {
  const Grid& g = p.grid();
  move.validate(p.n_labels(), g.h());
  if (move.center >= g.size()) throw PreconditionError("pour center outside the grid");
  Partition out = p;
  for (CellIndex c : g.cells_in_ball(g.center(move.center), move.radius)) {
    const int target = move.target_of(p[c]);
    if (target != 0) out.set(c, target);
  }
  return out;
}

std::vector<PourProposal> pour_candidates(const EnergyState& state, CellIndex center, double radius) {
  const Partition& p = state.partition();
  const Grid& g = p.grid();
  const int n_labels = p.n_labels();
  const auto ball = g.cells_in_ball(g.center(center), radius);

  std::vector<std::size_t> in_ball(static_cast<std::size_t>(n_labels) + 1, 0);
  for (CellIndex c : ball) ++in_ball[static_cast<std::size_t>(p[c])];
  int majority = 1;
  for (int l = 2; l <= n_labels; ++l)
    if (in_ball[static_cast<std::size_t>(l)] > in_ball[static_cast<std::size_t>(majority)]) majority = l;

  std::vector<PourProposal> out;
  auto emit = [&](PourMove move, const Changes& changes) {
    if (changes.empty()) return;
    const double d = state.delta(changes);
    out.push_back({std::move(move), d});
  };

  // (a) everything into the majority label.
  {
    PourMove move{center, radius, {}, {}};
    for (int l = 1; l <= n_labels; ++l) {
      if (l == majority) continue;
      move.sources.push_back(l);
      move.targets.push_back(majority);
    }
    Changes changes;
    for (CellIndex c : ball)
      if (p[c] != majority) changes.emplace_back(c, majority);
    emit(std::move(move), changes);
  }

  // (b) each minority label into the label it shares most interface weight with inside the ball.
  std::vector<std::uint8_t> member(g.size(), 0);
  for (CellIndex c : ball) member[c] = 1;
  for (int i = 1; i <= n_labels; ++i) {
    if (i == majority || in_ball[static_cast<std::size_t>(i)] == 0) continue;
    std::vector<double> contact(static_cast<std::size_t>(n_labels) + 1, 0.0);
    std::array<CellIndex, 4> nb{};
    for (CellIndex c : ball) {
      if (p[c] != i) continue;
      const int k = g.neighbors(c, nb);
      for (int n = 0; n < k; ++n) {
        const CellIndex d = nb[n];
        if (member[d] && p[d] != i) contact[static_cast<std::size_t>(p[d])] += state.face_summand_between(c, d);
      }
    }
    int best = 0;
    for (int j = 1; j <= n_labels; ++j)
      if (j != i && contact[static_cast<std::size_t>(j)] > 0.0 &&
          (best == 0 || contact[static_cast<std::size_t>(j)] > contact[static_cast<std::size_t>(best)]))
        best = j;
    if (best == 0) continue;
    Changes changes;
    for (CellIndex c : ball)
      if (p[c] == i) changes.emplace_back(c, best);
    emit(PourMove{center, radius, {i}, {best}}, changes);
  }
  return out;
}

namespace {

std::optional<PourProposal> best_candidate(std::vector<PourProposal> candidates) {
  if (candidates.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k)
    if (candidates[k].delta_J < candidates[best].delta_J) best = k;
  return std::move(candidates[best]);
}

std::optional<PourProposal> propose_from_faces(const EnergyState& state, const std::vector<InterfaceFace>& faces,
                                               const OptimizerConfig& config, Rng& rng) {
  if (faces.empty() || state.nontrivial_phases() < 2) return std::nullopt;
  const Grid& g = state.partition().grid();
  const InterfaceFace& f = faces[rng.index(faces.size())];
  const CellIndex center = (rng.next() & 1u) ? f.cell_b : f.cell_a;
  const double r0 = config.radius_min(g);
  const double r1 = config.radius_max(g);
  const double radius = r0 + rng.uniform() * (r1 - r0);
  return best_candidate(pour_candidates(state, center, radius));
}

}  // namespace

std::optional<PourProposal> propose_pour(const EnergyState& state, const OptimizerConfig& config, Rng& rng) {
  if (state.nontrivial_phases() < 2) return std::nullopt;
  return propose_from_faces(state, extract_interface(state.partition()), config, rng);
}

// ---------------------------------------------------------------------------
// ICM

namespace {

// Best label for c: strict improvement beyond the threshold, ties to the smaller label.
std::pair<int, double> best_label(const EnergyState& state, CellIndex c, double threshold) {
  const int current = state.partition()[c];
  int best = current;
  double best_delta = -threshold;
  for (int l = 1; l <= state.partition().n_labels(); ++l) {
    if (l == current) continue;
    const double d = state.delta_single(c, l);
    if (d < best_delta) {
      best_delta = d;
      best = l;
    }
  }
  return {best, best == current ? 0.0 : best_delta};
}

struct SweepStats {
  std::size_t flips = 0;
  double dJ = 0.0;
};

SweepStats sweep(EnergyState& state, double J, std::optional<double> temperature, Rng* rng) {
  const Grid& g = state.partition().grid();
  const int n_labels = state.partition().n_labels();
  SweepStats stats;
  for (int parity = 0; parity < 2; ++parity) {
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = (j + parity) % 2; i < g.nx(); i += 2) {
        const CellIndex c = g.index(i, j);
        if (!g.in_domain(c)) continue;
        const auto [label, delta] = best_label(state, c, improvement_threshold(J + stats.dJ));
        if (label != state.partition()[c]) {
          state.apply_single(c, label);
          stats.dJ += delta;
          ++stats.flips;
        } else if (temperature && n_labels > 1) {
          // Metropolis step on a random other label.
          int l = 1 + static_cast<int>(rng->index(static_cast<std::size_t>(n_labels - 1)));
          if (l >= state.partition()[c]) ++l;
          const double d = state.delta_single(c, l);
          if (rng->uniform() < std::exp(-d / *temperature)) {
            state.apply_single(c, l);
            stats.dJ += d;
            ++stats.flips;
          }
        }
      }
    }
  }
  return stats;
}

}  // namespace

std::size_t icm_sweep(EnergyState& state) {
  return sweep(state, state.breakdown().total, std::nullopt, nullptr).flips;
}

SweepResult icm_sweep(const Partition& p, const ScalarField& a, const EnergySpec& spec) {
  EnergyState state(p, a, spec);
  const std::size_t flips = icm_sweep(state);
  return {state.partition(), flips > 0};
}

// ---------------------------------------------------------------------------
// Minimization

MinimizeResult minimize_from(const Partition& start, const ScalarField& a, const EnergySpec& spec,
                             const OptimizerConfig& config) {
  const Grid& g = start.grid();
  config.validate(g);
  EnergyState state(start, a, spec);
  // Keep the pour stream independent of the initializer's draws.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  EnergyTrace trace;
  EnergyBreakdown current = state.breakdown();
  trace.push_back({0, current.interface_term, current.bulk_term, current.total, 0, 0,
                   config.annealing ? config.annealing->T0 : 0.0});
  Partition best = state.partition();
  EnergyBreakdown best_energy = current;

  if (start.n_labels() == 1) return {best, trace, best_energy};

  for (int s = 1; s <= config.max_sweeps; ++s) {
    std::optional<double> temperature;
    if (config.annealing) temperature = config.annealing->T0 * std::pow(config.annealing->decay, s - 1);

    const SweepStats icm = sweep(state, current.total, temperature, &rng);
    double J = current.total + icm.dJ;

    std::size_t pours = 0;
    if (config.pour_moves_per_sweep > 0 && state.nontrivial_phases() >= 2) {
      auto faces = extract_interface(state.partition());
      for (int k = 0; k < config.pour_moves_per_sweep; ++k) {
        auto proposal = propose_from_faces(state, faces, config, rng);
        if (!proposal) break;
        const double d = proposal->delta_J;
        bool accept = d < -improvement_threshold(J);
        if (!accept && temperature) accept = rng.uniform() < std::exp(-d / *temperature);
        if (!accept) continue;
        Changes changes;
        const Grid& grid = state.partition().grid();
        for (CellIndex c : grid.cells_in_ball(grid.center(proposal->move.center), proposal->move.radius)) {
          const int target = proposal->move.target_of(state.partition()[c]);
          if (target != 0) changes.emplace_back(c, target);
        }
        state.apply(changes);
        J += d;
        ++pours;
        faces = extract_interface(state.partition());
      }
    }

    current = state.breakdown();
    trace.push_back({s, current.interface_term, current.bulk_term, current.total, icm.flips, pours,
                     temperature.value_or(0.0)});
    if (current.total < best_energy.total) {
      best = state.partition();
      best_energy = current;
    }
    if (icm.flips == 0 && pours == 0) break;
  }
  return {best, trace, best_energy};
}

MinimizeResult minimize(const GridPtr& grid, int n_labels, const ScalarField& a, const EnergySpec& spec,
                        const OptimizerConfig& config) {
  config.validate(*grid);
  MinimizeResult best = minimize_from(initialize(grid, n_labels, a, config), a, spec, config);
  for (int k = 1; k < config.restarts; ++k) {
    OptimizerConfig run = config;
    // splitmix64 step, so restart seeds do not collide with neighbouring user seeds.
    std::uint64_t z = config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    run.seed = z ^ (z >> 31);
    MinimizeResult r = minimize_from(initialize(grid, n_labels, a, run), a, spec, run);
    if (r.energy.total < best.energy.total) best = std::move(r);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Cleaning

Partition clean(const Partition& p, const ScalarField& a, const EnergySpec& spec, double min_component_volume) {
  const Grid& g = p.grid();
  const double threshold = min_component_volume > 0.0 ? min_component_volume : 4.0 * g.cell_area();
  EnergyState state(p, a, spec);
  double J = state.breakdown().total;
  std::array<CellIndex, 4> nb{};
  // Cells moved by a zero-delta absorption may only move again on strict improvement,
  // which rules out exchanges between tiny components.
  std::vector<std::uint8_t> moved(g.size(), 0);
  const std::size_t max_passes = g.domain_cell_count() + 1;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (int label = 1; label <= p.n_labels(); ++label) {
      for (const auto& component : connected_components(state.partition(), label)) {
        if (static_cast<double>(component.size()) * g.cell_area() >= threshold) continue;
        std::vector<double> contact(static_cast<std::size_t>(p.n_labels()) + 1, 0.0);
        for (CellIndex c : component) {
          const int k = g.neighbors(c, nb);
          for (int n = 0; n < k; ++n) {
            const int l = state.partition()[nb[n]];
            if (l != label) contact[static_cast<std::size_t>(l)] += state.face_summand_between(c, nb[n]);
          }
        }
        int target = 0;
        for (int l = 1; l <= p.n_labels(); ++l)
          if (l != label && contact[static_cast<std::size_t>(l)] > 0.0 &&
              (target == 0 || contact[static_cast<std::size_t>(l)] > contact[static_cast<std::size_t>(target)]))
            target = l;
        if (target == 0) continue;
        Changes changes;
        for (CellIndex c : component) changes.emplace_back(c, target);
        const double d = state.delta(changes);
        const bool revisits = std::any_of(component.begin(), component.end(), [&](CellIndex c) { return moved[c] != 0; });
        const double limit = revisits ? -improvement_threshold(J) : improvement_threshold(J);
        if (d <= limit) {
          state.apply(changes);
          for (CellIndex c : component) moved[c] = 1;
          J += d;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return state.partition();
}

}  // namespace wpart
