#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "wpart/energy.hpp"
#include "wpart/error.hpp"
#include "wpart/landscape.hpp"

using namespace wpart;

namespace {

EnergySpec quadratic(double lambda, std::vector<double> targets = {}) {
  EnergySpec s;
  s.bulk.lambda = lambda;
  s.bulk.target_volumes = std::move(targets);
  return s;
}

// Independent evaluation of F straight from the definition: twice the
// weighted length of the faces, visiting every ordered neighbour pair.
double reference_F(const Partition& p, const ScalarField& a) {
  const Grid& g = p.grid();
  double twice = 0.0;
  for (CellIndex c = 0; c < g.size(); ++c) {
    std::array<CellIndex, 4> nb{};
    const int k = g.neighbors(c, nb);
    if (!g.in_domain(c)) continue;
    for (int n = 0; n < k; ++n)
      if (p[c] != p[nb[n]]) twice += 0.5 * (a[c] + a[nb[n]]) * g.h();
  }
  return twice;  // each face seen from both sides
}

}  // namespace

TEST_CASE("interface_energy examples") {
  SUBCASE("single phase") {
    auto g = make_grid(5, 5, 1.0);
    const auto f = interface_energy(Partition(g, 3), ScalarField(g, 0.5));
    CHECK(f.F == 0.0);
    CHECK(f.per_phase == std::vector<double>{0, 0, 0});
  }
  SUBCASE("2x1 split carries the factor two") {
    auto g = make_grid(2, 1, 1.0);
    const auto f = interface_energy(Partition(g, 2, std::vector<int>{1, 2}), ScalarField(g, 1.0));
    CHECK(f.F == 2.0);
    CHECK(f.per_phase == std::vector<double>{1.0, 1.0});
  }
  SUBCASE("3x3 checkerboard") {
    auto g = make_grid(3, 3, 1.0);
    const auto f = interface_energy(test::checkerboard(g), ScalarField(g, 1.0));
    CHECK(f.F == 24.0);
    CHECK(f.unweighted_length == 12.0);
  }
}

TEST_CASE("bulk_energy examples") {
  auto g4 = make_grid(4, 4, 1.0);
  BulkTermSpec spec;
  spec.lambda = 1.0;
  CHECK(bulk_energy(test::vertical_halves(g4), spec) == 0.0);
  spec.target_volumes = {8, 8};
  CHECK(bulk_energy(Partition(g4, 2), spec) == 128.0);

  auto g3 = make_grid(3, 3, 1.0);
  auto p = test::from_rows(g3, 3, {{1, 1, 1}, {1, 1, 2}, {2, 2, 2}});
  BulkTermSpec three;
  three.lambda = 0.5;
  three.target_volumes = {3, 3, 3};
  CHECK(bulk_energy(p, three) == doctest::Approx(7.0));
}

TEST_CASE("bulk_energy generic and weighted kinds") {
  auto g = make_grid(4, 4, 1.0);
  const auto halves = test::vertical_halves(g);
  BulkTermSpec generic;
  generic.kind = BulkKind::VolumeGenericH;
  CHECK_THROWS_AS(bulk_energy(halves, generic), PreconditionError);
  generic.h_table = PiecewiseLinear{{0, 8, 16}, {10, 0, 10}};
  CHECK(bulk_energy(halves, generic) == 0.0);
  CHECK(bulk_energy(Partition(g, 2), generic) == 20.0);
  generic.h_table = PiecewiseLinear{{0, 4}, {0, 1}};  // extrapolates linearly
  CHECK(bulk_energy(halves, generic) == doctest::Approx(4.0));

  BulkTermSpec weighted;
  weighted.kind = BulkKind::WeightedVolume;
  weighted.lambda = 2.0;
  CHECK_THROWS_AS(bulk_energy(halves, weighted), PreconditionError);
  std::vector<double> q(g->size());
  for (CellIndex c = 0; c < g->size(); ++c) q[c] = g->col(c) < 2 ? 1.0 : 3.0;
  weighted.q_weight = ScalarField(g, q);
  // masses 8 and 24, default targets 16 each
  CHECK(bulk_energy(halves, weighted) == doctest::Approx(2.0 * (64 + 64)));
  weighted.h_table = PiecewiseLinear{{0, 32}, {0, 32}};
  CHECK(bulk_energy(halves, weighted) == doctest::Approx(2.0 * 32));
}

TEST_CASE("bulk spec validation") {
  auto g = make_grid(2, 2, 1.0);
  BulkTermSpec spec;
  spec.alpha = 0.5;
  CHECK_THROWS_AS(bulk_energy(Partition(g, 2), spec), PreconditionError);
  spec.alpha = 1.0;
  spec.target_volumes = {1.0};
  CHECK_THROWS_AS(bulk_energy(Partition(g, 2), spec), PreconditionError);
  spec.target_volumes = {-1.0, 1.0};
  CHECK_THROWS_AS(bulk_energy(Partition(g, 2), spec), PreconditionError);
}

TEST_CASE("total_energy examples") {
  auto g = make_grid(5, 5, 1.0);
  CHECK(total_energy(Partition(g, 2), ScalarField(g, 0.3), quadratic(0.0)).total == 0.0);

  auto g21 = make_grid(2, 1, 1.0);
  CHECK(total_energy(Partition(g21, 2, std::vector<int>{1, 2}), ScalarField(g21, 1.0), quadratic(0.0)).total == 2.0);

  auto g4 = make_grid(4, 4, 1.0);
  const auto b = total_energy(test::vertical_halves(g4), ScalarField(g4, 0.5), quadratic(1.0, {8, 8}));
  CHECK(b.interface_term == 4.0);
  CHECK(b.bulk_term == 0.0);
  CHECK(b.total == 4.0);
}

TEST_CASE("factor-two identity and reference F on random partitions") {
  std::mt19937_64 rng(17);
  auto g = make_grid(9, 8, 0.37, disc_mask(9, 8, 0.37));
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = test::random_partition(g, 4, rng);
    const auto a = test::random_field(g, 0.1, 1.0, rng);
    const auto b = total_energy(p, a, quadratic(0.3));
    double sum = 0.0;
    for (double v : b.per_phase_perimeter) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == b.interface_term);
    CHECK(b.total == b.interface_term + b.bulk_term);
    CHECK(b.interface_term == doctest::Approx(reference_F(p, a)).epsilon(1e-13));
  }
}

TEST_CASE("energy_delta examples") {
  auto g = make_grid(5, 5, 1.0);
  const ScalarField a(g, 1.0);
  Partition uniform(g, 2);
  const std::vector<CellIndex> centre{g->index(2, 2)};
  CHECK(energy_delta(uniform, centre, 1, a, quadratic(0.0)) == 0.0);
  CHECK(energy_delta(uniform, centre, 2, a, quadratic(0.0)) == 8.0);
  CHECK_THROWS_AS(energy_delta(uniform, centre, 3, a, quadratic(0.0)), PreconditionError);
}

TEST_CASE("energy_delta matches full re-evaluation on random moves") {
  std::mt19937_64 rng(1234);
  auto g = make_grid(6, 6, 1.0);
  const auto a = test::random_field(g, 0.1, 1.0, rng);
  auto spec = quadratic(0.7);
  spec.label_weights = {1.0, 0.25, 1.0};
  auto p = test::random_partition(g, 3, rng);
  std::uniform_int_distribution<CellIndex> cell(0, g->size() - 1);
  std::uniform_int_distribution<int> label(1, 3);
  for (int move = 0; move < 1000; ++move) {
    const std::vector<CellIndex> cells{cell(rng)};
    const int l = label(rng);
    Partition q = p;
    q.set(cells[0], l);
    const double expected = total_energy(q, a, spec).total - total_energy(p, a, spec).total;
    CHECK(std::abs(energy_delta(p, cells, l, a, spec) - expected) <= 1e-12);
    if (move % 3 == 0) p = q;
  }
}

TEST_CASE("EnergyState deltas agree with full evaluation for ball relabelings") {
  std::mt19937_64 rng(77);
  auto g = make_grid(12, 10, 0.1);
  const auto a = test::random_field(g, 0.05, 1.0, rng);
  std::vector<EnergySpec> specs{quadratic(25.0)};
  EnergySpec weighted;
  weighted.bulk.kind = BulkKind::WeightedVolume;
  weighted.bulk.lambda = 3.0;
  weighted.bulk.q_weight = test::random_field(g, 0.0, 2.0, rng);
  specs.push_back(weighted);
  EnergySpec generic;
  generic.bulk.kind = BulkKind::VolumeGenericH;
  generic.bulk.h_table = PiecewiseLinear{{0.0, 0.3, 1.2}, {1.0, 0.0, 2.0}};
  specs.push_back(generic);

  for (const auto& spec : specs) {
    EnergyState state(test::random_partition(g, 3, rng), a, spec);
    std::uniform_int_distribution<CellIndex> cell(0, g->size() - 1);
    std::uniform_real_distribution<double> radius(0.1, 0.4);
    std::uniform_int_distribution<int> label(1, 3);
    for (int move = 0; move < 200; ++move) {
      std::vector<std::pair<CellIndex, int>> changes;
      for (CellIndex c : g->cells_in_ball(g->center(cell(rng)), radius(rng))) changes.emplace_back(c, label(rng));
      const double before = state.breakdown().total;
      const double predicted = state.delta(changes);
      state.apply(changes);
      CHECK(std::abs(state.breakdown().total - before - predicted) <= 1e-12);
      CHECK(std::abs(state.bulk_term() - state.breakdown().bulk_term) <= 1e-12);
    }
  }
}

TEST_CASE("energy is equivariant under label permutation with targets") {
  std::mt19937_64 rng(8);
  auto g = make_grid(7, 6, 1.0);
  const auto a = test::random_field(g, 0.1, 1.0, rng);
  const std::vector<int> perm{2, 3, 1};  // label l -> perm[l-1]
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = test::random_partition(g, 3, rng);
    const std::vector<double> targets{10.0, 20.0, 12.0};
    std::vector<double> permuted_targets(3);
    for (int l = 1; l <= 3; ++l) permuted_targets[static_cast<std::size_t>(perm[l - 1] - 1)] = targets[l - 1];
    std::vector<int> relabeled(p.labels().begin(), p.labels().end());
    for (auto& l : relabeled) l = perm[static_cast<std::size_t>(l - 1)];
    const auto e1 = total_energy(p, a, quadratic(0.4, targets));
    const auto e2 = total_energy(Partition(g, 3, relabeled), a, quadratic(0.4, permuted_targets));
    CHECK(e1.interface_term == doctest::Approx(e2.interface_term).epsilon(1e-14));
    CHECK(e1.bulk_term == doctest::Approx(e2.bulk_term).epsilon(1e-14));
  }
}

TEST_CASE("F is monotone in the weight") {
  std::mt19937_64 rng(19);
  auto g = make_grid(8, 8, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a1 = test::random_field(g, 0.1, 0.6, rng);
    std::vector<double> v2(a1.values().begin(), a1.values().end());
    for (auto& v : v2) v += 0.3;
    const auto p = test::random_partition(g, 3, rng);
    CHECK(interface_energy(p, a1).F <= interface_energy(p, ScalarField(g, v2)).F);
  }
}

TEST_CASE("verify_holder_bound") {
  std::mt19937_64 rng(31);
  auto g = make_grid(5, 5, 1.0);
  BulkTermSpec spec;
  spec.lambda = 0.8;
  spec.alpha = 1.0;
  spec.C_alpha = 2.0 * spec.lambda * g->domain_area();

  std::vector<std::pair<Partition, Partition>> pairs;
  for (int k = 0; k < 200; ++k) {
    auto p = test::random_partition(g, 3, rng);
    pairs.emplace_back(p, k % 4 == 0 ? p : test::random_partition(g, 3, rng));
  }
  // Adversarial: all-in-one against one flipped cell.
  Partition all(g, 3);
  Partition one = all;
  one.set(0, 2);
  pairs.emplace_back(all, one);
  const auto report = verify_holder_bound(pairs, spec);
  CHECK(report.pairs == pairs.size());
  CHECK(report.violations.empty());
  CHECK(report.tightest_constant <= spec.C_alpha);
  CHECK(report.tightest_constant > 0.0);

  // Identical pairs never violate even with C = 0.
  BulkTermSpec zero = spec;
  zero.C_alpha = 0.0;
  std::vector<std::pair<Partition, Partition>> same{{all, all}, {one, one}};
  CHECK(verify_holder_bound(same, zero).violations.empty());
  CHECK_FALSE(verify_holder_bound(pairs, zero).violations.empty());
}
