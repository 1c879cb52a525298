#include "wpart/watershed.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "wpart/error.hpp"

namespace wpart {

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // Keeps the smaller root so region identities stay deterministic.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
};

}  // namespace

std::vector<int> watershed_minus_w(const ScalarField& w, int max_regions) {
  if (max_regions < 1) throw PreconditionError("watershed needs at least one region");
  const Grid& g = w.grid();
  const std::size_t n = g.size();

  // Visit cells from high w to low so every downhill target (higher w) is resolved first.
  std::vector<CellIndex> order;
  order.reserve(g.domain_cell_count());
  for (CellIndex c = 0; c < n; ++c)
    if (g.in_domain(c)) order.push_back(c);
  std::stable_sort(order.begin(), order.end(), [&](CellIndex a, CellIndex b) { return w[a] > w[b]; });

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> basin(n, kNone);
  std::vector<CellIndex> roots;
  std::array<CellIndex, 4> nb{};
  for (CellIndex c : order) {
    const int k = g.neighbors(c, nb);
    CellIndex best = c;
    for (int i = 0; i < k; ++i) {
      const CellIndex d = nb[i];
      if (w[d] > w[best] || (w[d] == w[best] && best != c && d < best)) best = d;
    }
    if (best == c) {
      basin[c] = roots.size();
      roots.push_back(c);
    } else {
      basin[c] = basin[best];
    }
  }

  // Pass heights between adjacent basins, measured on -w.
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (CellIndex c = 0; c < n; ++c) {
    if (!g.in_domain(c)) continue;
    const int k = g.neighbors(c, nb);
    for (int i = 0; i < k; ++i) {
      const CellIndex d = nb[i];
      if (d < c || basin[c] == basin[d]) continue;
      const double pass = std::max(-w[c], -w[d]);
      edges.emplace_back(pass, std::min(basin[c], basin[d]), std::max(basin[c], basin[d]));
    }
  }
  std::sort(edges.begin(), edges.end());

  DisjointSets sets(roots.size());
  std::size_t regions = roots.size();
  for (const auto& [pass, a, b] : edges) {
    if (regions <= static_cast<std::size_t>(max_regions)) break;
    if (sets.unite(a, b)) --regions;
  }

  // Number regions by their smallest cell.
  std::vector<int> region_label(roots.size(), 0);
  std::vector<int> labels(n, 0);
  int next = 0;
  for (CellIndex c = 0; c < n; ++c) {
    if (!g.in_domain(c)) continue;
    const std::size_t r = sets.find(basin[c]);
    if (region_label[r] == 0) region_label[r] = ++next;
    labels[c] = std::min(region_label[r], max_regions);
  }
  return labels;
}

}  // namespace wpart
