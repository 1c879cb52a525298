#include "wpart/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wpart/error.hpp"

namespace wpart {

Grid::Grid(int nx, int ny, double h, std::vector<std::uint8_t> mask)
    : nx_(nx), ny_(ny), h_(h), mask_(std::move(mask)) {
  if (nx < 1 || ny < 1) throw PreconditionError("grid dimensions must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("grid spacing h must be positive");
  const auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  if (mask_.empty()) mask_.assign(n, 1);
  if (mask_.size() != n) {
    throw PreconditionError("mask has " + std::to_string(mask_.size()) + " entries, expected " +
                            std::to_string(n));
  }
  for (auto& m : mask_) m = m ? 1 : 0;
  domain_cells_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
  if (domain_cells_ == 0) throw PreconditionError("mask selects no cells");
}

int Grid::neighbors(CellIndex c, std::array<CellIndex, 4>& out) const noexcept {
  const int i = col(c);
  const int j = row(c);
  int k = 0;
  if (i + 1 < nx_ && mask_[c + 1]) out[k++] = c + 1;
  if (i > 0 && mask_[c - 1]) out[k++] = c - 1;
  if (j + 1 < ny_ && mask_[c + nx_]) out[k++] = c + nx_;
  if (j > 0 && mask_[c - nx_]) out[k++] = c - nx_;
  return k;
}

std::vector<CellIndex> Grid::cells_in_ball(Point p, double r, bool domain_only) const {
  std::vector<CellIndex> out;
  if (r < 0.0) return out;
  const int j0 = std::max(0, static_cast<int>(std::floor((p.y - r) / h_ - 0.5)));
  const int j1 = std::min(ny_ - 1, static_cast<int>(std::ceil((p.y + r) / h_ - 0.5)));
  const int i0 = std::max(0, static_cast<int>(std::floor((p.x - r) / h_ - 0.5)));
  const int i1 = std::min(nx_ - 1, static_cast<int>(std::ceil((p.x + r) / h_ - 0.5)));
  const double r2 = r * r;
  for (int j = j0; j <= j1; ++j) {
    const double dy = (j + 0.5) * h_ - p.y;
    for (int i = i0; i <= i1; ++i) {
      const double dx = (i + 0.5) * h_ - p.x;
      if (dx * dx + dy * dy > r2) continue;
      const CellIndex c = index(i, j);
      if (domain_only && !mask_[c]) continue;
      out.push_back(c);
    }
  }
  return out;
}

bool Grid::same_shape(const Grid& other) const noexcept {
  return this == &other ||
         (nx_ == other.nx_ && ny_ == other.ny_ && h_ == other.h_ && mask_ == other.mask_);
}

GridPtr make_grid(int nx, int ny, double h, std::vector<std::uint8_t> mask) {
  return std::make_shared<const Grid>(nx, ny, h, std::move(mask));
}

std::vector<std::uint8_t> disc_mask(int nx, int ny, double h) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0);
  const Point center{0.5 * nx * h, 0.5 * ny * h};
  const double radius = 0.5 * std::min(nx, ny) * h;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Point c{(i + 0.5) * h, (j + 0.5) * h};
      mask[static_cast<std::size_t>(j) * nx + i] = distance(c, center) <= radius ? 1 : 0;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw PreconditionError("field without grid");
  if (values_.size() != grid_->size()) throw PreconditionError("field size does not match grid");
  for (CellIndex c = 0; c < values_.size(); ++c) {
    if (!grid_->in_domain(c)) {
      values_[c] = 0.0;
    } else if (!std::isfinite(values_[c])) {
      throw PreconditionError("field value at cell " + std::to_string(c) + " is not finite");
    }
  }
}

ScalarField::ScalarField(GridPtr grid, double constant)
    : ScalarField(grid, std::vector<double>(grid ? grid->size() : 0, constant)) {}

double ScalarField::min_in_domain() const {
  double m = std::numeric_limits<double>::infinity();
  for (CellIndex c = 0; c < values_.size(); ++c)
    if (grid_->in_domain(c)) m = std::min(m, values_[c]);
  return m;
}

double ScalarField::max_in_domain() const {
  double m = -std::numeric_limits<double>::infinity();
  for (CellIndex c = 0; c < values_.size(); ++c)
    if (grid_->in_domain(c)) m = std::max(m, values_[c]);
  return m;
}

// ---------------------------------------------------------------------------

Partition::Partition(GridPtr grid, int n_labels, std::vector<int> labels)
    : grid_(std::move(grid)), n_labels_(n_labels), labels_(std::move(labels)) {
  if (!grid_) throw PreconditionError("partition without grid");
  if (n_labels < 1) throw PreconditionError("partition needs at least one label");
  if (labels_.size() != grid_->size()) throw PreconditionError("label count does not match grid");
  for (CellIndex c = 0; c < labels_.size(); ++c) {
    if (!grid_->in_domain(c)) {
      labels_[c] = 0;
    } else if (labels_[c] < 1 || labels_[c] > n_labels) {
      throw PreconditionError("label " + std::to_string(labels_[c]) + " at cell " + std::to_string(c) +
                              " outside 1.." + std::to_string(n_labels));
    }
  }
}

Partition::Partition(GridPtr grid, int n_labels, int fill)
    : Partition(grid, n_labels, std::vector<int>(grid ? grid->size() : 0, fill)) {}

void Partition::set(CellIndex c, int label) {
  if (!grid_->in_domain(c)) throw PreconditionError("cannot label an out-of-domain cell");
  if (label < 1 || label > n_labels_) throw PreconditionError("label out of range");
  labels_[c] = label;
}

// ---------------------------------------------------------------------------

std::vector<InterfaceFace> extract_interface(const Partition& p) {
  const Grid& g = p.grid();
  const double h = g.h();
  std::vector<InterfaceFace> faces;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const CellIndex c = g.index(i, j);
      if (!g.in_domain(c)) continue;
      if (i + 1 < g.nx()) {
        const CellIndex d = c + 1;
        if (g.in_domain(d) && p[c] != p[d])
          faces.push_back({c, d, Axis::X, {(i + 1.0) * h, (j + 0.5) * h}, h});
      }
      if (j + 1 < g.ny()) {
        const CellIndex d = c + static_cast<CellIndex>(g.nx());
        if (g.in_domain(d) && p[c] != p[d])
          faces.push_back({c, d, Axis::Y, {(i + 0.5) * h, (j + 1.0) * h}, h});
      }
    }
  }
  return faces;
}

std::vector<double> phase_volumes(const Partition& p) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(p.n_labels()), 0);
  for (int label : p.labels())
    if (label > 0) ++counts[static_cast<std::size_t>(label - 1)];
  std::vector<double> volumes(counts.size());
  const double area = p.grid().cell_area();
  for (std::size_t i = 0; i < counts.size(); ++i) volumes[i] = static_cast<double>(counts[i]) * area;
  return volumes;
}

double symmetric_difference_distance(const Partition& p, const Partition& q) {
  if (!p.grid().same_shape(q.grid())) throw PreconditionError("partitions live on different grids");
  if (p.n_labels() != q.n_labels()) throw PreconditionError("partitions have different label counts");
  std::size_t differing = 0;
  for (CellIndex c = 0; c < p.labels().size(); ++c) differing += p[c] != q[c] ? 1 : 0;
  return 2.0 * static_cast<double>(differing) * p.grid().cell_area();
}

std::vector<std::vector<CellIndex>> connected_components(const Partition& p, int label) {
  const Grid& g = p.grid();
  std::vector<std::vector<CellIndex>> components;
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::vector<CellIndex> stack;
  std::array<CellIndex, 4> nb{};
  for (CellIndex start = 0; start < g.size(); ++start) {
    if (seen[start] || p[start] != label) continue;
    std::vector<CellIndex> component;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const CellIndex c = stack.back();
      stack.pop_back();
      component.push_back(c);
      const int k = g.neighbors(c, nb);
      for (int n = 0; n < k; ++n) {
        if (!seen[nb[n]] && p[nb[n]] == label) {
          seen[nb[n]] = 1;
          stack.push_back(nb[n]);
        }
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  return components;
}

}  // namespace wpart
