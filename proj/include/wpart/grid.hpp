#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace wpart {

using CellIndex = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

/**
 * Uniform rectangular grid of square cells with a binary domain mask.
 *
 * Cell (i, j) has index j * nx + i and center ((i + 1/2) h, (j + 1/2) h);
 * row j = 0 is the bottom row. Cells with mask 0 lie outside the domain.
 */
class Grid {
 public:
  Grid(int nx, int ny, double h, std::vector<std::uint8_t> mask = {});

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double h() const noexcept { return h_; }
  std::size_t size() const noexcept { return mask_.size(); }
  double cell_area() const noexcept { return h_ * h_; }

  bool in_domain(CellIndex c) const noexcept { return mask_[c] != 0; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  std::size_t domain_cell_count() const noexcept { return domain_cells_; }
  double domain_area() const noexcept { return static_cast<double>(domain_cells_) * cell_area(); }

  CellIndex index(int i, int j) const noexcept {
    return static_cast<CellIndex>(j) * static_cast<CellIndex>(nx_) + static_cast<CellIndex>(i);
  }
  int col(CellIndex c) const noexcept { return static_cast<int>(c % static_cast<CellIndex>(nx_)); }
  int row(CellIndex c) const noexcept { return static_cast<int>(c / static_cast<CellIndex>(nx_)); }
  Point center(CellIndex c) const noexcept {
    return {(col(c) + 0.5) * h_, (row(c) + 0.5) * h_};
  }
  double width() const noexcept { return nx_ * h_; }
  double height() const noexcept { return ny_ * h_; }

  /// In-domain 4-neighbors of c, in the order +x, -x, +y, -y. Returns the count.
  int neighbors(CellIndex c, std::array<CellIndex, 4>& out) const noexcept;

  /// Cells whose centers lie in the closed ball B(p, r), in increasing index order.
  std::vector<CellIndex> cells_in_ball(Point p, double r, bool domain_only = true) const;

  bool same_shape(const Grid& other) const noexcept;

 private:
  int nx_;
  int ny_;
  double h_;
  std::vector<std::uint8_t> mask_;
  std::size_t domain_cells_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int nx, int ny, double h, std::vector<std::uint8_t> mask = {});

/// Mask of the disc inscribed in the grid rectangle (cell centers inside the disc).
std::vector<std::uint8_t> disc_mask(int nx, int ny, double h);

/**
 * Real values on the cells of a grid. Out-of-domain cells hold 0.
 *
 * A weight field additionally records the lower bound delta and the cap it
 * was clamped to, and how many cells the clamp touched.
 */
class ScalarField {
 public:
  ScalarField(GridPtr grid, std::vector<double> values);
  ScalarField(GridPtr grid, double constant);

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](CellIndex c) const noexcept { return values_[c]; }

  double min_in_domain() const;
  double max_in_domain() const;

  struct WeightTag {
    double delta;
    double cap;
    std::size_t clamped_low = 0;
    std::size_t clamped_high = 0;
  };
  const std::optional<WeightTag>& weight_tag() const noexcept { return weight_; }
  void tag_as_weight(WeightTag tag) { weight_ = tag; }

 private:
  GridPtr grid_;
  std::vector<double> values_;
  std::optional<WeightTag> weight_;
};

/**
 * One label in 1..N per in-domain cell; out-of-domain cells carry label 0.
 * Empty phases are allowed.
 */
class Partition {
 public:
  Partition(GridPtr grid, int n_labels, std::vector<int> labels);
  /// Every in-domain cell labelled `fill`.
  Partition(GridPtr grid, int n_labels, int fill = 1);

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  int n_labels() const noexcept { return n_labels_; }
  std::span<const int> labels() const noexcept { return labels_; }
  int operator[](CellIndex c) const noexcept { return labels_[c]; }

  /// In-place relabel of an in-domain cell. Used by the optimizers.
  void set(CellIndex c, int label);

  bool operator==(const Partition& other) const noexcept {
    return n_labels_ == other.n_labels_ && labels_ == other.labels_ && grid_->same_shape(*other.grid_);
  }

 private:
  GridPtr grid_;
  int n_labels_;
  std::vector<int> labels_;
};

enum class Axis : std::uint8_t { X, Y };

/// A unit face between two 4-adjacent in-domain cells carrying different labels.
struct InterfaceFace {
  CellIndex cell_a;  // left (Axis::X) or lower (Axis::Y) cell
  CellIndex cell_b;
  Axis axis;         // direction from cell_a to cell_b
  Point midpoint;
  double length;
};

/// All interface faces, ordered by cell_a (row-major), then X before Y.
std::vector<InterfaceFace> extract_interface(const Partition& p);

/// |W_i| for i = 1..N (index i - 1).
std::vector<double> phase_volumes(const Partition& p);

/// sum_i |W_i symmetric-difference W'_i| = 2 h^2 (number of cells whose labels differ).
double symmetric_difference_distance(const Partition& p, const Partition& q);

/// 4-connected components of the cells labelled `label`, each sorted, ordered by smallest cell.
std::vector<std::vector<CellIndex>> connected_components(const Partition& p, int label);

}  // namespace wpart
