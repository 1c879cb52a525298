#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wpart/energy.hpp"
#include "wpart/grid.hpp"
#include "wpart/landscape.hpp"

namespace wpart {

/// Axis-aligned sub-rectangle of the grid (the interior region where estimates are taken).
struct Region {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  /// Distance from an interior point to the region's boundary (0 outside).
  double depth(Point p) const;
};

/// Grid rectangle shrunk by `margin` on every side; a negative margin selects
/// max(4h, 0.05 * shorter side).
Region interior_region(const Grid& g, double margin = -1.0);

/// Whether (x, r) lies in the admissible range 2h <= r <= min(max_radius, depth(x) + h/2).
/// The half-cell allowance reflects that face midpoints sit h/2 inside the cells' hull.
bool admissible(const Region& region, const Grid& g, Point x, double r, double max_radius);

/**
 * Interface faces with a length estimate per face.
 *
 * face_count: every face weighs h (the discrete perimeter, which measures
 *   staircases in the l1 sense).
 * projected: a face weighs h * |n . nu| where nu is its unit normal and n the
 *   normalised sum of the oriented normals of the faces separating the same two
 *   labels within `normal_radius`; exact for straight interfaces of any slope.
 */
class InterfaceIndex {
 public:
  explicit InterfaceIndex(const Partition& p, double normal_radius_cells = 4.0);

  const std::vector<InterfaceFace>& faces() const noexcept { return faces_; }
  const std::vector<double>& projected_length() const noexcept { return projected_; }

  /// Sum of lengths of faces with midpoint in B(x, r); phase > 0 restricts to faces bounding that phase.
  double length_in_ball(Point x, double r, bool projected, int phase = 0) const;
  std::vector<std::size_t> faces_in_ball(Point x, double r) const;

 private:
  std::vector<InterfaceFace> faces_;
  std::vector<std::array<int, 2>> face_labels_;
  std::vector<double> projected_;
  std::vector<std::vector<std::size_t>> buckets_;  // faces by cell_a
  int nx_ = 0;
  int ny_ = 0;
  double h_ = 0.0;
};

struct AhlforsSample {
  Point x;
  double r = 0.0;
  double ratio = 0.0;             // projected length / r
  double face_count_ratio = 0.0;  // raw face length / r
};

struct AhlforsSection {
  int phase = 0;  // 0: whole interface
  std::vector<AhlforsSample> samples;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t skipped = 0;  // (x, r) pairs outside the admissible range
};

struct AhlforsOptions {
  Region region;
  double max_radius = 1.0;
  int phase = 0;
};

/// Interface length in B(x, r) over r for every admissible (x, r). Throws on an empty interface.
AhlforsSection ahlfors_scan(const InterfaceIndex& index, const Grid& g, std::span<const Point> points,
                            std::span<const double> scales, const AhlforsOptions& options);

struct ConditionBSample {
  Point x;
  double r = 0.0;
  std::vector<std::pair<int, double>> phase_radius;  // largest inscribed radius per phase present
  bool one_phase = false;
  int first_phase = 0, second_phase = 0;
  double first_radius = 0.0, second_radius = 0.0;
  double C1 = 0.0;  // r / second_radius; 0 when undefined
};

struct ConditionBSection {
  int phase = 0;
  double r = 0.0;
  std::vector<ConditionBSample> samples;
  std::size_t one_phase_count = 0;
  std::size_t skipped = 0;
  double min_normalized_second = 0.0;  // min over two-phase samples of second_radius / r
};

/// Largest balls inside single phases within B(x, r). Out-of-domain cells and
/// the grid exterior count as belonging to no phase.
ConditionBSample condition_b_at(const Partition& p, Point x, double r);

ConditionBSection condition_b_scan(const Partition& p, std::span<const Point> points, double r, const Region& region,
                                   double max_radius = 1.0);

struct IsoperimetrySample {
  int phase = 0;
  Point center;
  double r = 0.0;
  double volume = 0.0;     // |Z|, Z = W_i intersected with the ball
  double perimeter = 0.0;  // Per(Z; W_i): faces between Z and W_i \ Z
  double ratio = 0.0;      // volume / perimeter^2 (n = 2)
  bool zero_perimeter = false;
};

struct IsoperimetrySection {
  std::vector<IsoperimetrySample> samples;
  double max_ratio = 0.0;
  std::size_t flagged = 0;  // |Z| > 0 with Per(Z; W_i) = 0
  std::size_t skipped = 0;
};

struct Ball {
  Point center;
  double r;
};

/// Balls outside the region or with |Z| > v0 are skipped; empty Z is skipped silently.
IsoperimetrySection isoperimetry_scan(const Partition& p, std::span<const Ball> balls, double v0, const Region& region);

struct Junction {
  Point vertex;
  std::array<int, 3> labels{};
  std::array<double, 3> branch_angle{};  // direction of each pair interface, degrees in [0, 360)
  std::array<double, 3> angles{};        // consecutive gaps between branches, summing to 360
};

/// Grid vertices where exactly three labels meet among the four cells, with
/// branch directions from least-squares lines through nearby pair interfaces.
std::vector<Junction> junction_scan(const Partition& p, double k_cells = 12.0);

struct DiagnosticsOptions {
  double margin = -1.0;  // interior region margin, see interior_region()
  double max_radius = 1.0;
  std::size_t max_samples = 256;
  std::vector<double> ahlfors_scales_h{4.0, 8.0, 16.0};
  double condition_b_radius_h = 16.0;
  std::vector<double> isoperimetry_radii_h{4.0, 8.0, 16.0};
  double v0 = -1.0;  // negative: 0.1 * |Omega|
  double junction_k = 12.0;
  bool ahlfors = true;
  bool condition_b = true;
  bool isoperimetry = true;
  bool junctions = true;
};

struct RegularityReport {
  int n_labels = 0;
  int nontrivial_phases = 0;
  Region region;
  std::size_t interface_faces = 0;
  std::optional<AhlforsSection> ahlfors;
  std::vector<AhlforsSection> per_phase_ahlfors;
  std::optional<ConditionBSection> condition_b;
  std::optional<IsoperimetrySection> isoperimetry;
  std::vector<Junction> junctions;
  double alpha = 1.0;
  std::optional<double> beta;
  std::optional<double> gamma;
  EnergyBreakdown energy;
  std::vector<std::pair<std::string, std::string>> errors;  // section, message
};

/// gamma = min(beta, alpha n - n + 1).
double gauge_exponent(double alpha, double beta, int n = 2);

/// Deterministic subsample of at most `cap` interface midpoints (every k-th face).
std::vector<Point> sample_midpoints(const std::vector<InterfaceFace>& faces, std::size_t cap);

RegularityReport full_report(const Partition& p, const ScalarField& a, const EnergySpec& spec,
                             const WeightSpec& weight_spec, const DiagnosticsOptions& options = {});

}  // namespace wpart
