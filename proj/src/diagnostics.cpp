#include "wpart/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wpart/error.hpp"

namespace wpart {

double Region::depth(Point p) const {
  if (!contains(p)) return 0.0;
  return std::min({p.x - x0, x1 - p.x, p.y - y0, y1 - p.y});
}

Region interior_region(const Grid& g, double margin) {
  if (margin < 0.0) margin = std::max(4.0 * g.h(), 0.05 * std::min(g.width(), g.height()));
  return {margin, margin, g.width() - margin, g.height() - margin};
}

bool admissible(const Region& region, const Grid& g, Point x, double r, double max_radius) {
  if (!region.contains(x)) return false;
  return r >= 2.0 * g.h() && r <= max_radius && r <= region.depth(x) + 0.5 * g.h();
}

double gauge_exponent(double alpha, double beta, int n) { return std::min(beta, alpha * n - n + 1.0); }

std::vector<Point> sample_midpoints(const std::vector<InterfaceFace>& faces, std::size_t cap) {
  std::vector<Point> out;
  if (faces.empty() || cap == 0) return out;
  const std::size_t stride = (faces.size() + cap - 1) / cap;
  for (std::size_t k = 0; k < faces.size(); k += stride) out.push_back(faces[k].midpoint);
  return out;
}

// ---------------------------------------------------------------------------
// Interface index

namespace {

// Oriented unit normal of a face, pointing from the smaller label to the larger.
Point oriented_normal(const InterfaceFace& f, int la, int lb) {
  const double s = la < lb ? 1.0 : -1.0;
  return f.axis == Axis::X ? Point{s, 0.0} : Point{0.0, s};
}

}  // namespace

InterfaceIndex::InterfaceIndex(const Partition& p, double normal_radius_cells)
    : nx_(p.grid().nx()), ny_(p.grid().ny()), h_(p.grid().h()) {
  const Grid& g = p.grid();
  faces_ = extract_interface(p);
  face_labels_.reserve(faces_.size());
  buckets_.assign(g.size(), {});
  for (std::size_t k = 0; k < faces_.size(); ++k) {
    face_labels_.push_back({p[faces_[k].cell_a], p[faces_[k].cell_b]});
    buckets_[faces_[k].cell_a].push_back(k);
  }
  const double rho = normal_radius_cells * h_;
  projected_.resize(faces_.size());
  for (std::size_t k = 0; k < faces_.size(); ++k) {
    const auto [la, lb] = face_labels_[k];
    const int lo = std::min(la, lb);
    const int hi = std::max(la, lb);
    Point n{0.0, 0.0};
    for (std::size_t m : faces_in_ball(faces_[k].midpoint, rho)) {
      const auto [ma, mb] = face_labels_[m];
      if (std::min(ma, mb) != lo || std::max(ma, mb) != hi) continue;
      const Point nu = oriented_normal(faces_[m], ma, mb);
      n.x += nu.x;
      n.y += nu.y;
    }
    const double norm = std::hypot(n.x, n.y);
    const Point own = oriented_normal(faces_[k], la, lb);
    projected_[k] = norm > 0.0 ? faces_[k].length * std::abs(n.x * own.x + n.y * own.y) / norm : faces_[k].length;
  }
}

std::vector<std::size_t> InterfaceIndex::faces_in_ball(Point x, double r) const {
  std::vector<std::size_t> out;
  // A face midpoint lies within h of its cell_a center.
  const double reach = r + h_;
  const int i0 = std::max(0, static_cast<int>(std::floor((x.x - reach) / h_)));
  const int i1 = std::min(nx_ - 1, static_cast<int>(std::floor((x.x + reach) / h_)));
  const int j0 = std::max(0, static_cast<int>(std::floor((x.y - reach) / h_)));
  const int j1 = std::min(ny_ - 1, static_cast<int>(std::floor((x.y + reach) / h_)));
  const double r2 = r * r;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      for (std::size_t k : buckets_[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i)]) {
        const double dx = faces_[k].midpoint.x - x.x;
        const double dy = faces_[k].midpoint.y - x.y;
        if (dx * dx + dy * dy <= r2) out.push_back(k);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double InterfaceIndex::length_in_ball(Point x, double r, bool projected, int phase) const {
  double total = 0.0;
  for (std::size_t k : faces_in_ball(x, r)) {
    if (phase > 0 && face_labels_[k][0] != phase && face_labels_[k][1] != phase) continue;
    total += projected ? projected_[k] : faces_[k].length;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Ahlfors

AhlforsSection ahlfors_scan(const InterfaceIndex& index, const Grid& g, std::span<const Point> points,
                            std::span<const double> scales, const AhlforsOptions& options) {
  if (index.faces().empty()) throw PreconditionError("empty interface");
  AhlforsSection section;
  section.phase = options.phase;
  section.min_ratio = std::numeric_limits<double>::infinity();
  for (const Point& x : points) {
    for (double r : scales) {
      if (!admissible(options.region, g, x, r, options.max_radius)) {
        ++section.skipped;
        continue;
      }
      AhlforsSample s{x, r, index.length_in_ball(x, r, true, options.phase) / r,
                      index.length_in_ball(x, r, false, options.phase) / r};
      section.min_ratio = std::min(section.min_ratio, s.ratio);
      section.max_ratio = std::max(section.max_ratio, s.ratio);
      section.samples.push_back(s);
    }
  }
  if (section.samples.empty()) section.min_ratio = 0.0;
  return section;
}

// ---------------------------------------------------------------------------
// Condition B

namespace {

// Distance from point x to the closed square cell centered at c with side h.
double distance_to_cell(Point x, Point c, double h) {
  const double dx = std::max(0.0, std::abs(x.x - c.x) - 0.5 * h);
  const double dy = std::max(0.0, std::abs(x.y - c.y) - 0.5 * h);
  return std::hypot(dx, dy);
}

}  // namespace

ConditionBSample condition_b_at(const Partition& p, Point x, double r) {
  const Grid& g = p.grid();
  const double h = g.h();
  ConditionBSample s;
  s.x = x;
  s.r = r;
  const auto inside = g.cells_in_ball(x, r, true);
  // Every cell that can bound an inscribed ball, including out-of-domain cells.
  const auto nearby = g.cells_in_ball(x, r + h, false);

  std::vector<double> best(static_cast<std::size_t>(p.n_labels()) + 1, -1.0);
  for (CellIndex c : inside) {
    const Point pc = g.center(c);
    double rho = r - distance(pc, x);
    rho = std::min({rho, pc.x, g.width() - pc.x, pc.y, g.height() - pc.y});
    if (rho <= best[static_cast<std::size_t>(p[c])]) continue;
    for (CellIndex e : nearby) {
      if (g.in_domain(e) && p[e] == p[c]) continue;
      rho = std::min(rho, distance_to_cell(pc, g.center(e), h));
      if (rho <= best[static_cast<std::size_t>(p[c])]) break;
    }
    best[static_cast<std::size_t>(p[c])] = std::max(best[static_cast<std::size_t>(p[c])], rho);
  }
  for (int l = 1; l <= p.n_labels(); ++l) {
    const double b = best[static_cast<std::size_t>(l)];
    if (b < 0.0) continue;
    s.phase_radius.emplace_back(l, std::max(0.0, b));
  }
  auto sorted = s.phase_radius;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (sorted.size() < 2) {
    s.one_phase = true;
    if (!sorted.empty()) {
      s.first_phase = sorted[0].first;
      s.first_radius = sorted[0].second;
    }
    return s;
  }
  s.first_phase = sorted[0].first;
  s.first_radius = sorted[0].second;
  s.second_phase = sorted[1].first;
  s.second_radius = sorted[1].second;
  s.C1 = s.second_radius > 0.0 ? r / s.second_radius : 0.0;
  return s;
}

ConditionBSection condition_b_scan(const Partition& p, std::span<const Point> points, double r, const Region& region,
                                   double max_radius) {
  ConditionBSection section;
  section.r = r;
  section.min_normalized_second = std::numeric_limits<double>::infinity();
  for (const Point& x : points) {
    if (!admissible(region, p.grid(), x, r, max_radius)) {
      ++section.skipped;
      continue;
    }
    auto s = condition_b_at(p, x, r);
    if (s.one_phase) {
      ++section.one_phase_count;
    } else {
      section.min_normalized_second = std::min(section.min_normalized_second, s.second_radius / r);
    }
    section.samples.push_back(std::move(s));
  }
  if (!std::isfinite(section.min_normalized_second)) section.min_normalized_second = 0.0;
  return section;
}

// ---------------------------------------------------------------------------
// Isoperimetry

IsoperimetrySection isoperimetry_scan(const Partition& p, std::span<const Ball> balls, double v0, const Region& region) {
  const Grid& g = p.grid();
  IsoperimetrySection section;
  std::vector<std::uint8_t> in_ball(g.size(), 0);
  std::array<CellIndex, 4> nb{};
  for (const Ball& ball : balls) {
    const bool closure_inside = region.contains({ball.center.x - ball.r, ball.center.y - ball.r}) &&
                                region.contains({ball.center.x + ball.r, ball.center.y + ball.r});
    if (!closure_inside) {
      ++section.skipped;
      continue;
    }
    const auto cells = g.cells_in_ball(ball.center, ball.r);
    for (CellIndex c : cells) in_ball[c] = 1;
    for (int phase = 1; phase <= p.n_labels(); ++phase) {
      std::size_t z = 0, faces = 0;
      for (CellIndex c : cells) {
        if (p[c] != phase) continue;
        ++z;
        const int k = g.neighbors(c, nb);
        for (int n = 0; n < k; ++n)
          if (p[nb[n]] == phase && !in_ball[nb[n]]) ++faces;
      }
      if (z == 0) continue;
      IsoperimetrySample s;
      s.phase = phase;
      s.center = ball.center;
      s.r = ball.r;
      s.volume = static_cast<double>(z) * g.cell_area();
      s.perimeter = static_cast<double>(faces) * g.h();
      if (s.volume > v0) {
        ++section.skipped;
        continue;
      }
      if (faces == 0) {
        s.zero_perimeter = true;
        ++section.flagged;
      } else {
        s.ratio = s.volume / (s.perimeter * s.perimeter);
        section.max_ratio = std::max(section.max_ratio, s.ratio);
      }
      section.samples.push_back(s);
    }
    for (CellIndex c : cells) in_ball[c] = 0;
  }
  return section;
}

// ---------------------------------------------------------------------------
// Junctions

namespace {

constexpr double kDegrees = 180.0 / std::numbers::pi;

// Direction (radians) of the least-squares line through pts, oriented away from v.
std::optional<double> branch_direction(const std::vector<Point>& pts, Point v) {
  if (pts.empty()) return std::nullopt;
  Point mean{0.0, 0.0};
  for (const Point& q : pts) {
    mean.x += q.x;
    mean.y += q.y;
  }
  mean.x /= static_cast<double>(pts.size());
  mean.y /= static_cast<double>(pts.size());
  double dx = mean.x - v.x;
  double dy = mean.y - v.y;
  if (pts.size() >= 2) {
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const Point& q : pts) {
      sxx += (q.x - mean.x) * (q.x - mean.x);
      syy += (q.y - mean.y) * (q.y - mean.y);
      sxy += (q.x - mean.x) * (q.y - mean.y);
    }
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    double ux = std::cos(theta), uy = std::sin(theta);
    if (ux * dx + uy * dy < 0.0) {
      ux = -ux;
      uy = -uy;
    }
    dx = ux;
    dy = uy;
  }
  if (dx == 0.0 && dy == 0.0) return std::nullopt;
  return std::atan2(dy, dx);
}

}  // namespace

std::vector<Junction> junction_scan(const Partition& p, double k_cells) {
  const Grid& g = p.grid();
  const double h = g.h();
  std::vector<Junction> out;
  std::vector<InterfaceFace> faces;  // built lazily
  bool have_faces = false;
  for (int j = 1; j < g.ny(); ++j) {
    for (int i = 1; i < g.nx(); ++i) {
      const std::array<CellIndex, 4> around{g.index(i - 1, j - 1), g.index(i, j - 1), g.index(i - 1, j), g.index(i, j)};
      if (!std::all_of(around.begin(), around.end(), [&](CellIndex c) { return g.in_domain(c); })) continue;
      std::array<int, 4> l{p[around[0]], p[around[1]], p[around[2]], p[around[3]]};
      std::sort(l.begin(), l.end());
      const auto distinct = std::unique(l.begin(), l.end()) - l.begin();
      if (distinct != 3) continue;
      if (!have_faces) {
        faces = extract_interface(p);
        have_faces = true;
      }
      Junction jn;
      jn.vertex = {i * h, j * h};
      jn.labels = {l[0], l[1], l[2]};
      const std::array<std::pair<int, int>, 3> pairs{{{l[0], l[1]}, {l[0], l[2]}, {l[1], l[2]}}};
      bool ok = true;
      const double reach = k_cells * h;
      for (std::size_t b = 0; b < 3 && ok; ++b) {
        std::vector<Point> pts;
        for (const InterfaceFace& f : faces) {
          const int la = std::min(p[f.cell_a], p[f.cell_b]);
          const int lb = std::max(p[f.cell_a], p[f.cell_b]);
          if (la != pairs[b].first || lb != pairs[b].second) continue;
          if (distance(f.midpoint, jn.vertex) <= reach) pts.push_back(f.midpoint);
        }
        const auto dir = branch_direction(pts, jn.vertex);
        if (!dir) {
          ok = false;
          break;
        }
        double deg = *dir * kDegrees;
        if (deg < 0.0) deg += 360.0;
        jn.branch_angle[b] = deg;
      }
      if (!ok) continue;
      std::array<double, 3> s = jn.branch_angle;
      std::sort(s.begin(), s.end());
      jn.angles = {s[1] - s[0], s[2] - s[1], 360.0 - (s[2] - s[0])};
      out.push_back(jn);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RegularityReport full_report(const Partition& p, const ScalarField& a, const EnergySpec& spec,
                             const WeightSpec& weight_spec, const DiagnosticsOptions& options) {
  const Grid& g = p.grid();
  RegularityReport report;
  report.n_labels = p.n_labels();
  report.region = interior_region(g, options.margin);
  report.alpha = spec.bulk.alpha;
  report.beta = weight_spec.beta;
  if (report.beta) report.gamma = gauge_exponent(report.alpha, *report.beta);
  report.energy = total_energy(p, a, spec);
  for (double v : phase_volumes(p)) report.nontrivial_phases += v > 0.0 ? 1 : 0;

  auto scaled = [&](const std::vector<double>& in_h) {
    std::vector<double> r;
    for (double k : in_h) r.push_back(k * g.h());
    return r;
  };
  auto guarded = [&](const char* section, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      report.errors.emplace_back(section, e.what());
    }
  };

  const InterfaceIndex index(p);
  report.interface_faces = index.faces().size();
  const auto points = sample_midpoints(index.faces(), options.max_samples);
  const auto scales = scaled(options.ahlfors_scales_h);

  if (!index.faces().empty() && options.ahlfors) {
    guarded("ahlfors", [&] {
      report.ahlfors = ahlfors_scan(index, g, points, scales, {report.region, options.max_radius, 0});
    });
    for (int phase = 1; phase <= p.n_labels(); ++phase) {
      std::vector<InterfaceFace> bounding;
      for (const auto& f : index.faces())
        if (p[f.cell_a] == phase || p[f.cell_b] == phase) bounding.push_back(f);
      if (bounding.empty()) continue;
      const auto phase_points = sample_midpoints(bounding, options.max_samples);
      guarded("ahlfors", [&] {
        report.per_phase_ahlfors.push_back(
            ahlfors_scan(index, g, phase_points, scales, {report.region, options.max_radius, phase}));
      });
    }
  }
  if (!index.faces().empty() && options.condition_b) {
    guarded("condition_b", [&] {
      report.condition_b =
          condition_b_scan(p, points, options.condition_b_radius_h * g.h(), report.region, options.max_radius);
    });
  }
  if (!index.faces().empty() && options.isoperimetry) {
    guarded("isoperimetry", [&] {
      std::vector<Ball> balls;
      for (const Point& x : points)
        for (double r : scaled(options.isoperimetry_radii_h)) balls.push_back({x, r});
      const double v0 = options.v0 > 0.0 ? options.v0 : 0.1 * g.domain_area();
      report.isoperimetry = isoperimetry_scan(p, balls, v0, report.region);
    });
  }
  if (!index.faces().empty() && options.junctions) {
    guarded("junctions", [&] { report.junctions = junction_scan(p, options.junction_k); });
  }
  return report;
}

}  // namespace wpart
