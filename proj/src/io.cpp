#include "wpart/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <system_error>

#include "wpart/error.hpp"

namespace wpart::io {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Number formatting and scanning

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

template <class T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

[[noreturn]] void format_fail(std::string_view source, std::size_t offset, std::string_view what) {
  throw FormatError(std::string(source) + ": byte " + std::to_string(offset) + ": " + std::string(what));
}

class Scanner {
 public:
  Scanner(std::string_view text, std::string_view source) : text_(text), source_(source) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= text_.size(); }

  [[noreturn]] void fail(std::string_view what) const { format_fail(source_, pos_, what); }

  void skip_blanks() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  std::string_view word() {
    skip_blanks();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
    if (start == pos_) fail(at_end() ? "unexpected end of input" : "unexpected end of line");
    return text_.substr(start, pos_ - start);
  }

  void keyword(std::string_view expected) {
    skip_blanks();
    const std::size_t start = pos_;
    if (word() != expected) format_fail(source_, start, "expected '" + std::string(expected) + "'");
  }

  template <class T>
  T number() {
    skip_blanks();
    const std::size_t start = pos_;
    const std::string_view w = word();
    T value{};
    const auto r = std::from_chars(w.data(), w.data() + w.size(), value);
    if (r.ec != std::errc() || r.ptr != w.data() + w.size()) {
      if constexpr (std::is_floating_point_v<T>)
        format_fail(source_, start, "expected a number");
      else
        format_fail(source_, start, "expected an integer");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(value)) format_fail(source_, start, "non-finite value");
    }
    return value;
  }

  void end_of_line() {
    skip_blanks();
    if (at_end()) return;
    if (text_[pos_] != '\n') fail("expected end of line");
    ++pos_;
  }

  // Only trailing newlines may follow the last record.
  void end_of_input() {
    while (pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
    if (!at_end()) fail("trailing data");
  }

  // Each value takes at least two bytes, which bounds what a header may declare.
  void check_capacity(int nx, int ny, std::size_t at) const {
    if (static_cast<double>(nx) * static_cast<double>(ny) > static_cast<double>(text_.size()))
      format_fail(source_, at, "header declares more values than the input holds");
  }

  std::string_view rest_of_line() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    const auto line = text_.substr(start, pos_ - start);
    if (pos_ < text_.size()) ++pos_;
    return line;
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  std::string_view text_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

// Cell index of the k-th value in file order (top row first).
std::size_t file_to_grid(int nx, int ny, std::size_t k) {
  const auto i = k % static_cast<std::size_t>(nx);
  const auto row_from_top = k / static_cast<std::size_t>(nx);
  return (static_cast<std::size_t>(ny) - 1 - row_from_top) * static_cast<std::size_t>(nx) + i;
}

template <class Cell>
std::string raster_rows(int nx, int ny, Cell&& cell) {
  std::string out;
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      if (i > 0) out += ' ';
      out += cell(static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Fields, masks, labels

std::string format_field(const ScalarField& f) {
  const Grid& g = f.grid();
  std::string out = "FIELD " + fmt_int(g.nx()) + ' ' + fmt_int(g.ny()) + ' ' + fmt(g.h()) + '\n';
  return out + raster_rows(g.nx(), g.ny(), [&](std::size_t c) { return fmt(f[c]); });
}

FieldData parse_field(std::string_view text, std::string_view source) {
  Scanner s(text, source);
  FieldData d;
  s.keyword("FIELD");
  const std::size_t at = s.pos();
  d.nx = s.number<int>();
  d.ny = s.number<int>();
  if (d.nx < 1 || d.ny < 1) format_fail(source, at, "dimensions must be positive");
  s.check_capacity(d.nx, d.ny, at);
  const std::size_t h_at = s.pos();
  d.h = s.number<double>();
  if (!(d.h > 0.0)) format_fail(source, h_at, "h must be positive");
  s.end_of_line();
  d.values.assign(static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny), 0.0);
  std::size_t k = 0;
  for (int row = 0; row < d.ny; ++row) {
    for (int i = 0; i < d.nx; ++i) d.values[file_to_grid(d.nx, d.ny, k++)] = s.number<double>();
    s.end_of_line();
  }
  s.end_of_input();
  return d;
}

ScalarField to_field(const FieldData& data, const GridPtr& grid) {
  if (data.nx != grid->nx() || data.ny != grid->ny() || data.h != grid->h())
    throw PreconditionError("field dimensions " + fmt_int(data.nx) + "x" + fmt_int(data.ny) + " h=" + fmt(data.h) +
                            " do not match the grid " + fmt_int(grid->nx()) + "x" + fmt_int(grid->ny()) +
                            " h=" + fmt(grid->h()));
  return ScalarField(grid, data.values);
}

std::string format_mask(const Grid& g) {
  std::string out = "MASK " + fmt_int(g.nx()) + ' ' + fmt_int(g.ny()) + '\n';
  return out + raster_rows(g.nx(), g.ny(), [&](std::size_t c) { return std::string(g.in_domain(c) ? "1" : "0"); });
}

MaskData parse_mask(std::string_view text, std::string_view source) {
  Scanner s(text, source);
  MaskData d;
  s.keyword("MASK");
  const std::size_t at = s.pos();
  d.nx = s.number<int>();
  d.ny = s.number<int>();
  if (d.nx < 1 || d.ny < 1) format_fail(source, at, "dimensions must be positive");
  s.check_capacity(d.nx, d.ny, at);
  s.end_of_line();
  d.mask.assign(static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny), 0);
  std::size_t k = 0;
  for (int row = 0; row < d.ny; ++row) {
    for (int i = 0; i < d.nx; ++i) {
      s.skip_blanks();
      const std::size_t v_at = s.pos();
      const int v = s.number<int>();
      if (v != 0 && v != 1) format_fail(source, v_at, "mask entries must be 0 or 1");
      d.mask[file_to_grid(d.nx, d.ny, k++)] = static_cast<std::uint8_t>(v);
    }
    s.end_of_line();
  }
  s.end_of_input();
  return d;
}

std::string format_labels(const Partition& p) {
  const Grid& g = p.grid();
  std::string out = "LABELS " + fmt_int(g.nx()) + ' ' + fmt_int(g.ny()) + ' ' + fmt_int(p.n_labels()) + '\n';
  return out + raster_rows(g.nx(), g.ny(), [&](std::size_t c) { return fmt_int(p[c]); });
}

LabelData parse_labels(std::string_view text, std::string_view source) {
  Scanner s(text, source);
  LabelData d;
  s.keyword("LABELS");
  const std::size_t at = s.pos();
  d.nx = s.number<int>();
  d.ny = s.number<int>();
  if (d.nx < 1 || d.ny < 1) format_fail(source, at, "dimensions must be positive");
  s.check_capacity(d.nx, d.ny, at);
  s.skip_blanks();
  const std::size_t n_at = s.pos();
  d.n_labels = s.number<int>();
  if (d.n_labels < 1) format_fail(source, n_at, "label count must be positive");
  s.end_of_line();
  d.labels.assign(static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny), 0);
  std::size_t k = 0;
  for (int row = 0; row < d.ny; ++row) {
    for (int i = 0; i < d.nx; ++i) {
      s.skip_blanks();
      const std::size_t v_at = s.pos();
      const int v = s.number<int>();
      if (v < 0 || v > d.n_labels) format_fail(source, v_at, "label out of range");
      d.labels[file_to_grid(d.nx, d.ny, k++)] = v;
    }
    s.end_of_line();
  }
  s.end_of_input();
  return d;
}

Partition to_partition(const LabelData& data, const GridPtr& grid) {
  if (data.nx != grid->nx() || data.ny != grid->ny())
    throw PreconditionError("label raster is " + fmt_int(data.nx) + "x" + fmt_int(data.ny) + ", grid is " +
                            fmt_int(grid->nx()) + "x" + fmt_int(grid->ny()));
  for (CellIndex c = 0; c < grid->size(); ++c) {
    if ((data.labels[c] == 0) == grid->in_domain(c))
      throw PreconditionError("label raster disagrees with the domain mask at cell " + fmt_int(c));
  }
  return Partition(grid, data.n_labels, data.labels);
}

// ---------------------------------------------------------------------------
// Trace, energy, graymap, report

namespace {
constexpr std::string_view kTraceHeader = "sweep,F,G,J,flips,pours,temperature";
}

std::string format_trace(const EnergyTrace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const TraceRecord& r : trace) {
    out += fmt_int(r.sweep) + ',' + fmt(r.F) + ',' + fmt(r.G) + ',' + fmt(r.J) + ',' + fmt_int(r.flips) + ',' +
           fmt_int(r.pours) + ',' + fmt(r.temperature) + '\n';
  }
  return out;
}

EnergyTrace parse_trace(std::string_view text, std::string_view source) {
  Scanner s(text, source);
  if (s.rest_of_line() != kTraceHeader) format_fail(source, 0, "unexpected trace header");
  EnergyTrace trace;
  while (!s.at_end()) {
    const std::size_t line_at = s.pos();
    const std::string_view line = s.rest_of_line();
    if (line.empty()) {
      s.end_of_input();
      break;
    }
    std::string spaced(line);
    std::replace(spaced.begin(), spaced.end(), ',', ' ');
    if (std::count(line.begin(), line.end(), ',') != 6) format_fail(source, line_at, "expected 7 columns");
    Scanner row(spaced, source);
    TraceRecord r;
    try {
      r.sweep = row.number<int>();
      r.F = row.number<double>();
      r.G = row.number<double>();
      r.J = row.number<double>();
      r.flips = row.number<std::size_t>();
      r.pours = row.number<std::size_t>();
      r.temperature = row.number<double>();
      row.end_of_line();
      row.end_of_input();
    } catch (const FormatError&) {
      format_fail(source, line_at + row.pos(), "malformed trace record");
    }
    trace.push_back(r);
  }
  return trace;
}

std::string format_energy(const EnergyBreakdown& e, const Partition& p) {
  std::string out;
  out += "F = " + fmt(e.interface_term) + '\n';
  out += "G = " + fmt(e.bulk_term) + '\n';
  out += "J = " + fmt(e.total) + '\n';
  out += "interface_length = " + fmt(e.interface_length_unweighted) + '\n';
  out += "per_phase_perimeter =";
  for (double v : e.per_phase_perimeter) out += ' ' + fmt(v);
  out += "\nvolumes =";
  for (double v : phase_volumes(p)) out += ' ' + fmt(v);
  out += '\n';
  return out;
}

std::string format_pgm(const Partition& p) {
  const Grid& g = p.grid();
  std::string out = "P2\n" + fmt_int(g.nx()) + ' ' + fmt_int(g.ny()) + '\n' + fmt_int(std::max(p.n_labels(), 1)) + '\n';
  return out + raster_rows(g.nx(), g.ny(), [&](std::size_t c) { return fmt_int(p[c]); });
}

namespace {

void ahlfors_summary(std::string& out, const AhlforsSection& s) {
  out += "min_ratio = " + fmt(s.min_ratio) + '\n';
  out += "max_ratio = " + fmt(s.max_ratio) + '\n';
  out += "samples = " + fmt_int(s.samples.size()) + '\n';
  out += "skipped = " + fmt_int(s.skipped) + '\n';
}

}  // namespace

std::string format_report(const RegularityReport& r) {
  std::string out;
  out += "[ahlfors]\n";
  if (r.ahlfors) {
    ahlfors_summary(out, *r.ahlfors);
    for (const auto& s : r.ahlfors->samples)
      out += "sample = " + fmt(s.x.x) + ' ' + fmt(s.x.y) + ' ' + fmt(s.r) + ' ' + fmt(s.ratio) + ' ' +
             fmt(s.face_count_ratio) + '\n';
    for (const auto& ph : r.per_phase_ahlfors)
      out += "phase = " + fmt_int(ph.phase) + ' ' + fmt(ph.min_ratio) + ' ' + fmt(ph.max_ratio) + ' ' +
             fmt_int(ph.samples.size()) + ' ' + fmt_int(ph.skipped) + '\n';
  }
  out += "\n[condition_b]\n";
  if (r.condition_b) {
    const auto& c = *r.condition_b;
    out += "r = " + fmt(c.r) + '\n';
    out += "min_normalized_second = " + fmt(c.min_normalized_second) + '\n';
    out += "one_phase = " + fmt_int(c.one_phase_count) + '\n';
    out += "samples = " + fmt_int(c.samples.size()) + '\n';
    out += "skipped = " + fmt_int(c.skipped) + '\n';
    for (const auto& s : c.samples)
      out += "sample = " + fmt(s.x.x) + ' ' + fmt(s.x.y) + ' ' + fmt(s.r) + ' ' + (s.one_phase ? "1" : "0") + ' ' +
             fmt_int(s.first_phase) + ' ' + fmt(s.first_radius) + ' ' + fmt_int(s.second_phase) + ' ' +
             fmt(s.second_radius) + ' ' + fmt(s.C1) + '\n';
  }
  out += "\n[isoperimetry]\n";
  if (r.isoperimetry) {
    const auto& iso = *r.isoperimetry;
    out += "max_ratio = " + fmt(iso.max_ratio) + '\n';
    out += "flagged = " + fmt_int(iso.flagged) + '\n';
    out += "samples = " + fmt_int(iso.samples.size()) + '\n';
    out += "skipped = " + fmt_int(iso.skipped) + '\n';
    for (const auto& s : iso.samples)
      out += "sample = " + fmt_int(s.phase) + ' ' + fmt(s.center.x) + ' ' + fmt(s.center.y) + ' ' + fmt(s.r) + ' ' +
             fmt(s.volume) + ' ' + fmt(s.perimeter) + ' ' + fmt(s.ratio) + ' ' + (s.zero_perimeter ? "1" : "0") +
             '\n';
  }
  out += "\n[junctions]\n";
  out += "count = " + fmt_int(r.junctions.size()) + '\n';
  for (const auto& j : r.junctions)
    out += "junction = " + fmt(j.vertex.x) + ' ' + fmt(j.vertex.y) + ' ' + fmt_int(j.labels[0]) + ' ' +
           fmt_int(j.labels[1]) + ' ' + fmt_int(j.labels[2]) + ' ' + fmt(j.angles[0]) + ' ' + fmt(j.angles[1]) + ' ' +
           fmt(j.angles[2]) + '\n';
  out += "\n[summary]\n";
  out += "n_labels = " + fmt_int(r.n_labels) + '\n';
  out += "nontrivial_phases = " + fmt_int(r.nontrivial_phases) + '\n';
  out += "interface_faces = " + fmt_int(r.interface_faces) + '\n';
  out += "region = " + fmt(r.region.x0) + ' ' + fmt(r.region.y0) + ' ' + fmt(r.region.x1) + ' ' + fmt(r.region.y1) +
         '\n';
  out += "F = " + fmt(r.energy.interface_term) + '\n';
  out += "G = " + fmt(r.energy.bulk_term) + '\n';
  out += "J = " + fmt(r.energy.total) + '\n';
  out += "alpha = " + fmt(r.alpha) + '\n';
  out += "beta = " + (r.beta ? fmt(*r.beta) : std::string("none")) + '\n';
  out += "gamma = " + (r.gamma ? fmt(*r.gamma) : std::string("none")) + '\n';
  for (const auto& [section, message] : r.errors) out += "error = " + section + ": " + message + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void OutputSet::add(fs::path path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

void OutputSet::commit() const {
  std::vector<fs::path> temps;
  auto discard = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  const std::string suffix = ".tmp-" + std::to_string(::getpid());
  try {
    for (const auto& [path, content] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      fs::path tmp = path;
      tmp += suffix;
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.close();
      if (!out) throw Error(tmp.string() + ": write failed");
    }
  } catch (const fs::filesystem_error& e) {
    discard();
    throw Error(e.what());
  } catch (...) {
    discard();
    throw;
  }
  for (std::size_t k = 0; k < files_.size(); ++k) {
    std::error_code ec;
    fs::rename(temps[k], files_[k].first, ec);
    if (ec) {
      discard();
      for (std::size_t m = 0; m < k; ++m) fs::remove(files_[m].first, ec);
      throw Error(files_[k].first.string() + ": rename failed");
    }
  }
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

struct Value {
  std::string_view text;
  std::string_view source;
  std::size_t offset;

  [[noreturn]] void fail(std::string_view what) const { format_fail(source, offset, what); }

  template <class T>
  T number() const {
    T v{};
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) fail("expected a number");
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) fail("non-finite value");
    }
    return v;
  }

  bool boolean() const {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    fail("expected true or false");
  }

  std::vector<double> list() const {
    std::string spaced(text);
    std::replace(spaced.begin(), spaced.end(), ',', ' ');
    std::vector<double> out;
    std::istringstream ss(spaced);
    std::string item;
    while (ss >> item) {
      double v{};
      const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
      if (r.ec != std::errc() || r.ptr != item.data() + item.size() || !std::isfinite(v))
        fail("expected a list of numbers");
      out.push_back(v);
    }
    return out;
  }

  template <class E>
  E choice(std::initializer_list<std::pair<std::string_view, E>> options) const {
    for (const auto& [name, value] : options)
      if (text == name) return value;
    std::string names;
    for (const auto& [name, value] : options) names += (names.empty() ? "" : ", ") + std::string(name);
    fail("expected one of " + names);
  }
};

using Setter = std::function<void(const Value&, RunConfig&, const fs::path&)>;

fs::path resolve_path(std::string_view text, const fs::path& base) {
  fs::path p{std::string(text)};
  return p.is_absolute() ? p : base / p;
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto annealing = [](RunConfig& c) -> Annealing& {
      if (!c.optimizer.annealing) c.optimizer.annealing = Annealing{};
      return *c.optimizer.annealing;
    };
    auto h_table = [](RunConfig& c) -> PiecewiseLinear& {
      if (!c.energy.bulk.h_table) c.energy.bulk.h_table = PiecewiseLinear{};
      return *c.energy.bulk.h_table;
    };

    t["grid.nx"] = [](const Value& v, RunConfig& c, const fs::path&) { c.nx = v.number<int>(); };
    t["grid.ny"] = [](const Value& v, RunConfig& c, const fs::path&) { c.ny = v.number<int>(); };
    t["grid.h"] = [](const Value& v, RunConfig& c, const fs::path&) { c.h = v.number<double>(); };
    t["grid.mask"] = [](const Value& v, RunConfig& c, const fs::path& base) {
      if (v.text == "all") {
        c.mask = MaskKind::All;
      } else if (v.text == "disc") {
        c.mask = MaskKind::Disc;
      } else {
        c.mask = MaskKind::File;
        c.mask_file = resolve_path(v.text, base);
      }
    };

    t["weight.source"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.weight = v.choice<WeightKind>(
          {{"constant", WeightKind::Constant}, {"file", WeightKind::File}, {"landscape", WeightKind::Landscape}});
    };
    t["weight.value"] = [](const Value& v, RunConfig& c, const fs::path&) { c.weight_value = v.number<double>(); };
    t["weight.file"] = [](const Value& v, RunConfig& c, const fs::path& base) {
      c.weight_file = resolve_path(v.text, base);
    };
    t["weight.potential"] = [](const Value& v, RunConfig& c, const fs::path& base) {
      c.potential_file = resolve_path(v.text, base);
    };
    t["weight.delta"] = [](const Value& v, RunConfig& c, const fs::path&) { c.weight_spec.delta = v.number<double>(); };
    t["weight.cap"] = [](const Value& v, RunConfig& c, const fs::path&) { c.weight_spec.cap = v.number<double>(); };
    t["weight.beta"] = [](const Value& v, RunConfig& c, const fs::path&) { c.weight_spec.beta = v.number<double>(); };
    t["weight.C_beta"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.weight_spec.C_beta = v.number<double>();
    };

    t["landscape.tol"] = [](const Value& v, RunConfig& c, const fs::path&) { c.landscape.tol = v.number<double>(); };
    t["landscape.max_iter"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.landscape.max_iter = v.number<int>();
    };

    t["model.n_labels"] = [](const Value& v, RunConfig& c, const fs::path&) { c.n_labels = v.number<int>(); };

    t["bulk.kind"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.energy.bulk.kind = v.choice<BulkKind>({{"volume_quadratic", BulkKind::VolumeQuadratic},
                                               {"volume_generic_h", BulkKind::VolumeGenericH},
                                               {"weighted_volume", BulkKind::WeightedVolume}});
    };
    t["bulk.lambda"] = [](const Value& v, RunConfig& c, const fs::path&) { c.energy.bulk.lambda = v.number<double>(); };
    t["bulk.alpha"] = [](const Value& v, RunConfig& c, const fs::path&) { c.energy.bulk.alpha = v.number<double>(); };
    t["bulk.C_alpha"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.energy.bulk.C_alpha = v.number<double>();
    };
    t["bulk.targets"] = [](const Value& v, RunConfig& c, const fs::path&) { c.energy.bulk.target_volumes = v.list(); };
    t["bulk.h_table_x"] = [h_table](const Value& v, RunConfig& c, const fs::path&) { h_table(c).x = v.list(); };
    t["bulk.h_table_y"] = [h_table](const Value& v, RunConfig& c, const fs::path&) { h_table(c).y = v.list(); };
    t["bulk.q_file"] = [](const Value& v, RunConfig& c, const fs::path& base) { c.q_file = resolve_path(v.text, base); };

    t["energy.label_weights"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.energy.label_weights = v.list();
    };

    t["optimizer.init"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.optimizer.init = v.choice<InitKind>({{"voronoi_seeds", InitKind::VoronoiSeeds},
                                             {"random", InitKind::Random},
                                             {"stripes", InitKind::Stripes},
                                             {"watershed_minus_w", InitKind::WatershedMinusW}});
    };
    t["optimizer.seed"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.optimizer.seed = v.number<std::uint64_t>();
    };
    t["optimizer.max_sweeps"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.optimizer.max_sweeps = v.number<int>();
    };
    t["optimizer.pour_moves_per_sweep"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.optimizer.pour_moves_per_sweep = v.number<int>();
    };
    t["optimizer.r_min"] = [](const Value& v, RunConfig& c, const fs::path&) { c.optimizer.r_min = v.number<double>(); };
    t["optimizer.r_max"] = [](const Value& v, RunConfig& c, const fs::path&) { c.optimizer.r_max = v.number<double>(); };
    t["optimizer.T0"] = [annealing](const Value& v, RunConfig& c, const fs::path&) {
      annealing(c).T0 = v.number<double>();
    };
    t["optimizer.decay"] = [annealing](const Value& v, RunConfig& c, const fs::path&) {
      annealing(c).decay = v.number<double>();
    };
    t["optimizer.restarts"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.optimizer.restarts = v.number<int>();
    };
    t["optimizer.lloyd_iterations"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.optimizer.lloyd_iterations = v.number<int>();
    };
    t["optimizer.clean"] = [](const Value& v, RunConfig& c, const fs::path&) { c.clean = v.boolean(); };
    t["optimizer.min_component_volume"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.min_component_volume = v.number<double>();
    };

    t["diagnostics.margin"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.margin = v.number<double>();
    };
    t["diagnostics.max_radius"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.max_radius = v.number<double>();
    };
    t["diagnostics.max_samples"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.max_samples = v.number<std::size_t>();
    };
    t["diagnostics.ahlfors_scales_h"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.ahlfors_scales_h = v.list();
    };
    t["diagnostics.condition_b_radius_h"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.condition_b_radius_h = v.number<double>();
    };
    t["diagnostics.isoperimetry_radii_h"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.isoperimetry_radii_h = v.list();
    };
    t["diagnostics.v0"] = [](const Value& v, RunConfig& c, const fs::path&) { c.diagnostics.v0 = v.number<double>(); };
    t["diagnostics.junction_k"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.junction_k = v.number<double>();
    };
    t["diagnostics.ahlfors"] = [](const Value& v, RunConfig& c, const fs::path&) { c.diagnostics.ahlfors = v.boolean(); };
    t["diagnostics.condition_b"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.condition_b = v.boolean();
    };
    t["diagnostics.isoperimetry"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.isoperimetry = v.boolean();
    };
    t["diagnostics.junctions"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnostics.junctions = v.boolean();
    };
    t["diagnostics.after_partition"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.diagnose_after_partition = v.boolean();
    };

    t["oracle.max_assignments"] = [](const Value& v, RunConfig& c, const fs::path&) {
      c.oracle.max_assignments = v.number<std::uint64_t>();
    };
    t["oracle.verify"] = [](const Value& v, RunConfig& c, const fs::path& base) {
      c.oracle_verify = resolve_path(v.text, base);
    };

    t["output.dir"] = [](const Value& v, RunConfig& c, const fs::path& base) { c.out_dir = resolve_path(v.text, base); };
    t["output.pgm"] = [](const Value& v, RunConfig& c, const fs::path&) { c.pgm = v.boolean(); };
    return t;
  }();
  return table;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

RunConfig parse_config(std::string_view text, const fs::path& base_dir, std::string_view source) {
  RunConfig config;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = text.substr(line_start, line_end - line_start);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::size_t lead = line.find_first_not_of(" \t");
    if (lead != std::string_view::npos && !trim(line).empty()) {
      const std::size_t key_at = line_start + lead;
      line = line.substr(lead);
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) format_fail(source, key_at, "expected 'key = value'");
      const std::string_view key = trim(line.substr(0, eq));
      const std::string_view raw = line.substr(eq + 1);
      const std::string_view value = trim(raw);
      const std::size_t value_at = line_start + lead + eq + 1 + std::min(raw.find_first_not_of(" \t"), raw.size());
      const auto it = setters().find(key);
      if (it == setters().end()) format_fail(source, key_at, "unknown key '" + std::string(key) + "'");
      if (seen.count(key)) format_fail(source, key_at, "duplicate key '" + std::string(key) + "'");
      if (value.empty()) format_fail(source, value_at, "missing value");
      seen.emplace(std::string(key), key_at);
      it->second(Value{value, source, value_at}, config, base_dir);
    }
    line_start = line_end + 1;
  }
  return config;
}

RunConfig load_config(const fs::path& path) {
  const std::string text = read_text(path);
  return parse_config(text, path.has_parent_path() ? path.parent_path() : fs::path("."), path.string());
}

// ---------------------------------------------------------------------------
// Problem assembly

namespace {

std::optional<FieldData> header_source(const RunConfig& c) {
  if (c.weight == WeightKind::File && !c.weight_file.empty())
    return parse_field(read_text(c.weight_file), c.weight_file.string());
  if (c.weight == WeightKind::Landscape && !c.potential_file.empty())
    return parse_field(read_text(c.potential_file), c.potential_file.string());
  return std::nullopt;
}

}  // namespace

GridPtr resolve_grid(const RunConfig& c) {
  int nx = 0, ny = 0;
  double h = 0.0;
  if (c.nx && c.ny && c.h) {
    nx = *c.nx;
    ny = *c.ny;
    h = *c.h;
  } else if (const auto data = header_source(c)) {
    nx = c.nx.value_or(data->nx);
    ny = c.ny.value_or(data->ny);
    h = c.h.value_or(data->h);
  } else {
    throw PreconditionError("grid.nx, grid.ny and grid.h are required when no field file fixes the grid");
  }
  if (nx < 1 || ny < 1) throw PreconditionError("grid dimensions must be positive");
  if (!(h > 0.0)) throw PreconditionError("grid.h must be positive");

  std::vector<std::uint8_t> mask;
  if (c.mask == MaskKind::Disc) {
    mask = disc_mask(nx, ny, h);
  } else if (c.mask == MaskKind::File) {
    auto m = parse_mask(read_text(c.mask_file), c.mask_file.string());
    if (m.nx != nx || m.ny != ny) throw PreconditionError("mask dimensions do not match the grid");
    mask = std::move(m.mask);
  }
  return make_grid(nx, ny, h, std::move(mask));
}

namespace {

ScalarField potential(const RunConfig& c, const GridPtr& grid) {
  if (c.potential_file.empty()) return ScalarField(grid, 0.0);
  return to_field(parse_field(read_text(c.potential_file), c.potential_file.string()), grid);
}

}  // namespace

Problem resolve_problem(const RunConfig& c) {
  GridPtr grid = resolve_grid(c);
  if (c.n_labels < 1) throw PreconditionError("model.n_labels must be at least 1");
  c.weight_spec.validate();

  EnergySpec spec = c.energy;
  if (!c.q_file.empty())
    spec.bulk.q_weight = to_field(parse_field(read_text(c.q_file), c.q_file.string()), grid);
  spec.validate(c.n_labels);

  std::optional<ScalarField> weight;
  switch (c.weight) {
    case WeightKind::Constant:
      if (!(c.weight_value >= c.weight_spec.delta && c.weight_value <= c.weight_spec.cap))
        throw PreconditionError("weight.value must lie in [weight.delta, weight.cap]");
      weight.emplace(grid, c.weight_value);
      break;
    case WeightKind::File: {
      if (c.weight_file.empty()) throw PreconditionError("weight.source = file needs weight.file");
      WeightSpec direct = c.weight_spec;
      direct.source = WeightSource::Direct;
      weight.emplace(build_weight(to_field(parse_field(read_text(c.weight_file), c.weight_file.string()), grid), direct));
      break;
    }
    case WeightKind::Landscape: {
      WeightSpec ls = c.weight_spec;
      ls.source = WeightSource::Landscape;
      weight.emplace(build_weight(solve_landscape(potential(c, grid), c.landscape).w, ls));
      break;
    }
  }
  return {grid, std::move(*weight), std::move(spec)};
}

// ---------------------------------------------------------------------------
// Commands

void cmd_landscape(const RunConfig& c, std::ostream& log) {
  GridPtr grid = resolve_grid(c);
  WeightSpec ls = c.weight_spec;
  ls.source = WeightSource::Landscape;
  ls.validate();
  const ScalarField V = potential(c, grid);
  const LandscapeSolution sol = solve_landscape(V, c.landscape);
  const ScalarField a = build_weight(sol.w, ls);

  OutputSet out;
  out.add(c.out_dir / "w.field", format_field(sol.w));
  out.add(c.out_dir / "weight.field", format_field(a));
  out.commit();
  log << "iterations = " << sol.iterations << '\n';
  log << "relative_residual = " << fmt(sol.relative_residual) << '\n';
  log << "max_w = " << fmt(sol.w.max_in_domain()) << '\n';
  if (const auto& tag = a.weight_tag()) log << "clamped_high = " << tag->clamped_high << '\n';
}

void cmd_partition(const RunConfig& c, std::ostream& log) {
  const Problem problem = resolve_problem(c);
  c.optimizer.validate(*problem.grid);

  MinimizeResult result = minimize(problem.grid, c.n_labels, problem.weight, problem.spec, c.optimizer);
  if (c.clean) {
    result.partition = wpart::clean(result.partition, problem.weight, problem.spec, c.min_component_volume);
    result.energy = total_energy(result.partition, problem.weight, problem.spec);
  }

  // The returned partition is the best seen, so it can never be worse than the start.
  if (result.trace.empty() || result.energy.total > result.trace.front().J + 1e-9 * (1.0 + std::abs(result.trace.front().J)))
    throw InvariantError("final energy exceeds the initial energy");
  if (!c.optimizer.annealing) {
    for (std::size_t k = 1; k < result.trace.size(); ++k)
      if (result.trace[k].J > result.trace[k - 1].J + 1e-9 * (1.0 + std::abs(result.trace[k - 1].J)))
        throw InvariantError("energy increased at sweep " + std::to_string(result.trace[k].sweep));
  }

  OutputSet out;
  out.add(c.out_dir / "labels.txt", format_labels(result.partition));
  out.add(c.out_dir / "trace.csv", format_trace(result.trace));
  out.add(c.out_dir / "energy.txt", format_energy(result.energy, result.partition));
  if (c.pgm) out.add(c.out_dir / "labels.pgm", format_pgm(result.partition));
  if (c.diagnose_after_partition) {
    const auto report = full_report(result.partition, problem.weight, problem.spec, c.weight_spec, c.diagnostics);
    out.add(c.out_dir / "report.txt", format_report(report));
  }
  out.commit();
  log << "sweeps = " << result.trace.back().sweep << '\n';
  log << "J = " << fmt(result.energy.total) << '\n';
}

void cmd_diagnose(const RunConfig& c, const fs::path& labels_file, std::ostream& log) {
  if (labels_file.empty()) throw PreconditionError("diagnose needs a label raster");
  const LabelData labels = parse_labels(read_text(labels_file), labels_file.string());
  const Problem problem = resolve_problem(c);
  const Partition p = to_partition(labels, problem.grid);
  if (p.n_labels() != c.n_labels)
    throw PreconditionError("label raster has N = " + std::to_string(p.n_labels()) + ", config has " +
                            std::to_string(c.n_labels));
  const auto report = full_report(p, problem.weight, problem.spec, c.weight_spec, c.diagnostics);
  OutputSet out;
  out.add(c.out_dir / "report.txt", format_report(report));
  out.commit();
  log << "interface_faces = " << report.interface_faces << '\n';
  log << "junctions = " << report.junctions.size() << '\n';
}

void cmd_oracle(const RunConfig& c, std::ostream& log) {
  const Problem problem = resolve_problem(c);
  std::optional<Partition> candidate;
  if (!c.oracle_verify.empty())
    candidate = to_partition(parse_labels(read_text(c.oracle_verify), c.oracle_verify.string()), problem.grid);

  const OracleResult r = brute_force_min(problem.grid, c.n_labels, problem.weight, problem.spec, c.oracle);
  std::string summary;
  summary += "J_min = " + fmt(r.J_min) + '\n';
  summary += "F = " + fmt(r.energy.interface_term) + '\n';
  summary += "G = " + fmt(r.energy.bulk_term) + '\n';
  summary += "count = " + fmt_int(r.count) + '\n';
  summary += "assignments = " + fmt_int(r.assignments) + '\n';
  if (candidate) {
    const double J = total_energy(*candidate, problem.weight, problem.spec).total;
    const double gap = J - r.J_min;
    summary += "candidate_J = " + fmt(J) + '\n';
    summary += "gap = " + fmt(gap) + '\n';
    summary += std::string("optimal = ") + (gap <= 1e-9 * (1.0 + std::abs(r.J_min)) ? "true" : "false") + '\n';
  }
  OutputSet out;
  out.add(c.out_dir / "oracle_labels.txt", format_labels(r.minimizer));
  out.add(c.out_dir / "oracle.txt", summary);
  out.commit();
  log << summary;
}

}  // namespace wpart::io
