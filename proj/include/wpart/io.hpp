#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wpart/diagnostics.hpp"
#include "wpart/energy.hpp"
#include "wpart/grid.hpp"
#include "wpart/landscape.hpp"
#include "wpart/optimizer.hpp"
#include "wpart/oracle.hpp"

namespace wpart::io {

// Text formats. Rows are written top row first; in memory row 0 is the bottom.
// Parse errors are FormatError naming the source and the byte offset.

struct FieldData {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  std::vector<double> values;  // grid index order
};

struct MaskData {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> mask;
};

struct LabelData {
  int nx = 0;
  int ny = 0;
  int n_labels = 0;
  std::vector<int> labels;  // 0 marks out-of-domain cells
};

std::string format_field(const ScalarField& f);
FieldData parse_field(std::string_view text, std::string_view source = "field");
/// Field on `grid`; PreconditionError when the header does not match it.
ScalarField to_field(const FieldData& data, const GridPtr& grid);

std::string format_mask(const Grid& g);
MaskData parse_mask(std::string_view text, std::string_view source = "mask");

std::string format_labels(const Partition& p);
LabelData parse_labels(std::string_view text, std::string_view source = "labels");
/// Partition on `grid`; PreconditionError on shape mismatch or labels disagreeing with the mask.
Partition to_partition(const LabelData& data, const GridPtr& grid);

std::string format_trace(const EnergyTrace& trace);
EnergyTrace parse_trace(std::string_view text, std::string_view source = "trace");

std::string format_energy(const EnergyBreakdown& e, const Partition& p);
/// Plain graymap (P2) of the labels, top row first, maxval max(N, 1).
std::string format_pgm(const Partition& p);
std::string format_report(const RegularityReport& r);

std::string read_text(const std::filesystem::path& path);

/**
 * Files written together: every file goes to a temporary sibling first and is
 * renamed into place only after all temporaries were written, so a failure
 * leaves none of the outputs behind.
 */
class OutputSet {
 public:
  void add(std::filesystem::path path, std::string content);
  void commit() const;

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

// ---------------------------------------------------------------------------
// Configuration

enum class MaskKind { All, Disc, File };
enum class WeightKind { Constant, File, Landscape };

struct RunConfig {
  std::optional<int> nx, ny;
  std::optional<double> h;
  MaskKind mask = MaskKind::All;
  std::filesystem::path mask_file;

  WeightKind weight = WeightKind::Constant;
  double weight_value = 1.0;
  std::filesystem::path weight_file;
  std::filesystem::path potential_file;  // empty: V = 0
  WeightSpec weight_spec;
  LandscapeOptions landscape;

  int n_labels = 2;
  EnergySpec energy;
  std::filesystem::path q_file;
  OptimizerConfig optimizer;
  bool clean = false;
  double min_component_volume = 0.0;

  DiagnosticsOptions diagnostics;
  bool diagnose_after_partition = false;

  OracleBudget oracle;
  std::filesystem::path oracle_verify;

  std::filesystem::path out_dir = ".";
  bool pgm = false;
};

/// Parses `key = value` lines; `#` starts a comment. Relative paths resolve against base_dir.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".",
                       std::string_view source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Everything a command needs, resolved from the config and validated.
struct Problem {
  GridPtr grid;
  ScalarField weight;
  EnergySpec spec;
};

GridPtr resolve_grid(const RunConfig& config);
Problem resolve_problem(const RunConfig& config);

// Commands. Each validates everything before writing; progress goes to `log`.
void cmd_landscape(const RunConfig& config, std::ostream& log);
void cmd_partition(const RunConfig& config, std::ostream& log);
void cmd_diagnose(const RunConfig& config, const std::filesystem::path& labels_file, std::ostream& log);
void cmd_oracle(const RunConfig& config, std::ostream& log);

}  // namespace wpart::io
