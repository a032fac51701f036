#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace confplan::harness {

enum class PlotKind {
  trajectory_frames,
  confidence_evolution,
  coverage_curve,
  lambda_trace,
  quantile_table_heatmap
};

std::string to_string(PlotKind k);
PlotKind plot_kind_from_string(const std::string& name);

/// CSV file written by the harness that the requested plot expects.
std::string default_data_file(PlotKind k);

struct PlotSpec {
  PlotKind kind = PlotKind::trajectory_frames;
  std::filesystem::path data_path;
  std::filesystem::path output_path;
};

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header-indexed CSV with string cells. No quoting: the harness never
/// writes commas inside fields.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& file);
  static CsvTable parse(const std::string& text, const std::string& source = "<memory>");

  // Throws PlotError listing every missing column.
  void require(const std::vector<std::string>& columns) const;
  bool has(const std::string& column) const { return index_.count(column) > 0; }
  std::size_t rows() const { return rows_.size(); }
  const std::string& cell(std::size_t row, const std::string& column) const;
  double number(std::size_t row, const std::string& column) const;

 private:
  std::string source_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

/// Renders a self-contained SVG. Coordinates are printed with two decimals,
/// so identical input gives identical bytes.
std::string render_plot(PlotKind kind, const CsvTable& data);

void emit_plot(const PlotSpec& spec);

}  // namespace confplan::harness
