#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcm/diagnostics.hpp"

namespace tcm {

// Column order of diagnostics.csv:
//   t, <field>_gamma_<g> per tracked norm,
//   A_<m>, B_<m>, Bs_<m>, X_<m>, Y_<m> per functional order,
//   cross_s, cross_1, budget_residual,
//   dissipation_rate, energy, dissipated, norm_sum, linf_u, linf_v, linf_theta, div_u
std::vector<std::string> csv_columns(const DiagnosticsSpec& spec);
std::string csv_row(const DiagnosticsRecord& r);

nlohmann::json to_json(const DiagnosticsRecord& r);

// Streams records to diagnostics.csv and diagnostics.jsonl inside a directory.
class TrajectoryWriter {
 public:
  TrajectoryWriter(const std::filesystem::path& dir, const DiagnosticsSpec& spec);
  void write(const DiagnosticsRecord& r);
  void flush();

 private:
  std::ofstream csv_;
  std::ofstream jsonl_;
  std::filesystem::path dir_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

// Reads a numeric CSV with a single header row. Throws IoError.
CsvTable read_csv(const std::filesystem::path& path);

// Writes text atomically enough for our purposes (truncate + write + check).
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tcm
