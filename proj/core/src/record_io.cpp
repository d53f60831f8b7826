#include "tcm/record_io.hpp"

#include <charconv>
#include <sstream>

#include "tcm/errors.hpp"

namespace tcm {

std::vector<std::string> csv_columns(const DiagnosticsSpec& spec) {
  std::vector<std::string> cols{"t"};
  for (const auto& k : spec.norms) cols.push_back(k.column());
  for (double m : spec.orders) {
    const std::string tag = format_number(m);
    for (const char* name : {"A_", "B_", "Bs_", "X_", "Y_"}) cols.push_back(name + tag);
  }
  for (const char* name : {"cross_s", "cross_1", "budget_residual", "dissipation_rate", "energy",
                           "dissipated", "norm_sum", "linf_u", "linf_v", "linf_theta", "div_u"}) {
    cols.emplace_back(name);
  }
  return cols;
}

std::string csv_row(const DiagnosticsRecord& r) {
  std::string line = format_number(r.time);
  auto add = [&](double x) {
    line += ',';
    line += format_number(x);
  };
  for (const auto& [key, value] : r.norms) add(value);
  for (const auto& f : r.functionals) {
    add(f.A);
    add(f.B);
    add(f.B_s);
    add(f.X);
    add(f.Y);
  }
  for (double x : {r.cross_s, r.cross_1, r.budget_residual, r.dissipation_rate, r.energy,
                   r.dissipated, r.norm_sum, r.linf[0], r.linf[1], r.linf[2], r.divergence}) {
    add(x);
  }
  return line;
}

nlohmann::json to_json(const DiagnosticsRecord& r) {
  nlohmann::json j;
  j["t"] = r.time;
  auto& norms = j["norms"] = nlohmann::json::object();
  for (const auto& [key, value] : r.norms) norms[key.column()] = value;
  auto& funcs = j["functionals"] = nlohmann::json::array();
  for (const auto& f : r.functionals) {
    funcs.push_back({{"m", f.order},
                     {"A", f.A},
                     {"B", f.B},
                     {"B_s", f.B_s},
                     {"X", f.X},
                     {"Y", f.Y},
                     {"sigma_A", f.sigma_A},
                     {"sigma_X", f.sigma_X}});
  }
  j["cross_s"] = r.cross_s;
  j["cross_1"] = r.cross_1;
  j["budget_residual"] = r.budget_residual;
  j["dissipation_rate"] = r.dissipation_rate;
  j["energy"] = r.energy;
  j["dissipated"] = r.dissipated;
  j["norm_sum"] = r.norm_sum;
  j["linf"] = {{"u", r.linf[0]}, {"v", r.linf[1]}, {"theta", r.linf[2]}};
  j["div_u"] = r.divergence;
  return j;
}

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& dir, const DiagnosticsSpec& spec)
    : dir_(dir) {
  csv_.open(dir / "diagnostics.csv", std::ios::out | std::ios::trunc);
  jsonl_.open(dir / "diagnostics.jsonl", std::ios::out | std::ios::trunc);
  if (!csv_ || !jsonl_) throw IoError("cannot open trajectory files in " + dir.string());
  const auto cols = csv_columns(spec);
  for (std::size_t i = 0; i < cols.size(); ++i) csv_ << (i ? "," : "") << cols[i];
  csv_ << '\n';
}

void TrajectoryWriter::write(const DiagnosticsRecord& r) {
  csv_ << csv_row(r) << '\n';
  jsonl_ << to_json(r).dump() << '\n';
  if (!csv_ || !jsonl_) throw IoError("write failed in " + dir_.string());
}

void TrajectoryWriter::flush() {
  csv_.flush();
  jsonl_.flush();
  if (!csv_ || !jsonl_) throw IoError("flush failed in " + dir_.string());
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != table.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": column count mismatch");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace tcm
