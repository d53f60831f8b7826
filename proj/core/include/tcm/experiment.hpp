#pragma once

// Experiment runner behind the tcm command-line tool: configuration files,
// seeded initial data, single runs, parameter sweeps, the inequality lab
// driver and offline decay fits.

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcm/diagnostics.hpp"
#include "tcm/integrator.hpp"
#include "tcm/model.hpp"
#include "tcm/random_fields.hpp"

namespace tcm {

inline constexpr int kSchemaVersion = 1;
inline constexpr double kMaxOrder = 4.0;

// Process exit codes, one per outcome class.
enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_config = 2,
  exit_blow_up = 3,
  exit_io = 4,
  exit_unstable_inequality = 5,
  exit_nonpositive_series = 6,
  exit_viscosity_floor = 7,
};

std::string_view version();

struct RunConfig {
  ModelInputs params;
  int n = 128;
  double box_length = 16.0 * std::numbers::pi;
  StepperConfig stepper;
  double epsilon = 0.01;
  std::uint64_t seed = 1;
  PeakedSpectrum spectrum;
  DiagnosticsSpec diagnostics;
  std::optional<std::pair<double, double>> fit_window;  // default [t_end/4, 3 t_end/4]
  std::filesystem::path output_dir;

  std::pair<double, double> window() const;
};

// Throws ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
// Fully resolved echo; parse_run_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& c);

// Leray-projected random u, random v and theta with the configured spectrum,
// rescaled so smallness_norm equals epsilon.
TcmState make_initial_data(const RunConfig& config, const ModelParams& params);

struct RunResult {
  int exit_code = exit_ok;
  std::string message;
  std::vector<DiagnosticsRecord> records;
  nlohmann::json summary;
};

// Integrates one configuration and evaluates the verdicts; nothing on disk.
RunResult simulate(const RunConfig& config);

// Verdicts and fits over a finished trajectory.
nlohmann::json summarize(const RunConfig& config, const ModelParams& params,
                         const std::vector<DiagnosticsRecord>& records, const RunStats& stats);

struct CommandOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;  // 0: hardware concurrency
  bool quiet = false;
};

// Each command returns an ExitCode and never throws.
int cmd_run(const std::filesystem::path& config_path, const CommandOptions& options);
int cmd_run(RunConfig config, const CommandOptions& options);
int cmd_sweep(const std::filesystem::path& sweep_path, const CommandOptions& options);
int cmd_validate(const std::optional<std::filesystem::path>& config_path,
                 const CommandOptions& options);

struct FitRequest {
  std::filesystem::path trajectory;
  FieldId field = FieldId::u;
  double gamma = 0.0;
  std::optional<std::pair<double, double>> window;  // default: middle half of the time span
  bool damped = false;
};
int cmd_fit(const FitRequest& request, const CommandOptions& options);

}  // namespace tcm
