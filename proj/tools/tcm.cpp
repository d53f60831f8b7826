// tcm: command-line front end for runs, sweeps, the inequality lab and fits.

#include <CLI11.hpp>

#include <iostream>

#include "tcm/errors.hpp"
#include "tcm/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-spectral tropical climate model simulator"};
  app.set_version_flag("--version", std::string(tcm::version()));
  app.require_subcommand(1);

  tcm::CommandOptions common;
  std::string out;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "Output directory (falls back to TCM_OUT_DIR)");
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--threads", common.threads, "Worker threads for sweeps (0: all cores)");
    sub->add_flag("--quiet", common.quiet, "Suppress progress output");
  };

  std::string config;
  auto* run = app.add_subcommand("run", "Integrate one configuration");
  run->add_option("--config", config, "Run configuration (JSON)")->required();
  add_common(run);

  std::string sweep_file;
  auto* sweep = app.add_subcommand("sweep", "Cartesian parameter sweep");
  sweep->add_option("--config", sweep_file, "Sweep description (JSON)")->required();
  add_common(sweep);

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Randomized functional-inequality checks");
  validate->add_option("--config", validate_config, "Lab options (JSON)");
  add_common(validate);

  tcm::FitRequest fit;
  std::string trajectory, field = "u";
  std::vector<double> window;
  auto* fitcmd = app.add_subcommand("fit", "Fit a decay exponent to a stored trajectory");
  fitcmd->add_option("trajectory", trajectory, "diagnostics.csv of a finished run")->required();
  fitcmd->add_option("--field", field, "u, v or theta")->required();
  fitcmd->add_option("--gamma", fit.gamma, "Derivative order of the tracked norm")->required();
  fitcmd->add_option("--window", window, "Fit window t0 t1")->expected(2);
  fitcmd->add_flag("--damped", fit.damped, "Compare against the damped (alpha > 0) rate");
  add_common(fitcmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tcm::exit_config;
  }
  if (!out.empty()) common.out = out;
  for (auto* sub : {run, sweep, validate, fitcmd}) {
    if (sub->parsed() && sub->count("--seed")) common.seed = seed;
  }

  if (run->parsed()) return tcm::cmd_run(config, common);
  if (sweep->parsed()) return tcm::cmd_sweep(sweep_file, common);
  if (validate->parsed()) {
    std::optional<std::filesystem::path> path;
    if (!validate_config.empty()) path = validate_config;
    return tcm::cmd_validate(path, common);
  }
  try {
    fit.field = tcm::parse_field(field);
  } catch (const tcm::ConfigError& e) {
    std::cerr << "tcm fit: " << e.what() << '\n';
    return tcm::exit_config;
  }
  fit.trajectory = trajectory;
  if (!window.empty()) fit.window = std::make_pair(window[0], window[1]);
  return tcm::cmd_fit(fit, common);
}
