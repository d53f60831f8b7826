#include "tcm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "tcm/errors.hpp"
#include "tcm/inequality_lab.hpp"
#include "tcm/record_io.hpp"

namespace tcm {

std::string_view version() { return TCM_VERSION; }

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

double get_number(const json& j, const char* key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + key + " must be a number");
  return v.get<double>();
}

std::optional<double> get_optional(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_number(j, key, where, 0.0);
}

std::string get_string(const json& j, const char* key, const std::string& where, std::string fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(where + key + " must be a string");
  return v.get<std::string>();
}

std::pair<double, double> get_window(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(name + " must be a pair [t0, t1]");
  }
  const double a = v[0].get<double>(), b = v[1].get<double>();
  if (!(a < b)) throw ConfigError(name + " must satisfy t0 < t1");
  return {a, b};
}

std::string scheme_name(Scheme s) { return s == Scheme::if_rk4 ? "if-rk4" : "imex-euler"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "if-rk4") return Scheme::if_rk4;
  if (name == "imex-euler") return Scheme::imex_euler;
  throw ConfigError("stepper.scheme must be \"if-rk4\" or \"imex-euler\", got \"" + name + "\"");
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::pair<int, std::string> classify(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    return {exit_config, x.what()};
  } catch (const json::exception& x) {
    return {exit_config, std::string("malformed configuration: ") + x.what()};
  } catch (const BlowUpError& x) {
    return {exit_blow_up, x.what()};
  } catch (const IoError& x) {
    return {exit_io, x.what()};
  } catch (const fs::filesystem_error& x) {
    return {exit_io, x.what()};
  } catch (const NonPositiveSeriesError& x) {
    return {exit_nonpositive_series, x.what()};
  } catch (const ViscosityFloorError& x) {
    return {exit_viscosity_floor, x.what()};
  } catch (const std::exception& x) {
    return {exit_internal, x.what()};
  } catch (...) {
    return {exit_internal, "unknown error"};
  }
}

fs::path resolve_output_dir(const std::optional<fs::path>& flag, const fs::path& configured) {
  if (flag) return *flag;
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("TCM_OUT_DIR"); env && *env) return env;
  throw ConfigError("no output directory: pass --out, set output_dir, or export TCM_OUT_DIR");
}

}  // namespace

std::pair<double, double> RunConfig::window() const {
  if (fit_window) return *fit_window;
  return {0.25 * stepper.t_end, 0.75 * stepper.t_end};
}

RunConfig parse_run_config(const json& j) {
  reject_unknown(j, "", {"schema_version", "params", "grid", "stepper", "epsilon", "seed", "spectrum",
                         "diagnostics", "fit_window", "output_dir"});
  RunConfig c;
  if (j.contains("schema_version")) {
    const auto& v = j.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
      throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
    }
  }

  if (j.contains("params")) {
    const auto& p = j.at("params");
    reject_unknown(p, "params", {"alpha", "beta", "mu_lower", "s", "eta", "kappa", "viscosity"});
    c.params.alpha = get_number(p, "alpha", "params.", c.params.alpha);
    c.params.beta = get_number(p, "beta", "params.", c.params.beta);
    c.params.mu_lower = get_number(p, "mu_lower", "params.", c.params.mu_lower);
    c.params.s = get_number(p, "s", "params.", c.params.s);
    c.params.eta = get_optional(p, "eta", "params.");
    c.params.kappa = get_optional(p, "kappa", "params.");
    if (p.contains("viscosity")) {
      const auto& v = p.at("viscosity");
      reject_unknown(v, "params.viscosity", {"law", "parameter"});
      c.params.viscosity = get_string(v, "law", "params.viscosity.", c.params.viscosity);
      c.params.viscosity_parameter =
          get_number(v, "parameter", "params.viscosity.", c.params.viscosity_parameter);
    }
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    reject_unknown(g, "grid", {"n", "box_length"});
    if (g.contains("n")) {
      if (!g.at("n").is_number_integer()) throw ConfigError("grid.n must be an integer");
      c.n = g.at("n").get<int>();
    }
    c.box_length = get_number(g, "box_length", "grid.", c.box_length);
  }
  if (c.n < 8 || c.n % 2 != 0) throw ConfigError("grid.n must be an even integer >= 8");
  if (!(c.box_length > 0.0)) throw ConfigError("grid.box_length must be > 0");

  if (j.contains("stepper")) {
    const auto& s = j.at("stepper");
    reject_unknown(s, "stepper", {"dt", "cfl", "t_end", "sample_every", "scheme"});
    if (s.contains("dt")) {
      const auto& dt = s.at("dt");
      if (dt.is_string() && dt.get<std::string>() == "auto") {
        c.stepper.dt.reset();
      } else if (dt.is_number()) {
        c.stepper.dt = dt.get<double>();
        if (!(*c.stepper.dt > 0.0)) throw ConfigError("stepper.dt must be > 0");
      } else {
        throw ConfigError("stepper.dt must be a number or \"auto\"");
      }
    }
    c.stepper.cfl = get_number(s, "cfl", "stepper.", c.stepper.cfl);
    c.stepper.t_end = get_number(s, "t_end", "stepper.", c.stepper.t_end);
    c.stepper.sample_every = get_number(s, "sample_every", "stepper.", c.stepper.sample_every);
    c.stepper.scheme = parse_scheme(get_string(s, "scheme", "stepper.", "if-rk4"));
  }
  if (!(c.stepper.cfl > 0.0 && c.stepper.cfl <= 1.0)) throw ConfigError("stepper.cfl must lie in (0, 1]");
  if (!(c.stepper.t_end >= 0.0) || !std::isfinite(c.stepper.t_end)) throw ConfigError("stepper.t_end must be >= 0");
  if (!(c.stepper.sample_every > 0.0)) throw ConfigError("stepper.sample_every must be > 0");

  c.epsilon = get_number(j, "epsilon", "", c.epsilon);
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed must be a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }

  if (j.contains("spectrum")) {
    const auto& s = j.at("spectrum");
    reject_unknown(s, "spectrum", {"peak", "slope"});
    c.spectrum.peak = get_number(s, "peak", "spectrum.", c.spectrum.peak);
    c.spectrum.slope = get_number(s, "slope", "spectrum.", c.spectrum.slope);
  }
  if (!(c.spectrum.peak > 0.0)) throw ConfigError("spectrum.peak must be > 0");

  // Validates s, beta, ... early so the error names the field.
  const ModelParams params = ModelParams::make(c.params);

  bool have_norms = false, have_orders = false;
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    reject_unknown(d, "diagnostics", {"norms", "orders"});
    if (d.contains("norms")) {
      have_norms = true;
      if (!d.at("norms").is_array()) throw ConfigError("diagnostics.norms must be an array");
      for (const auto& item : d.at("norms")) {
        reject_unknown(item, "diagnostics.norms[]", {"field", "gamma"});
        const std::string field = get_string(item, "field", "diagnostics.norms[].", "");
        const double gamma = get_number(item, "gamma", "diagnostics.norms[].", 0.0);
        if (!(gamma >= 0.0)) throw ConfigError("diagnostics.norms[].gamma must be >= 0");
        const NormKey key{parse_field(field), gamma};
        if (std::find(c.diagnostics.norms.begin(), c.diagnostics.norms.end(), key) ==
            c.diagnostics.norms.end()) {
          c.diagnostics.norms.push_back(key);
        }
      }
    }
    if (d.contains("orders")) {
      have_orders = true;
      if (!d.at("orders").is_array()) throw ConfigError("diagnostics.orders must be an array");
      for (const auto& m : d.at("orders")) {
        if (!m.is_number()) throw ConfigError("diagnostics.orders entries must be numbers");
        c.diagnostics.orders.push_back(m.get<double>());
      }
    }
  }
  if (!have_norms) {
    for (FieldId f : {FieldId::u, FieldId::v, FieldId::theta}) {
      for (double g : {0.0, 1.0}) c.diagnostics.norms.push_back({f, g});
    }
  }
  if (!have_orders) c.diagnostics.orders = {params.s()};
  for (double m : c.diagnostics.orders) {
    if (m < params.s() || m > kMaxOrder) {
      throw ConfigError("diagnostics.orders entries must lie in [s, " + format_number(kMaxOrder) + "]");
    }
  }

  if (j.contains("fit_window") && !j.at("fit_window").is_null()) {
    c.fit_window = get_window(j.at("fit_window"), "fit_window");
  }
  c.output_dir = get_string(j, "output_dir", "", "");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& c) {
  json params = {{"alpha", c.params.alpha},
                 {"beta", c.params.beta},
                 {"mu_lower", c.params.mu_lower},
                 {"s", c.params.s},
                 {"viscosity", {{"law", c.params.viscosity}, {"parameter", c.params.viscosity_parameter}}}};
  if (c.params.eta) params["eta"] = *c.params.eta;
  if (c.params.kappa) params["kappa"] = *c.params.kappa;
  json stepper = {{"cfl", c.stepper.cfl},
                  {"t_end", c.stepper.t_end},
                  {"sample_every", c.stepper.sample_every},
                  {"scheme", scheme_name(c.stepper.scheme)}};
  stepper["dt"] = c.stepper.dt ? json(*c.stepper.dt) : json("auto");
  json norms = json::array();
  for (const auto& k : c.diagnostics.norms) norms.push_back({{"field", field_name(k.field)}, {"gamma", k.gamma}});
  json j = {{"schema_version", kSchemaVersion},
            {"params", params},
            {"grid", {{"n", c.n}, {"box_length", c.box_length}}},
            {"stepper", stepper},
            {"epsilon", c.epsilon},
            {"seed", c.seed},
            {"spectrum", {{"peak", c.spectrum.peak}, {"slope", c.spectrum.slope}}},
            {"diagnostics", {{"norms", norms}, {"orders", c.diagnostics.orders}}}};
  if (c.fit_window) j["fit_window"] = {c.fit_window->first, c.fit_window->second};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir.string();
  return j;
}

TcmState make_initial_data(const RunConfig& config, const ModelParams& params) {
  const GridPtr grid = SpectralGrid::make(config.n, config.box_length);
  const PeakedSpectrum spectrum = config.spectrum;
  const auto amplitude = [&](double m) { return spectrum.amplitude(m); };
  const int band = grid->dealias_limit();

  for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
    Rng rng(config.seed + attempt * 0x9E3779B97F4A7C15ULL);
    TcmState state(grid);
    state.u.x = random_field(grid, rng, amplitude, band);
    state.u.y = random_field(grid, rng, amplitude, band);
    state.v.x = random_field(grid, rng, amplitude, band);
    state.v.y = random_field(grid, rng, amplitude, band);
    state.theta = random_field(grid, rng, amplitude, band);
    state.u = leray_project(state.u);
    const double norm = smallness_norm(state, params);
    if (!(norm > 0.0) || !std::isfinite(norm)) continue;
    state *= config.epsilon / norm;
    return state;
  }
  throw ConfigError("initial data: random draw vanished; check spectrum.peak against grid.n");
}

json summarize(const RunConfig& config, const ModelParams& params,
               const std::vector<DiagnosticsRecord>& records, const RunStats& stats) {
  json s;
  s["steps"] = stats.steps;
  s["dt_max"] = stats.max_dt;
  s["dt_min"] = stats.min_dt;
  s["samples"] = records.size();
  if (records.empty()) return s;

  double sup = 0.0;
  for (const auto& r : records) sup = std::max(sup, r.norm_sum);
  s["stability"] = {{"sup_norm_sum", sup},
                    {"bound", 2.0 * config.epsilon},
                    {"verdict", sup < 2.0 * config.epsilon ? "pass" : "fail"}};

  // The tolerance uses the largest step actually taken.
  const double dt = stats.max_dt > 0.0 ? stats.max_dt : config.stepper.sample_every;
  json mono = json::array();
  bool mono_ok = true;
  for (std::size_t i = 0; i < config.diagnostics.orders.size(); ++i) {
    const auto rep = check_x_monotonicity(records, i, dt);
    mono_ok = mono_ok && rep.violations == 0;
    mono.push_back({{"m", config.diagnostics.orders[i]},
                    {"intervals", rep.intervals},
                    {"violations", rep.violations},
                    {"worst_excess", rep.worst_excess}});
  }
  s["x_monotonicity"] = {{"verdict", mono_ok ? "pass" : "fail"}, {"orders", mono}};

  const auto eq = check_equivalence_bands(records);
  s["equivalence"] = {{"samples", eq.samples},
                      {"a_violations", eq.a_violations},
                      {"x_violations", eq.x_violations},
                      {"verdict", eq.a_violations + eq.x_violations == 0 ? "pass" : "fail"}};

  if (!config.diagnostics.orders.empty()) {
    const auto db = check_differential_bound(records, 0, params.s());
    s["differential_bound"] = {{"m", config.diagnostics.orders[0]},
                               {"calibrated_c", db.calibrated_c},
                               {"checked", db.checked},
                               {"violations", db.violations}};
  }

  double worst_residual = 0.0;
  for (const auto& r : records) {
    const double scale = r.dissipation_rate > 0.0 ? r.dissipation_rate : 1.0;
    worst_residual = std::max(worst_residual, std::abs(r.budget_residual) / scale);
  }
  const auto& first = records.front();
  const auto& last = records.back();
  const double drift = first.energy - last.energy;
  const double mismatch = std::abs(drift - last.dissipated);
  s["energy"] = {{"initial", first.energy},
                 {"final", last.energy},
                 {"drift", drift},
                 {"dissipated", last.dissipated},
                 {"relative_mismatch", last.dissipated > 0.0 ? mismatch / last.dissipated : mismatch},
                 {"max_relative_budget_residual", worst_residual}};

  const auto [t0, t1] = config.window();
  json fits = json::array();
  for (std::size_t k = 0; k < config.diagnostics.norms.size(); ++k) {
    const NormKey key = config.diagnostics.norms[k];
    std::vector<Sample> series;
    for (const auto& r : records) series.push_back({r.time, r.norms.at(k).second});
    const double theory = theory_exponent(key.field, key.gamma, params.damped());
    json f = {{"field", field_name(key.field)},
              {"gamma", key.gamma},
              {"column", key.column()},
              {"window", {t0, t1}},
              {"theory", theory}};
    try {
      const DecayFit fit = decay_fit(series, t0, t1);
      f["exponent"] = fit.exponent;
      f["difference"] = fit.exponent - theory;
      f["r_squared"] = fit.r_squared;
      f["samples"] = fit.samples;
    } catch (const Error& e) {
      f["error"] = e.what();
    }
    fits.push_back(f);
  }
  s["fits"] = fits;
  return s;
}

namespace {

// Runs one configuration, streaming records to sink. Failures after the
// first record leave the collected prefix in result.records.
RunResult integrate(const RunConfig& config, const RecordSink& extra_sink) {
  RunResult result;
  RunStats stats;
  try {
    const ModelParams params = ModelParams::make(config.params);
    const TcmState initial = make_initial_data(config, params);
    run(initial, params, config.stepper, config.diagnostics,
        [&](const DiagnosticsRecord& r) {
          result.records.push_back(r);
          if (extra_sink) extra_sink(r);
        },
        &stats);
    result.summary = summarize(config, params, result.records, stats);
    result.summary["status"] = "ok";
  } catch (...) {
    std::tie(result.exit_code, result.message) = classify(std::current_exception());
    if (result.exit_code == exit_config) throw;
    result.summary["status"] = "failed";
    result.summary["error"] = result.message;
    result.summary["exit_code"] = result.exit_code;
    result.summary["samples"] = result.records.size();
    if (!result.records.empty()) result.summary["last_time"] = result.records.back().time;
  }
  return result;
}

json derived_block(const ModelParams& p) {
  return {{"lambda", p.lambda()}, {"delta1", p.delta1()}, {"eta", p.eta()},
          {"kappa", p.kappa()},   {"mu_zero", p.mu_zero()}};
}

// Full artifact-writing run into dir.
RunResult execute(const RunConfig& config, const fs::path& dir) {
  const ModelParams params = ModelParams::make(config.params);
  fs::create_directories(dir);
  json manifest = {{"config", to_json(config)},
                   {"derived", derived_block(params)},
                   {"version", version()},
                   {"start_time", utc_now()},
                   {"status", "running"}};
  write_json(dir / "manifest.json", manifest);

  const auto started = std::chrono::steady_clock::now();
  TrajectoryWriter writer(dir, config.diagnostics);
  RunResult result = integrate(config, [&](const DiagnosticsRecord& r) { writer.write(r); });
  writer.flush();
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  manifest["end_time"] = utc_now();
  manifest["wall_seconds"] = wall;
  manifest["status"] = result.exit_code == exit_ok ? "ok" : "failed";
  manifest["exit_code"] = result.exit_code;
  if (!result.message.empty()) manifest["message"] = result.message;
  write_json(dir / "summary.json", result.summary);
  write_json(dir / "manifest.json", manifest);
  return result;
}

void report(bool quiet, const std::string& line) {
  if (!quiet) std::cout << line << '\n';
}

}  // namespace

RunResult simulate(const RunConfig& config) {
  try {
    return integrate(config, nullptr);
  } catch (...) {
    RunResult r;
    std::tie(r.exit_code, r.message) = classify(std::current_exception());
    return r;
  }
}

int cmd_run(RunConfig config, const CommandOptions& options) {
  try {
    if (options.seed) config.seed = *options.seed;
    const fs::path dir = resolve_output_dir(options.out, config.output_dir);
    const RunResult result = execute(config, dir);
    if (result.exit_code != exit_ok) {
      std::cerr << "tcm run: " << result.message << '\n';
      return result.exit_code;
    }
    const auto& st = result.summary["stability"];
    report(options.quiet, "run finished: " + std::to_string(result.records.size()) + " samples, sup norm sum " +
                              format_number(st["sup_norm_sum"].get<double>()) + " (bound " +
                              format_number(st["bound"].get<double>()) + ", " +
                              st["verdict"].get<std::string>() + "); X monotonicity " +
                              result.summary["x_monotonicity"]["verdict"].get<std::string>());
    report(options.quiet, "artifacts in " + dir.string());
    return exit_ok;
  } catch (...) {
    const auto [code, message] = classify(std::current_exception());
    std::cerr << "tcm run: " << message << '\n';
    return code;
  }
}

int cmd_run(const fs::path& config_path, const CommandOptions& options) {
  try {
    return cmd_run(load_run_config(config_path), options);
  } catch (...) {
    const auto [code, message] = classify(std::current_exception());
    std::cerr << "tcm run: " << message << '\n';
    return code;
  }
}

namespace {

struct SweepCell {
  std::size_t index = 0;
  std::string name;
  RunConfig config;
  int exit_code = exit_ok;
  std::string message;
  json summary;
};

const std::vector<std::string> kSweepAxes{"alpha", "beta", "epsilon", "s", "n"};

void apply_axis(json& base, const std::string& axis, const json& value) {
  if (axis == "n") {
    base["grid"]["n"] = value;
  } else if (axis == "epsilon") {
    base["epsilon"] = value;
  } else {
    base["params"][axis] = value;
  }
}

std::string cell_name(std::size_t index, const std::vector<std::pair<std::string, json>>& values) {
  char prefix[32];
  std::snprintf(prefix, sizeof prefix, "cell_%03zu", index);
  std::string name = prefix;
  for (const auto& [axis, v] : values) name += "_" + axis + "=" + (v.is_number() ? format_number(v.get<double>()) : v.dump());
  return name;
}

}  // namespace

int cmd_sweep(const fs::path& sweep_path, const CommandOptions& options) {
  try {
    std::ifstream in(sweep_path);
    if (!in) throw ConfigError("cannot read sweep file " + sweep_path.string());
    json sweep;
    try {
      sweep = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(sweep_path.string() + ": " + e.what());
    }
    reject_unknown(sweep, "", {"schema_version", "base", "axes", "output_dir"});
    json base = sweep.value("base", json::object());
    if (!base.is_object()) throw ConfigError("base must be an object");
    const json axes = sweep.value("axes", json::object());
    reject_unknown(axes, "axes", {"alpha", "beta", "epsilon", "s", "n"});

    // Cartesian product in a fixed axis order.
    std::vector<std::vector<std::pair<std::string, json>>> combos{{}};
    for (const auto& axis : kSweepAxes) {
      if (!axes.contains(axis)) continue;
      const auto& grid = axes.at(axis);
      if (!grid.is_array() || grid.empty()) throw ConfigError("axes." + axis + " must be a non-empty array");
      std::vector<std::vector<std::pair<std::string, json>>> next;
      for (const auto& prefix : combos) {
        for (const auto& v : grid) {
          auto c = prefix;
          c.emplace_back(axis, v);
          next.push_back(std::move(c));
        }
      }
      combos = std::move(next);
    }

    const fs::path root =
        resolve_output_dir(options.out, sweep.contains("output_dir") ? fs::path(sweep.at("output_dir").get<std::string>())
                                                                     : fs::path(base.value("output_dir", "")));
    std::vector<SweepCell> cells;
    for (std::size_t i = 0; i < combos.size(); ++i) {
      json cfg = base;
      for (const auto& [axis, v] : combos[i]) apply_axis(cfg, axis, v);
      cfg.erase("output_dir");
      SweepCell cell;
      cell.index = i;
      cell.name = cell_name(i, combos[i]);
      try {
        cell.config = parse_run_config(cfg);
      } catch (const ConfigError& e) {
        throw ConfigError(cell.name + ": " + e.what());
      }
      if (options.seed) cell.config.seed = *options.seed;
      cells.push_back(std::move(cell));
    }
    fs::create_directories(root);

    unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));
    std::atomic<std::size_t> next{0};
    std::mutex out_mutex;
    auto work = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        auto& cell = cells[i];
        try {
          const RunResult r = execute(cell.config, root / cell.name);
          cell.exit_code = r.exit_code;
          cell.message = r.message;
          cell.summary = r.summary;
        } catch (...) {
          std::tie(cell.exit_code, cell.message) = classify(std::current_exception());
        }
        std::lock_guard lock(out_mutex);
        report(options.quiet, cell.name + ": " + (cell.exit_code == exit_ok ? "ok" : "failed (" + cell.message + ")"));
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    // Aggregate keyed by parameters, one row per cell.
    std::string csv = "cell,alpha,beta,epsilon,s,n,exit_code,stability,x_monotonicity";
    const auto& norms = cells.front().config.diagnostics.norms;
    for (const auto& k : norms) csv += ",exp_" + k.column() + ",theory_" + k.column();
    csv += '\n';
    int failures = 0;
    for (const auto& cell : cells) {
      const auto& c = cell.config;
      csv += cell.name + "," + format_number(c.params.alpha) + "," + format_number(c.params.beta) + "," +
             format_number(c.epsilon) + "," + format_number(c.params.s) + "," + std::to_string(c.n) + "," +
             std::to_string(cell.exit_code);
      const json& s = cell.summary;
      const bool ok = cell.exit_code == exit_ok;
      csv += "," + (ok ? s["stability"]["verdict"].get<std::string>() : std::string("na"));
      csv += "," + (ok ? s["x_monotonicity"]["verdict"].get<std::string>() : std::string("na"));
      for (std::size_t k = 0; k < norms.size(); ++k) {
        const json* fit = nullptr;
        if (ok && k < s["fits"].size()) fit = &s["fits"][k];
        const bool has = fit && fit->contains("exponent");
        csv += "," + (has ? format_number((*fit)["exponent"].get<double>()) : std::string("nan"));
        csv += "," + (fit ? format_number((*fit)["theory"].get<double>()) : std::string("nan"));
      }
      csv += '\n';
      if (!ok) ++failures;
    }
    write_text(root / "aggregate.csv", csv);
    report(options.quiet, std::to_string(cells.size() - failures) + "/" + std::to_string(cells.size()) +
                              " cells succeeded; aggregate in " + (root / "aggregate.csv").string());
    if (failures == 0) return exit_ok;
    // A partially failed sweep reports the first failing cell's class.
    for (const auto& cell : cells) {
      if (cell.exit_code != exit_ok) return cell.exit_code;
    }
    return exit_internal;
  } catch (...) {
    const auto [code, message] = classify(std::current_exception());
    std::cerr << "tcm sweep: " << message << '\n';
    return code;
  }
}

int cmd_validate(const std::optional<fs::path>& config_path, const CommandOptions& options) {
  try {
    LabOptions lab;
    double s1 = 0.0, s = 1.0, s2 = 2.0, kp_s = 1.5, comp_s = 1.5;
    ModelInputs law_inputs;
    fs::path configured_out;
    if (config_path) {
      std::ifstream in(*config_path);
      if (!in) throw ConfigError("cannot read validate config " + config_path->string());
      const json j = json::parse(in);
      reject_unknown(j, "", {"schema_version", "trials", "resolutions", "box_length", "seed", "interpolation",
                             "kato_ponce_s", "composition_s", "viscosity", "output_dir",
                             "interpolation_exponent_bias"});
      if (j.contains("trials")) {
        if (!j.at("trials").is_number_integer() || j.at("trials").get<long long>() < 0) {
          throw ConfigError("trials must be a non-negative integer");
        }
        lab.trials = j.at("trials").get<std::size_t>();
      }
      if (j.contains("resolutions")) lab.resolutions = j.at("resolutions").get<std::vector<int>>();
      lab.box_length = get_number(j, "box_length", "", lab.box_length);
      if (j.contains("seed")) lab.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("interpolation")) {
        const auto& v = j.at("interpolation");
        if (!v.is_array() || v.size() != 3) throw ConfigError("interpolation must be [s1, s, s2]");
        s1 = v[0].get<double>();
        s = v[1].get<double>();
        s2 = v[2].get<double>();
      }
      kp_s = get_number(j, "kato_ponce_s", "", kp_s);
      lab.interpolation_exponent_bias =
          get_number(j, "interpolation_exponent_bias", "", lab.interpolation_exponent_bias);
      comp_s = get_number(j, "composition_s", "", comp_s);
      if (j.contains("viscosity")) {
        const auto& v = j.at("viscosity");
        reject_unknown(v, "viscosity", {"law", "parameter"});
        law_inputs.viscosity = get_string(v, "law", "viscosity.", law_inputs.viscosity);
        law_inputs.viscosity_parameter = get_number(v, "parameter", "viscosity.", law_inputs.viscosity_parameter);
      }
      configured_out = get_string(j, "output_dir", "", "");
    }
    if (options.seed) lab.seed = *options.seed;
    if (lab.trials == 0) throw ConfigError("trials must be >= 1");
    for (int n : lab.resolutions) {
      if (n < 8 || n % 2 != 0) throw ConfigError("resolutions must be even integers >= 8");
    }

    const ViscosityLaw law =
        ViscosityLaw::from_name(law_inputs.viscosity, law_inputs.mu_lower, law_inputs.viscosity_parameter);
    std::vector<InequalityReport> reports;
    reports.push_back(check_gn(lab));
    reports.push_back(check_interpolation(lab, s1, s, s2));
    reports.push_back(check_kato_ponce(lab, kp_s));
    reports.push_back(check_composition(lab, comp_s, [law](double t) { return law(t); }));

    if (!options.quiet) std::cout << summary_table(reports);
    json out = json::array();
    for (const auto& r : reports) out.push_back(to_json(r));

    std::optional<fs::path> dir = options.out;
    if (!dir && !configured_out.empty()) dir = configured_out;
    if (dir) {
      fs::create_directories(*dir);
      write_json(*dir / "validate.json", {{"version", version()}, {"reports", out}});
    }

    int code = exit_ok;
    for (const auto& r : reports) {
      if (!r.stable) {
        std::cerr << "tcm validate: " << r.name << " is not stable across resolutions\n";
        code = exit_unstable_inequality;
      }
      if (r.has_exact_constant && !r.exact_constant_ok) {
        std::cerr << "tcm validate: " << r.name << " exceeds its exact constant "
                  << format_number(r.exact_constant) << " (worst " << format_number(r.worst_ratio) << ")\n";
        code = exit_unstable_inequality;
      }
    }
    return code;
  } catch (...) {
    const auto [code, message] = classify(std::current_exception());
    std::cerr << "tcm validate: " << message << '\n';
    return code;
  }
}

int cmd_fit(const FitRequest& request, const CommandOptions& options) {
  try {
    if (!(request.gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    const CsvTable table = read_csv(request.trajectory);
    const NormKey key{request.field, request.gamma};
    const auto col = table.column(key.column());
    if (!col) throw ConfigError("trajectory has no column '" + key.column() + "'");
    const auto tcol = table.column("t");
    if (!tcol) throw ConfigError("trajectory has no column 't'");
    if (table.rows.empty()) throw ConfigError("trajectory has no rows");

    std::vector<Sample> series;
    for (const auto& row : table.rows) series.push_back({row[*tcol], row[*col]});
    std::pair<double, double> window;
    if (request.window) {
      window = *request.window;
    } else {
      const double a = series.front().t, b = series.back().t;
      window = {a + 0.25 * (b - a), a + 0.75 * (b - a)};
    }
    DecayFit fit = decay_fit(series, window.first, window.second);
    fit.field = std::string(field_name(request.field));
    fit.gamma = request.gamma;
    fit.theory_exponent = theory_exponent(request.field, request.gamma, request.damped);

    const json j = {{"column", key.column()},
                    {"window", {fit.t0, fit.t1}},
                    {"samples", fit.samples},
                    {"exponent", fit.exponent},
                    {"theory", fit.theory_exponent},
                    {"difference", fit.exponent - fit.theory_exponent},
                    {"r_squared", fit.r_squared},
                    {"damped", request.damped}};
    if (!options.quiet) {
      std::cout << key.column() << ": fitted " << format_number(fit.exponent) << ", theory "
                << format_number(fit.theory_exponent) << ", difference "
                << format_number(fit.exponent - fit.theory_exponent) << " (r^2 " << format_number(fit.r_squared)
                << ", " << fit.samples << " samples in [" << format_number(fit.t0) << ", "
                << format_number(fit.t1) << "])\n";
    }
    std::cout << j.dump() << '\n';
    if (options.out) {
      fs::create_directories(*options.out);
      write_json(*options.out / "fit.json", j);
    }
    return exit_ok;
  } catch (...) {
    const auto [code, message] = classify(std::current_exception());
    std::cerr << "tcm fit: " << message << '\n';
    return code;
  }
}

}  // namespace tcm
