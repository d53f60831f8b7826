#pragma once

#include <functional>
#include <optional>

#include "tcm/diagnostics.hpp"
#include "tcm/model.hpp"

namespace tcm {

enum class Scheme {
  if_rk4,      // integrating-factor (Lawson) RK4
  imex_euler,  // linear part backward Euler, the rest forward Euler
};

struct StepperConfig {
  std::optional<double> dt;  // nullopt: choose from stable_dt each sample interval
  double cfl = 0.5;
  double t_end = 1.0;
  double sample_every = 0.1;
  Scheme scheme = Scheme::if_rk4;
};

// cfl / (k_max (|u|_inf + |v|_inf) + k_max^2 max|mu(theta) - mu(0)| + beta + alpha + k_max).
// Never returns less than 1e-8.
double stable_dt(const FieldSet& state, const ModelParams& params, double cfl);

// One-step integrator bound to a grid and a parameter set. Besides advancing
// the state it integrates the L2 dissipation rate along the same stages, so
// energy(after) - energy(before) + dissipated increment is a consistency
// residual of the scheme.
class Stepper {
 public:
  Stepper(const GridPtr& grid, ModelParams params, Scheme scheme = Scheme::if_rk4);

  // Advances by dt; throws BlowUpError on a non-finite result.
  TcmState step(const TcmState& state, double dt);

  // Cumulative int_0^t dissipation_rate dt over every step taken so far.
  double dissipated() const { return dissipated_; }
  void reset_dissipated(double value = 0.0) { dissipated_ = value; }

  const ModelParams& params() const { return params_; }
  Scheme scheme() const { return scheme_; }

 private:
  TcmState step_if_rk4(const TcmState& state, double dt);
  TcmState step_imex_euler(const TcmState& state, double dt);
  // Multiplies each field by exp(rate * h) with the per-mode linear rates.
  void apply_propagator(FieldSet& f, double h);
  void finish(TcmState& s) const;

  GridPtr grid_;
  ModelParams params_;
  Scheme scheme_;
  std::vector<double> u_rate_;  // -(mu(0)|k|^2 + alpha)
  struct Factors {
    double h = -1.0;
    std::vector<double> u;
  };
  Factors factors_[2];  // last two substep lengths seen (h and h/2)
  double dissipated_ = 0.0;
};

// Convenience single step with a fresh Stepper.
TcmState step(const TcmState& state, const ModelParams& params, double dt,
              Scheme scheme = Scheme::if_rk4);

using RecordSink = std::function<void(const DiagnosticsRecord&)>;

struct RunStats {
  long steps = 0;
  double max_dt = 0.0;
  double min_dt = 0.0;
};

// Integrates from initial.time to stepper.t_end, emitting one record at the
// start and one every sample_every (the final sample lands on t_end).
TcmState run(const TcmState& initial, const ModelParams& params, const StepperConfig& stepper,
             const DiagnosticsSpec& spec, const RecordSink& sink, RunStats* stats = nullptr);

}  // namespace tcm
