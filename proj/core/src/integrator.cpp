#include "tcm/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "tcm/errors.hpp"

namespace tcm {

double stable_dt(const FieldSet& state, const ModelParams& params, double cfl) {
  if (!(cfl > 0.0) || cfl > 1.0) throw ConfigError("stepper.cfl must lie in (0, 1]");
  const auto& grid = state.grid();
  const double kmax = grid.k_max();
  const double speed = linf_norm(state.u) + linf_norm(state.v);

  const PhysicalField th = state.theta.to_physical();
  double excess = 0.0;
  for (double t : th.values()) {
    excess = std::max(excess, std::abs(params.viscosity().checked(t) - params.mu_zero()));
  }
  const double rate =
      kmax * speed + kmax * kmax * excess + params.beta() + params.alpha() + kmax;
  const double dt = cfl / rate;
  if (!std::isfinite(dt) || dt < 1e-8) return 1e-8;
  return dt;
}

Stepper::Stepper(const GridPtr& grid, ModelParams params, Scheme scheme)
    : grid_(grid), params_(std::move(params)), scheme_(scheme), u_rate_(grid->spectral_size()) {
  const auto k2 = grid->k2();
  for (std::size_t i = 0; i < u_rate_.size(); ++i) {
    u_rate_[i] = -(params_.mu_zero() * k2[i] + params_.alpha());
  }
}

void Stepper::apply_propagator(FieldSet& f, double h) {
  Factors* slot = &factors_[0];
  if (factors_[1].h == h) {
    slot = &factors_[1];
  } else if (factors_[0].h != h) {
    std::swap(factors_[0], factors_[1]);
    factors_[0].h = h;
    factors_[0].u.resize(u_rate_.size());
    for (std::size_t i = 0; i < u_rate_.size(); ++i) factors_[0].u[i] = std::exp(u_rate_[i] * h);
  }
  const auto& g = slot->u;
  auto ux = f.u.x.coeffs();
  auto uy = f.u.y.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i) {
    ux[i] *= g[i];
    uy[i] *= g[i];
  }
  f.v *= std::exp(-params_.beta() * h);
}

void Stepper::finish(TcmState& s) const {
  s.u = leray_project(dealias(s.u));
  s.v = dealias(s.v);
  s.theta = dealias(s.theta);
  if (!s.is_finite()) throw BlowUpError(s.time);
}

TcmState Stepper::step(const TcmState& state, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("step: dt must be positive");
  return scheme_ == Scheme::if_rk4 ? step_if_rk4(state, dt) : step_imex_euler(state, dt);
}

TcmState Stepper::step_if_rk4(const TcmState& y, double h) {
  const double half = 0.5 * h;

  double d1 = 0.0;
  const Tendency k1 = explicit_tendency(y, params_, &d1);

  FieldSet y2 = y;
  y2.add_scaled(half, k1);
  apply_propagator(y2, half);
  double d2 = 0.0;
  const Tendency k2 = explicit_tendency(y2, params_, &d2);

  FieldSet y_half = y;
  apply_propagator(y_half, half);
  FieldSet y3 = y_half;
  y3.add_scaled(half, k2);
  double d3 = 0.0;
  const Tendency k3 = explicit_tendency(y3, params_, &d3);

  FieldSet y_full = y;
  apply_propagator(y_full, h);
  FieldSet k3_half = k3;
  apply_propagator(k3_half, half);
  FieldSet y4 = y_full;
  y4.add_scaled(h, k3_half);
  double d4 = 0.0;
  const Tendency k4 = explicit_tendency(y4, params_, &d4);

  FieldSet k1_full = k1;
  apply_propagator(k1_full, h);
  FieldSet k23 = k2;
  k23 += k3;
  apply_propagator(k23, half);

  TcmState out(std::move(y_full), y.time + h);
  out.add_scaled(h / 6.0, k1_full);
  out.add_scaled(h / 3.0, k23);
  out.add_scaled(h / 6.0, k4);
  finish(out);

  dissipated_ += h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
  return out;
}

TcmState Stepper::step_imex_euler(const TcmState& y, double h) {
  double d = 0.0;
  const Tendency n = explicit_tendency(y, params_, &d);

  TcmState out = y;
  out.time = y.time + h;
  out.add_scaled(h, n);
  auto ux = out.u.x.coeffs();
  auto uy = out.u.y.coeffs();
  for (std::size_t i = 0; i < u_rate_.size(); ++i) {
    const double g = 1.0 / (1.0 - h * u_rate_[i]);
    ux[i] *= g;
    uy[i] *= g;
  }
  out.v *= 1.0 / (1.0 + h * params_.beta());
  finish(out);

  dissipated_ += h * d;
  return out;
}

TcmState step(const TcmState& state, const ModelParams& params, double dt, Scheme scheme) {
  Stepper stepper(state.grid_ptr(), params, scheme);
  return stepper.step(state, dt);
}

TcmState run(const TcmState& initial, const ModelParams& params, const StepperConfig& config,
             const DiagnosticsSpec& spec, const RecordSink& sink, RunStats* stats) {
  if (config.dt && !(*config.dt > 0.0)) throw ConfigError("stepper.dt must be > 0");
  if (!(config.sample_every > 0.0)) throw ConfigError("stepper.sample_every must be > 0");
  if (!std::isfinite(config.t_end)) throw ConfigError("stepper.t_end must be finite");

  Stepper stepper(initial.grid_ptr(), params, config.scheme);
  TcmState state = initial;
  sink(evaluate(state, params, spec, 0.0));

  const double t0 = initial.time;
  if (!(config.t_end > t0)) return state;

  const auto intervals =
      static_cast<long>(std::ceil((config.t_end - t0) / config.sample_every - 1e-9));
  for (long i = 0; i < intervals; ++i) {
    const double target =
        (i + 1 == intervals) ? config.t_end : t0 + static_cast<double>(i + 1) * config.sample_every;
    const double span = target - state.time;
    const double nominal = config.dt ? *config.dt : stable_dt(state, params, config.cfl);
    const long steps = std::max(1L, static_cast<long>(std::ceil(span / nominal - 1e-9)));
    const double h = span / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) state = stepper.step(state, h);
    if (stats) {
      stats->min_dt = stats->steps == 0 ? h : std::min(stats->min_dt, h);
      stats->max_dt = std::max(stats->max_dt, h);
      stats->steps += steps;
    }
    state.time = target;
    sink(evaluate(state, params, spec, stepper.dissipated()));
  }
  return state;
}

}  // namespace tcm
