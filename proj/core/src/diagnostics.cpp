#include "tcm/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "tcm/errors.hpp"

namespace tcm {

std::string_view field_name(FieldId f) {
  switch (f) {
    case FieldId::u:
      return "u";
    case FieldId::v:
      return "v";
    case FieldId::theta:
      return "theta";
  }
  return "u";
}

FieldId parse_field(std::string_view name) {
  if (name == "u") return FieldId::u;
  if (name == "v") return FieldId::v;
  if (name == "theta") return FieldId::theta;
  throw ConfigError("unknown field '" + std::string(name) + "' (expected u, v or theta)");
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string NormKey::column() const {
  return std::string(field_name(field)) + "_gamma_" + format_number(gamma);
}

namespace {

double sq(double x) { return x * x; }

double hom2(const SpectralField& f, double s) {
  return sq(sobolev_norm(f, s, SobolevKind::homogeneous));
}

double hom2(const VectorField& f, double s) {
  return sq(sobolev_norm(f, s, SobolevKind::homogeneous));
}

double full2(const SpectralField& f, double s) {
  return sq(sobolev_norm(f, s, SobolevKind::nonhomogeneous));
}

double full2(const VectorField& f, double s) {
  return sq(sobolev_norm(f, s, SobolevKind::nonhomogeneous));
}

}  // namespace

double cross_term(const VectorField& v, const SpectralField& theta, double order) {
  if (!(order >= 1.0)) throw ConfigError("cross_term: order must be >= 1");
  const double p = order - 1.0;
  const VectorField g = gradient(theta);
  const VectorField lv(lambda_pow(v.x, p), lambda_pow(v.y, p));
  const VectorField lg(lambda_pow(g.x, p), lambda_pow(g.y, p));
  return inner_product(lv, lg);
}

double functional_A_sum(const FieldSet& state, const ModelParams& params, double m) {
  return hom2(state.u, m) + hom2(state.u, params.delta1()) + full2(state.v, m) +
         full2(state.theta, m);
}

double functional_A(const FieldSet& state, const ModelParams& params, double m) {
  const double sum = functional_A_sum(state, params, m);
  const double cross = cross_term(state.v, state.theta, m) + cross_term(state.v, state.theta, 1.0);
  const double radicand = sum - params.eta() * cross;
  if (radicand < 0.75 * sum * (1.0 - 1e-12)) {
    throw FunctionalError("functional A: radicand " + format_number(radicand) +
                          " left the (3/4) band of " + format_number(sum) +
                          "; eta bound violated");
  }
  return std::sqrt(radicand);
}

double functional_B(const FieldSet& state, const ModelParams& params, double m, BVariant variant) {
  double sum = 0.0;
  if (variant == BVariant::higher_order) {
    sum = hom2(state.u, m + 1.0) + full2(state.v, m) + hom2(state.theta, m);
  } else {
    sum = hom2(state.u, 1.0) + hom2(state.u, m + 1.0) + full2(state.v, m) + hom2(state.theta, 1.0) +
          hom2(state.theta, m);
  }
  return params.lambda() * std::sqrt(sum);
}

double functional_X_sum(const FieldSet& state, double m) {
  return hom2(state.u, m) + hom2(state.v, m) + hom2(state.theta, m) + hom2(state.u, m - 1.0) +
         hom2(state.v, m - 1.0) + hom2(state.theta, m - 1.0);
}

double functional_X(const FieldSet& state, const ModelParams& params, double m) {
  if (!(m > 1.0)) throw ConfigError("functional_X: order must be > 1");
  const double radicand = functional_X_sum(state, m) - params.kappa() * cross_term(state.v, state.theta, m);
  if (radicand < 0.0) {
    throw FunctionalError("functional X: negative radicand " + format_number(radicand) +
                          "; kappa bound violated");
  }
  return std::sqrt(radicand);
}

double functional_Y(const FieldSet& state, const ModelParams& params, double m) {
  if (!(m > 1.0)) throw ConfigError("functional_Y: order must be > 1");
  return std::sqrt(hom2(state.u, m + 1.0) + hom2(state.u, m) + params.alpha() * hom2(state.u, m - 1.0) +
                   hom2(state.v, m) + hom2(state.v, m - 1.0) + hom2(state.theta, m));
}

double theory_exponent(FieldId field, double gamma, bool damped) {
  if (!(gamma >= 0.0)) throw ConfigError("theory_exponent: gamma must be >= 0");
  switch (field) {
    case FieldId::u:
      return damped ? -(gamma + 4.0) / 2.0 : -gamma / 2.0;
    case FieldId::v:
      return -(gamma + 1.0) / 2.0;
    case FieldId::theta:
      return -gamma / 2.0;
  }
  return 0.0;
}

double smallness_norm(const FieldSet& state, const ModelParams& params) {
  const double s = params.s();
  const double u_part = params.damped() ? std::sqrt(hom2(state.u, s) + hom2(state.u, 1.0))
                                        : sobolev_norm(state.u, s, SobolevKind::nonhomogeneous);
  return u_part + sobolev_norm(state.v, s, SobolevKind::nonhomogeneous) +
         sobolev_norm(state.theta, s, SobolevKind::nonhomogeneous);
}

namespace {

const SpectralField& pick(const FieldSet& s, FieldId f, int component) {
  switch (f) {
    case FieldId::u:
      return s.u[component];
    case FieldId::v:
      return s.v[component];
    case FieldId::theta:
      return s.theta;
  }
  return s.theta;
}

double field_norm(const FieldSet& s, FieldId f, double gamma) {
  if (f == FieldId::theta) return sobolev_norm(s.theta, gamma, SobolevKind::homogeneous);
  return std::hypot(sobolev_norm(pick(s, f, 0), gamma, SobolevKind::homogeneous),
                    sobolev_norm(pick(s, f, 1), gamma, SobolevKind::homogeneous));
}

}  // namespace

DiagnosticsRecord evaluate(const TcmState& state, const ModelParams& params,
                           const DiagnosticsSpec& spec, double dissipated) {
  DiagnosticsRecord r;
  r.time = state.time;
  for (const auto& key : spec.norms) r.norms.emplace_back(key, field_norm(state, key.field, key.gamma));
  for (double m : spec.orders) {
    FunctionalValues fv;
    fv.order = m;
    fv.A = functional_A(state, params, m);
    fv.B = functional_B(state, params, m, BVariant::higher_order);
    fv.B_s = functional_B(state, params, m, BVariant::base);
    fv.X = functional_X(state, params, m);
    fv.Y = functional_Y(state, params, m);
    fv.sigma_A = functional_A_sum(state, params, m);
    fv.sigma_X = functional_X_sum(state, m);
    r.functionals.push_back(fv);
  }
  r.cross_s = cross_term(state.v, state.theta, params.s());
  r.cross_1 = cross_term(state.v, state.theta, 1.0);
  r.budget_residual = energy_budget_residual(state, params);
  r.dissipation_rate = dissipation_rate(state, params);
  r.energy = energy(state);
  r.dissipated = dissipated;
  r.norm_sum = smallness_norm(state, params);
  r.linf = {linf_norm(state.u), linf_norm(state.v), linf_norm(state.theta)};
  const double grad_u = sobolev_norm(state.u, 1.0, SobolevKind::homogeneous);
  r.divergence = grad_u > 0.0 ? l2_norm(divergence(state.u)) / grad_u : 0.0;
  return r;
}

DecayFit decay_fit(std::span<const Sample> series, double t0, double t1) {
  if (!(t0 < t1)) throw ConfigError("decay_fit: window must satisfy t0 < t1");
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    if (s.t < t0 || s.t > t1) continue;
    if (!(s.value > 0.0)) {
      throw NonPositiveSeriesError("decay_fit: non-positive value " + format_number(s.value) +
                                   " at t = " + format_number(s.t));
    }
    xs.push_back(std::log1p(s.t));
    ys.push_back(std::log(s.value));
  }
  if (xs.size() < 8) throw ConfigError("decay_fit: need at least 8 samples inside the window");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  DecayFit fit;
  fit.t0 = t0;
  fit.t1 = t1;
  fit.samples = xs.size();
  fit.exponent = sxy / sxx;
  // a constant series is fitted perfectly by a zero slope
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

MonotonicityReport check_x_monotonicity(std::span<const DiagnosticsRecord> records,
                                        std::size_t order_index, double dt) {
  MonotonicityReport rep;
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const auto& a = records[i].functionals.at(order_index);
    const auto& b = records[i + 1].functionals.at(order_index);
    const double increase = sq(b.X) - sq(a.X);
    const double tolerance = 10.0 * std::pow(dt, 4) * std::max(sq(a.Y), sq(b.Y));
    ++rep.intervals;
    rep.worst_excess = std::max(rep.worst_excess, increase - tolerance);
    if (increase > tolerance) ++rep.violations;
  }
  if (rep.intervals == 0) rep.worst_excess = 0.0;
  return rep;
}

EquivalenceReport check_equivalence_bands(std::span<const DiagnosticsRecord> records) {
  EquivalenceReport rep;
  for (const auto& r : records) {
    for (const auto& f : r.functionals) {
      ++rep.samples;
      const double a2 = sq(f.A);
      const double x2 = sq(f.X);
      if (f.sigma_A < 0.75 * a2 || f.sigma_A > 1.25 * a2) ++rep.a_violations;
      if (f.sigma_X < 0.5 * x2 || f.sigma_X > 2.0 * x2) ++rep.x_violations;
    }
  }
  return rep;
}

DifferentialBoundReport check_differential_bound(std::span<const DiagnosticsRecord> records,
                                                 std::size_t order_index, double s) {
  DifferentialBoundReport rep;
  if (records.size() < 3) return rep;
  struct Interval {
    double lhs;
    double factor;
  };
  std::vector<Interval> intervals;
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const auto& a = records[i].functionals.at(order_index);
    const auto& b = records[i + 1].functionals.at(order_index);
    const double dt = records[i + 1].time - records[i].time;
    if (!(dt > 0.0)) continue;
    const double lhs = 0.5 * (sq(b.A) - sq(a.A)) / dt + 0.5 * (sq(a.B_s) + sq(b.B_s));
    auto factor_at = [&](const FunctionalValues& f) { return (f.A + std::pow(f.A, s + 1.0)) * sq(f.B_s); };
    intervals.push_back({lhs, 0.5 * (factor_at(a) + factor_at(b))});
  }
  const std::size_t quartile = std::max<std::size_t>(1, intervals.size() / 4);
  double c = 0.0;
  for (std::size_t i = 0; i < quartile; ++i) {
    if (intervals[i].factor > 0.0) c = std::max(c, intervals[i].lhs / intervals[i].factor);
  }
  rep.calibrated_c = c;
  for (std::size_t i = quartile; i < intervals.size(); ++i) {
    ++rep.checked;
    if (intervals[i].lhs > c * intervals[i].factor) ++rep.violations;
  }
  return rep;
}

}  // namespace tcm
