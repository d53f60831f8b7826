#include "tcm/model.hpp"

#include <algorithm>
#include <cmath>

#include "tcm/errors.hpp"

namespace tcm {

ViscosityLaw ViscosityLaw::quadratic(double mu_lower, double coefficient) {
  return {Kind::quadratic, mu_lower, coefficient};
}

ViscosityLaw ViscosityLaw::constant(double mu_lower) { return {Kind::constant, mu_lower, 0.0}; }

ViscosityLaw ViscosityLaw::gauss_bump(double mu_lower, double amplitude) {
  return {Kind::gauss_bump, mu_lower, amplitude};
}

ViscosityLaw ViscosityLaw::from_name(std::string_view name, double mu_lower, double parameter) {
  if (name == "quadratic") return quadratic(mu_lower, parameter);
  if (name == "constant") return constant(mu_lower);
  if (name == "gauss-bump") return gauss_bump(mu_lower, parameter);
  throw ConfigError("params.viscosity.law: unknown law '" + std::string(name) +
                    "' (expected quadratic, constant or gauss-bump)");
}

double ViscosityLaw::operator()(double theta) const {
  switch (kind_) {
    case Kind::quadratic:
      return mu_lower_ + parameter_ * theta * theta;
    case Kind::constant:
      return mu_lower_;
    case Kind::gauss_bump:
      return mu_lower_ + parameter_ * std::exp(-theta * theta);
  }
  return mu_lower_;
}

double ViscosityLaw::checked(double theta) const {
  const double mu = (*this)(theta);
  // NaN passes through; the stepper reports it as a blow-up.
  if (mu < mu_lower_) throw ViscosityFloorError(theta, mu, mu_lower_);
  return mu;
}

std::string_view ViscosityLaw::name() const {
  switch (kind_) {
    case Kind::quadratic:
      return "quadratic";
    case Kind::constant:
      return "constant";
    case Kind::gauss_bump:
      return "gauss-bump";
  }
  return "quadratic";
}

double default_viscosity(double theta, double mu_lower) { return mu_lower + theta * theta; }

double max_eta(double beta) { return beta / (4.0 + 2.0 * beta * beta); }

double max_kappa(double beta) { return std::min(beta / 2.0, 1.0 / beta); }

double derive_lambda(double alpha, double beta, double mu_lower) {
  if (!(beta > 0.0)) throw ConfigError("params.beta must be > 0");
  if (!(mu_lower > 0.0)) throw ConfigError("params.mu_lower must be > 0");
  if (!(alpha >= 0.0)) throw ConfigError("params.alpha must be >= 0");
  double m = std::min(mu_lower, max_eta(beta));
  if (derive_delta1(alpha) == 1) m = std::min(m, alpha);
  return std::sqrt(0.5 * m);
}

int derive_delta1(double alpha) { return alpha > 0.0 ? 1 : 0; }

ModelParams ModelParams::make(const ModelInputs& in) {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(in.alpha) || in.alpha < 0.0) throw ConfigError("params.alpha must be >= 0");
  if (!finite(in.beta) || in.beta <= 0.0) throw ConfigError("params.beta must be > 0");
  if (!finite(in.mu_lower) || in.mu_lower <= 0.0) {
    throw ConfigError("params.mu_lower must be > 0");
  }
  if (!finite(in.s) || in.s <= 1.0) throw ConfigError("params.s must be > 1");

  const double eta_cap = max_eta(in.beta);
  const double eta = in.eta.value_or(eta_cap);
  if (!finite(eta) || eta <= 0.0 || eta > eta_cap) {
    throw ConfigError("params.eta must satisfy 0 < eta <= beta/(4+2 beta^2)");
  }
  // The decay analysis later needs kappa < 1/2 on top of kappa <= min(beta/2, 1/beta).
  const double kappa_cap = max_kappa(in.beta);
  const double kappa = in.kappa.value_or(std::min(kappa_cap, 0.499));
  if (!finite(kappa) || kappa <= 0.0 || kappa > kappa_cap || kappa >= 0.5) {
    throw ConfigError("params.kappa must satisfy 0 < kappa <= min(beta/2, 1/beta) and kappa < 1/2");
  }
  if (!finite(in.viscosity_parameter)) {
    throw ConfigError("params.viscosity.parameter must be finite");
  }
  auto law = ViscosityLaw::from_name(in.viscosity, in.mu_lower, in.viscosity_parameter);
  return ModelParams(in.alpha, in.beta, in.s, eta, kappa, law);
}

ModelParams::ModelParams(double alpha, double beta, double s, double eta, double kappa,
                         ViscosityLaw law)
    : alpha_(alpha),
      beta_(beta),
      s_(s),
      eta_(eta),
      kappa_(kappa),
      lambda_(derive_lambda(alpha, beta, law.mu_lower())),
      delta1_(derive_delta1(alpha)),
      viscosity_(law),
      mu_zero_(law.checked(0.0)) {}

FieldSet& FieldSet::operator+=(const FieldSet& o) {
  u += o.u;
  v += o.v;
  theta += o.theta;
  return *this;
}

FieldSet& FieldSet::operator*=(double c) {
  u *= c;
  v *= c;
  theta *= c;
  return *this;
}

FieldSet& FieldSet::add_scaled(double c, const FieldSet& o) {
  u.add_scaled(c, o.u);
  v.add_scaled(c, o.v);
  theta.add_scaled(c, o.theta);
  return *this;
}

namespace {

// Physical-space view of a state: values plus first derivatives.
struct PhysicalState {
  PhysicalField ux, uy, vx, vy, th;
  PhysicalField dux_dx, dux_dy, duy_dx, duy_dy;
  PhysicalField dvx_dx, dvx_dy, dvy_dx, dvy_dy;
  PhysicalField dth_dx, dth_dy;

  explicit PhysicalState(const FieldSet& s)
      : ux(s.u.x.to_physical()),
        uy(s.u.y.to_physical()),
        vx(s.v.x.to_physical()),
        vy(s.v.y.to_physical()),
        th(s.theta.to_physical()),
        dux_dx(derivative(s.u.x, Axis::x).to_physical()),
        dux_dy(derivative(s.u.x, Axis::y).to_physical()),
        duy_dx(derivative(s.u.y, Axis::x).to_physical()),
        duy_dy(derivative(s.u.y, Axis::y).to_physical()),
        dvx_dx(derivative(s.v.x, Axis::x).to_physical()),
        dvx_dy(derivative(s.v.x, Axis::y).to_physical()),
        dvy_dx(derivative(s.v.y, Axis::x).to_physical()),
        dvy_dy(derivative(s.v.y, Axis::y).to_physical()),
        dth_dx(derivative(s.theta, Axis::x).to_physical()),
        dth_dy(derivative(s.theta, Axis::y).to_physical()) {}
};

// mu(theta) - mu(0) on the grid, checking the floor at every sample.
PhysicalField viscosity_excess(const PhysicalField& theta, const ModelParams& params) {
  PhysicalField out(theta.grid_ptr());
  const auto th = theta.values();
  auto dst = out.values();
  const auto& law = params.viscosity();
  const double mu0 = params.mu_zero();
  for (std::size_t i = 0; i < th.size(); ++i) dst[i] = law.checked(th[i]) - mu0;
  return out;
}

double dissipation_from(const FieldSet& state, const ModelParams& params, std::span<const double> th,
                        std::span<const double> a, std::span<const double> b, std::span<const double> c,
                        std::span<const double> d) {
  const auto& law = params.viscosity();
  double viscous = 0.0;
  for (std::size_t i = 0; i < th.size(); ++i) {
    viscous += law.checked(th[i]) * (a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i]);
  }
  viscous *= state.grid().cell_area();
  return viscous + params.alpha() * inner_product(state.u, state.u) +
         params.beta() * inner_product(state.v, state.v);
}

template <class F>
SpectralField product(const GridPtr& grid, F&& pointwise) {
  PhysicalField p(grid);
  auto dst = p.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = pointwise(i);
  return dealias(p.to_spectral());
}

}  // namespace

Tendency explicit_tendency(const FieldSet& state, const ModelParams& params, double* dissipation) {
  const GridPtr& grid = state.grid_ptr();
  const PhysicalState ps(state);
  const PhysicalField excess = viscosity_excess(ps.th, params);

  const auto ux = ps.ux.values(), uy = ps.uy.values();
  const auto vx = ps.vx.values(), vy = ps.vy.values();
  const auto a = ps.dux_dx.values(), b = ps.dux_dy.values();
  const auto c = ps.duy_dx.values(), d = ps.duy_dy.values();
  const auto e = ps.dvx_dx.values(), f = ps.dvx_dy.values();
  const auto g = ps.dvy_dx.values(), h = ps.dvy_dy.values();
  const auto tx = ps.dth_dx.values(), ty = ps.dth_dy.values();
  const auto m = excess.values();

  // u: -(u.grad)u - div(v (x) v) + div((mu - mu0) grad u), then Leray.
  SpectralField adv_x = product(grid, [&](std::size_t i) { return -(ux[i] * a[i] + uy[i] * b[i]); });
  SpectralField adv_y = product(grid, [&](std::size_t i) { return -(ux[i] * c[i] + uy[i] * d[i]); });
  const SpectralField sxx = product(grid, [&](std::size_t i) { return m[i] * a[i] - vx[i] * vx[i]; });
  const SpectralField sxy = product(grid, [&](std::size_t i) { return m[i] * b[i] - vx[i] * vy[i]; });
  const SpectralField syx = product(grid, [&](std::size_t i) { return m[i] * c[i] - vx[i] * vy[i]; });
  const SpectralField syy = product(grid, [&](std::size_t i) { return m[i] * d[i] - vy[i] * vy[i]; });

  adv_x += divergence(VectorField(sxx, sxy));
  adv_y += divergence(VectorField(syx, syy));
  VectorField du = leray_project(VectorField(std::move(adv_x), std::move(adv_y)));

  // v: -(u.grad)v - (v.grad)u + grad theta
  VectorField dv(
      product(grid, [&](std::size_t i) { return -(ux[i] * e[i] + uy[i] * f[i] + vx[i] * a[i] + vy[i] * b[i]); }),
      product(grid, [&](std::size_t i) { return -(ux[i] * g[i] + uy[i] * h[i] + vx[i] * c[i] + vy[i] * d[i]); }));
  dv += gradient(state.theta);

  // theta: -u.grad theta + div v
  SpectralField dth = product(grid, [&](std::size_t i) { return -(ux[i] * tx[i] + uy[i] * ty[i]); });
  dth += divergence(state.v);

  if (dissipation) *dissipation = dissipation_from(state, params, ps.th.values(), a, b, c, d);
  return {std::move(du), std::move(dv), std::move(dth)};
}

Tendency rhs(const FieldSet& state, const ModelParams& params) {
  Tendency t = explicit_tendency(state, params);
  t.u.add_scaled(params.mu_zero(), VectorField(laplacian(state.u.x), laplacian(state.u.y)));
  t.u.add_scaled(-params.alpha(), state.u);
  t.v.add_scaled(-params.beta(), state.v);
  return t;
}

double dissipation_rate(const FieldSet& state, const ModelParams& params) {
  const PhysicalField th = state.theta.to_physical();
  const PhysicalField a = derivative(state.u.x, Axis::x).to_physical();
  const PhysicalField b = derivative(state.u.x, Axis::y).to_physical();
  const PhysicalField c = derivative(state.u.y, Axis::x).to_physical();
  const PhysicalField d = derivative(state.u.y, Axis::y).to_physical();
  return dissipation_from(state, params, th.values(), a.values(), b.values(), c.values(), d.values());
}

double energy(const FieldSet& state) {
  return 0.5 * (inner_product(state.u, state.u) + inner_product(state.v, state.v) +
                inner_product(state.theta, state.theta));
}

double energy_budget_residual(const FieldSet& state, const ModelParams& params) {
  const Tendency t = rhs(state, params);
  return inner_product(state.u, t.u) + inner_product(state.v, t.v) +
         inner_product(state.theta, t.theta) + dissipation_rate(state, params);
}

}  // namespace tcm
