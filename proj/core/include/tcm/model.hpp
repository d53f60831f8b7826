#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tcm/spectral.hpp"

namespace tcm {

// Temperature-dependent viscosity mu(theta) with declared floor mu_lower.
class ViscosityLaw {
 public:
  enum class Kind { quadratic, constant, gauss_bump };

  // mu_lower + coefficient * theta^2
  static ViscosityLaw quadratic(double mu_lower, double coefficient = 1.0);
  static ViscosityLaw constant(double mu_lower);
  // mu_lower + amplitude * exp(-theta^2)
  static ViscosityLaw gauss_bump(double mu_lower, double amplitude);
  // Accepts "quadratic", "constant", "gauss-bump".
  static ViscosityLaw from_name(std::string_view name, double mu_lower, double parameter);

  double operator()(double theta) const;
  // Evaluates and throws ViscosityFloorError if the result drops below mu_lower.
  double checked(double theta) const;

  Kind kind() const { return kind_; }
  std::string_view name() const;
  double mu_lower() const { return mu_lower_; }
  double parameter() const { return parameter_; }

 private:
  ViscosityLaw(Kind kind, double mu_lower, double parameter)
      : kind_(kind), mu_lower_(mu_lower), parameter_(parameter) {}

  Kind kind_;
  double mu_lower_;
  double parameter_;
};

// The default law mu_lower + theta^2.
double default_viscosity(double theta, double mu_lower);

// sqrt(min(mu_lower, beta/(4+2 beta^2)) / 2), with alpha joining the min when
// alpha > 0. Throws ConfigError for beta <= 0 or mu_lower <= 0.
double derive_lambda(double alpha, double beta, double mu_lower);
// 0 for alpha == 0, 1 for any strictly positive alpha.
int derive_delta1(double alpha);

// Largest admissible cross-term weights.
double max_eta(double beta);
double max_kappa(double beta);

// Everything needed to build a ModelParams; eta and kappa default to their
// largest admissible values.
struct ModelInputs {
  double alpha = 0.0;
  double beta = 1.0;
  double mu_lower = 1.0;
  double s = 1.5;
  std::optional<double> eta;
  std::optional<double> kappa;
  std::string viscosity = "quadratic";
  double viscosity_parameter = 1.0;
};

class ModelParams {
 public:
  // Validates the inputs and resolves lambda, delta1, eta, kappa.
  static ModelParams make(const ModelInputs& in);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double mu_lower() const { return viscosity_.mu_lower(); }
  double s() const { return s_; }
  double eta() const { return eta_; }
  double kappa() const { return kappa_; }
  double lambda() const { return lambda_; }
  int delta1() const { return delta1_; }
  bool damped() const { return delta1_ == 1; }
  const ViscosityLaw& viscosity() const { return viscosity_; }
  // mu(0), the stiff part of the viscosity split.
  double mu_zero() const { return mu_zero_; }

 private:
  ModelParams(double alpha, double beta, double s, double eta, double kappa, ViscosityLaw law);

  double alpha_;
  double beta_;
  double s_;
  double eta_;
  double kappa_;
  double lambda_;
  int delta1_;
  ViscosityLaw viscosity_;
  double mu_zero_;
};

// (u, v, theta) without a time stamp; doubles as a tendency.
struct FieldSet {
  VectorField u;
  VectorField v;
  SpectralField theta;

  explicit FieldSet(const GridPtr& grid) : u(grid), v(grid), theta(grid) {}
  FieldSet(VectorField u_, VectorField v_, SpectralField theta_)
      : u(std::move(u_)), v(std::move(v_)), theta(std::move(theta_)) {}

  const SpectralGrid& grid() const { return theta.grid(); }
  const GridPtr& grid_ptr() const { return theta.grid_ptr(); }

  FieldSet& operator+=(const FieldSet& o);
  FieldSet& operator*=(double c);
  FieldSet& add_scaled(double c, const FieldSet& o);
  bool is_finite() const { return u.is_finite() && v.is_finite() && theta.is_finite(); }
};

using Tendency = FieldSet;

struct TcmState : FieldSet {
  double time = 0.0;

  explicit TcmState(const GridPtr& grid) : FieldSet(grid) {}
  TcmState(FieldSet fields, double t) : FieldSet(std::move(fields)), time(t) {}
};

// Full semi-discrete right-hand side:
//   du/dt = P[-(u.grad)u + div(mu(theta) grad u) - div(v (x) v)] - alpha u
//   dv/dt = -(u.grad)v - (v.grad)u - beta v + grad theta
//   dtheta/dt = -u.grad theta + div v
// Products are formed on the physical grid from dealiased inputs and
// dealiased again after the forward transform.
Tendency rhs(const FieldSet& state, const ModelParams& params);

// The non-stiff part of rhs(): everything except mu(0) Lap u - alpha u and
// -beta v, which the integrator treats exactly. When dissipation is given it
// receives dissipation_rate(state, params) from the same grid values.
Tendency explicit_tendency(const FieldSet& state, const ModelParams& params,
                           double* dissipation = nullptr);

// int mu(theta)|grad u|^2 + alpha ||u||^2 + beta ||v||^2, with the viscous
// integral taken as the grid quadrature matching the rhs products.
double dissipation_rate(const FieldSet& state, const ModelParams& params);

// 1/2 (||u||^2 + ||v||^2 + ||theta||^2)
double energy(const FieldSet& state);

// <u,du/dt> + <v,dv/dt> + <theta,dtheta/dt> + dissipation_rate: zero in the
// continuum, so the value is the discrete defect of the L2 energy identity.
double energy_budget_residual(const FieldSet& state, const ModelParams& params);

}  // namespace tcm
