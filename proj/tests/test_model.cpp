#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "tcm/errors.hpp"
#include "tcm/model.hpp"
#include "tcm/random_fields.hpp"

using namespace tcm;
using std::numbers::pi;

namespace {

ModelParams params_with(double alpha, double beta, double mu_lower, std::string law = "quadratic",
                        double parameter = 1.0) {
  ModelInputs in;
  in.alpha = alpha;
  in.beta = beta;
  in.mu_lower = mu_lower;
  in.viscosity = std::move(law);
  in.viscosity_parameter = parameter;
  return ModelParams::make(in);
}

FieldSet random_state(const GridPtr& grid, std::uint64_t seed, double amplitude, int band = 0) {
  Rng rng(seed);
  if (band == 0) band = grid->dealias_limit();
  const auto amp = [&](double m) { return amplitude * std::exp(-0.15 * m * m); };
  FieldSet s(grid);
  s.u = leray_project(VectorField(random_field(grid, rng, amp, band), random_field(grid, rng, amp, band)));
  s.v = VectorField(random_field(grid, rng, amp, band), random_field(grid, rng, amp, band));
  s.theta = random_field(grid, rng, amp, band);
  return s;
}

}  // namespace

TEST(Lambda, WorkedValues) {
  EXPECT_NEAR(derive_lambda(0.0, 2.0, 1.0), std::sqrt(1.0 / 12.0), 1e-15);
  EXPECT_NEAR(derive_lambda(1.0, 1.0, 1.0), std::sqrt(1.0 / 12.0), 1e-15);
  EXPECT_NEAR(derive_lambda(0.0, 10.0, 0.01), std::sqrt(0.005), 1e-15);
  // alpha joins the minimum only when it is the smallest entry
  EXPECT_NEAR(derive_lambda(0.01, 1.0, 1.0), std::sqrt(0.005), 1e-15);
  EXPECT_DOUBLE_EQ(derive_lambda(5.0, 1.0, 1.0), derive_lambda(0.0, 1.0, 1.0));
  EXPECT_THROW(derive_lambda(0.0, 0.0, 1.0), ConfigError);
  EXPECT_THROW(derive_lambda(0.0, 1.0, -1.0), ConfigError);
}

TEST(Delta1, StrictSign) {
  EXPECT_EQ(derive_delta1(0.0), 0);
  EXPECT_EQ(derive_delta1(0.5), 1);
  EXPECT_EQ(derive_delta1(1e-300), 1);
}

TEST(Viscosity, Laws) {
  EXPECT_DOUBLE_EQ(default_viscosity(0.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(default_viscosity(2.0, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(default_viscosity(-2.0, 0.5), 4.5);
  EXPECT_DOUBLE_EQ(ViscosityLaw::quadratic(0.5, 2.0)(3.0), 18.5);
  EXPECT_DOUBLE_EQ(ViscosityLaw::constant(0.7)(3.0), 0.7);
  EXPECT_DOUBLE_EQ(ViscosityLaw::gauss_bump(0.2, 0.3)(0.0), 0.5);
  EXPECT_THROW(ViscosityLaw::from_name("cubic", 1.0, 1.0), ConfigError);
  EXPECT_THROW(ViscosityLaw::quadratic(1.0, -1.0).checked(0.5), ViscosityFloorError);
  EXPECT_NO_THROW(ViscosityLaw::quadratic(1.0, -1.0).checked(0.0));
}

TEST(Params, DefaultsAndValidation) {
  const auto p = params_with(0.0, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(p.eta(), 2.0 / 12.0);
  EXPECT_DOUBLE_EQ(p.kappa(), 0.499);  // min(1, 0.5) clamped below 1/2
  EXPECT_DOUBLE_EQ(params_with(0.0, 10.0, 1.0).kappa(), 0.1);
  EXPECT_FALSE(p.damped());
  EXPECT_TRUE(params_with(0.1, 1.0, 1.0).damped());
  EXPECT_DOUBLE_EQ(params_with(0.0, 1.0, 0.2, "gauss-bump", 0.3).mu_zero(), 0.5);

  auto message_of = [](ModelInputs in) {
    try {
      ModelParams::make(in);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  ModelInputs in;
  in.beta = 0.0;
  EXPECT_NE(message_of(in).find("params.beta"), std::string::npos);
  in = {};
  in.mu_lower = 0.0;
  EXPECT_NE(message_of(in).find("params.mu_lower"), std::string::npos);
  in = {};
  in.s = 1.0;
  EXPECT_NE(message_of(in).find("params.s"), std::string::npos);
  in = {};
  in.alpha = -0.1;
  EXPECT_NE(message_of(in).find("params.alpha"), std::string::npos);
  in = {};
  in.eta = 0.2;  // cap at beta = 1 is 1/6
  EXPECT_NE(message_of(in).find("params.eta"), std::string::npos);
  in = {};
  in.beta = std::sqrt(2.0);
  in.kappa = 0.6;  // allowed by min(beta/2, 1/beta) ~ 0.707, not by kappa < 1/2
  EXPECT_NE(message_of(in).find("params.kappa"), std::string::npos);
}

TEST(Rhs, ZeroStateIsFixedPoint) {
  const auto g = SpectralGrid::make(16, 2 * pi);
  const auto t = rhs(FieldSet(g), params_with(0.3, 1.0, 1.0));
  EXPECT_EQ(l2_norm(t.u) + l2_norm(t.v) + l2_norm(t.theta), 0.0);
}

TEST(Rhs, PureTemperatureDrivesOnlyV) {
  const auto g = SpectralGrid::make(32, 2 * pi);
  FieldSet s(g);
  s.theta = SpectralField::from_function(g, [](double x, double y) { return std::sin(x) * std::cos(2 * y); });
  const auto t = rhs(s, params_with(0.0, 1.0, 1.0));
  EXPECT_EQ(l2_norm(t.u), 0.0);
  EXPECT_EQ(l2_norm(t.theta), 0.0);
  EXPECT_LT(l2_norm(t.v - gradient(s.theta)), 1e-14);
}

TEST(Rhs, ShearModeDecaysViscously) {
  const auto g = SpectralGrid::make(16, 2 * pi);
  FieldSet s(g);
  s.u.x = SpectralField::from_function(g, [](double, double y) { return std::sin(y); });
  const auto t = rhs(s, params_with(0.0, 1.0, 1.0, "constant"));
  EXPECT_LT(l2_norm(t.u.x + s.u.x), 1e-14 * l2_norm(s.u.x));
  EXPECT_EQ(l2_norm(t.u.y), 0.0);
  EXPECT_EQ(l2_norm(t.v), 0.0);
  EXPECT_EQ(l2_norm(t.theta), 0.0);
}

TEST(Rhs, KeepsVelocityDivergenceFree) {
  const auto g = SpectralGrid::make(48, 2 * pi);
  const FieldSet s = random_state(g, 11, 0.3);
  const auto t = rhs(s, params_with(0.4, 1.5, 0.5));
  EXPECT_LT(l2_norm(divergence(t.u)), 1e-12 * sobolev_norm(t.u, 1.0, SobolevKind::homogeneous));
}

// Second-order centred finite differences on the same analytic fields; the
// spectral rhs (exact for these trigonometric polynomials) must match to
// O(h^2).
namespace fd {

struct Grid {
  int n;
  double h;
  std::vector<double> make(const std::function<double(double, double)>& f) const {
    std::vector<double> out(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i * n + j] = f(i * h, j * h);
    return out;
  }
  double at(const std::vector<double>& f, int i, int j) const {
    return f[((i + n) % n) * n + (j + n) % n];
  }
  std::vector<double> dx(const std::vector<double>& f) const {
    std::vector<double> out(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i * n + j] = (at(f, i + 1, j) - at(f, i - 1, j)) / (2 * h);
    return out;
  }
  std::vector<double> dy(const std::vector<double>& f) const {
    std::vector<double> out(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i * n + j] = (at(f, i, j + 1) - at(f, i, j - 1)) / (2 * h);
    return out;
  }
};

std::vector<double> mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> o(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] * b[i];
  return o;
}

std::vector<double> axpy(double c, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> o(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = c * a[i] + b[i];
  return o;
}

}  // namespace fd

TEST(Rhs, AgreesWithFiniteDifferenceOracle) {
  const double alpha = 0.3, beta = 0.7, mu_lower = 0.5;
  const auto params = params_with(alpha, beta, mu_lower);
  const double a = 0.4;
  // u = (psi_y, -psi_x) with psi = a (sin x cos y + 0.5 cos(x + y))
  auto ux = [&](double x, double y) { return a * (-std::sin(x) * std::sin(y) - 0.5 * std::sin(x + y)); };
  auto uy = [&](double x, double y) { return a * (-std::cos(x) * std::cos(y) + 0.5 * std::sin(x + y)); };
  auto vx = [&](double x, double y) { return a * std::cos(x) * std::sin(y); };
  auto vy = [&](double x, double y) { return a * (std::sin(x) + 0.3 * std::cos(x - y)); };
  auto th = [&](double x, double y) { return a * (std::sin(x + y) + 0.4 * std::cos(x)); };

  const int ns = 128;
  const auto g = SpectralGrid::make(ns, 2 * pi);
  FieldSet s(g);
  s.u = VectorField(SpectralField::from_function(g, ux), SpectralField::from_function(g, uy));
  s.v = VectorField(SpectralField::from_function(g, vx), SpectralField::from_function(g, vy));
  s.theta = SpectralField::from_function(g, th);
  const Tendency t = rhs(s, params);
  const PhysicalField curl_u = curl(t.u).to_physical();
  const PhysicalField dvx = t.v.x.to_physical(), dvy = t.v.y.to_physical();
  const PhysicalField dth = t.theta.to_physical();

  std::vector<double> errors;
  for (int n : {32, 64, 128}) {
    const fd::Grid G{n, 2 * pi / n};
    const auto Ux = G.make(ux), Uy = G.make(uy), Vx = G.make(vx), Vy = G.make(vy), T = G.make(th);
    std::vector<double> mu(T.size());
    for (std::size_t i = 0; i < T.size(); ++i) mu[i] = mu_lower + T[i] * T[i];

    auto advect = [&](const std::vector<double>& ax, const std::vector<double>& ay, const std::vector<double>& f) {
      return fd::axpy(1.0, fd::mul(ax, G.dx(f)), fd::mul(ay, G.dy(f)));
    };
    auto viscous = [&](const std::vector<double>& f) {
      return fd::axpy(1.0, G.dx(fd::mul(mu, G.dx(f))), G.dy(fd::mul(mu, G.dy(f))));
    };
    // F = -(u.grad)u + div(mu grad u) - div(v (x) v) - alpha u, pressure dropped by the curl
    std::vector<double> Fx = fd::axpy(-1.0, advect(Ux, Uy, Ux), viscous(Ux));
    Fx = fd::axpy(-1.0, fd::axpy(1.0, G.dx(fd::mul(Vx, Vx)), G.dy(fd::mul(Vy, Vx))), Fx);
    Fx = fd::axpy(-alpha, Ux, Fx);
    std::vector<double> Fy = fd::axpy(-1.0, advect(Ux, Uy, Uy), viscous(Uy));
    Fy = fd::axpy(-1.0, fd::axpy(1.0, G.dx(fd::mul(Vx, Vy)), G.dy(fd::mul(Vy, Vy))), Fy);
    Fy = fd::axpy(-alpha, Uy, Fy);
    const auto curlF = fd::axpy(-1.0, G.dy(Fx), G.dx(Fy));

    // dv = -(u.grad)v - (v.grad)u - beta v + grad theta
    auto Gx = fd::axpy(-1.0, advect(Ux, Uy, Vx), fd::axpy(-1.0, advect(Vx, Vy, Ux), fd::axpy(-beta, Vx, G.dx(T))));
    auto Gy = fd::axpy(-1.0, advect(Ux, Uy, Vy), fd::axpy(-1.0, advect(Vx, Vy, Uy), fd::axpy(-beta, Vy, G.dy(T))));
    auto H = fd::axpy(-1.0, advect(Ux, Uy, T), fd::axpy(1.0, G.dx(Vx), G.dy(Vy)));

    const int stride = ns / n;
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int k = i * n + j;
        const int I = i * stride, J = j * stride;
        err = std::max({err, std::abs(curlF[k] - curl_u(I, J)), std::abs(Gx[k] - dvx(I, J)),
                        std::abs(Gy[k] - dvy(I, J)), std::abs(H[k] - dth(I, J))});
      }
    }
    errors.push_back(err);
  }
  const double rate1 = std::log2(errors[0] / errors[1]);
  const double rate2 = std::log2(errors[1] / errors[2]);
  EXPECT_GE(rate1, 1.9) << errors[0] << " " << errors[1];
  EXPECT_GE(rate2, 1.9) << errors[1] << " " << errors[2];
  EXPECT_LT(errors[2], 1e-2);
}

TEST(Energy, BudgetResidualVanishes) {
  const auto g = SpectralGrid::make(64, 2 * pi);
  const auto params = params_with(0.2, 1.3, 0.7);
  const FieldSet s = random_state(g, 5, 0.05);
  const double scale = dissipation_rate(s, params);
  ASSERT_GT(scale, 0.0);
  EXPECT_LT(std::abs(energy_budget_residual(s, params)), 1e-10 * scale);

  FieldSet zero(g);
  EXPECT_EQ(energy_budget_residual(zero, params), 0.0);
  FieldSet only_theta(g);
  only_theta.theta = SpectralField::from_function(g, [](double x, double) { return std::sin(x); });
  EXPECT_NEAR(energy_budget_residual(only_theta, params), 0.0, 1e-14);
}

TEST(Energy, DissipationMatchesFineQuadrature) {
  // mu(theta)|grad u|^2 is a trigonometric polynomial of degree at most
  // 4 * band, integrated exactly by any grid with more than 4 * band points
  // per side. Band 7 keeps both the 32 grid and the 96 oracle grid exact.
  const auto g = SpectralGrid::make(32, 2 * pi);
  const auto params = params_with(0.25, 0.8, 0.6);
  const FieldSet s = random_state(g, 8, 0.5, 7);
  const auto fine = SpectralGrid::make(96, 2 * pi);
  const auto th = resample(s.theta, fine).to_physical();
  VectorField gu0 = gradient(s.u.x), gu1 = gradient(s.u.y);
  const PhysicalField a = resample(gu0.x, fine).to_physical(), b = resample(gu0.y, fine).to_physical();
  const PhysicalField c = resample(gu1.x, fine).to_physical(), d = resample(gu1.y, fine).to_physical();
  long double sum = 0.0L;
  for (std::size_t i = 0; i < th.values().size(); ++i) {
    const long double t = th.values()[i];
    const long double mu = 0.6L + t * t;
    sum += mu * (static_cast<long double>(a.values()[i]) * a.values()[i] + static_cast<long double>(b.values()[i]) * b.values()[i] +
                 static_cast<long double>(c.values()[i]) * c.values()[i] + static_cast<long double>(d.values()[i]) * d.values()[i]);
  }
  const double viscous = static_cast<double>(sum) * fine->cell_area();
  const double oracle = viscous + 0.25 * std::pow(l2_norm(s.u), 2) + 0.8 * std::pow(l2_norm(s.v), 2);
  EXPECT_NEAR(dissipation_rate(s, params), oracle, 1e-12 * oracle);
  EXPECT_NEAR(energy(s), 0.5 * (std::pow(l2_norm(s.u), 2) + std::pow(l2_norm(s.v), 2) + std::pow(l2_norm(s.theta), 2)),
              1e-15);
}
