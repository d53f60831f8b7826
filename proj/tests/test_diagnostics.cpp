#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tcm/diagnostics.hpp"
#include "tcm/errors.hpp"
#include "tcm/random_fields.hpp"

using namespace tcm;
using std::numbers::pi;

namespace {

ModelParams make_params(double alpha, double beta, double mu_lower = 1.0) {
  ModelInputs in;
  in.alpha = alpha;
  in.beta = beta;
  in.mu_lower = mu_lower;
  return ModelParams::make(in);
}

TcmState random_state(const GridPtr& grid, std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  const int band = grid->dealias_limit();
  const auto amp = [&](double m) { return amplitude * std::exp(-0.2 * m * m); };
  TcmState s(grid);
  s.u = leray_project(VectorField(random_field(grid, rng, amp, band), random_field(grid, rng, amp, band)));
  s.v = VectorField(random_field(grid, rng, amp, band), random_field(grid, rng, amp, band));
  s.theta = random_field(grid, rng, amp, band);
  return s;
}

double sq(double x) { return x * x; }

std::vector<Sample> sampled(const std::function<double(double)>& f, double t0, double t1, int n) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    out.push_back({t, f(t)});
  }
  return out;
}

}  // namespace

TEST(CrossTerm, AnalyticQuadrature) {
  const auto g = SpectralGrid::make(16, 2 * pi);
  VectorField v(g);
  v.x = SpectralField::from_function(g, [](double x, double) { return std::cos(x); });
  const auto theta = SpectralField::from_function(g, [](double x, double) { return std::sin(x); });
  // int cos^2 x over [0, 2pi)^2 = 2 pi^2
  EXPECT_NEAR(cross_term(v, theta, 1.0), 2 * pi * pi, 1e-12);
  // one derivative more on each side of a |k| = 1 mode changes nothing
  EXPECT_NEAR(cross_term(v, theta, 2.0), 2 * pi * pi, 1e-12);
  EXPECT_EQ(cross_term(v, SpectralField(g), 1.5), 0.0);
  EXPECT_THROW(cross_term(v, theta, 0.5), ConfigError);
}

TEST(CrossTerm, CauchySchwarzBound) {
  const auto g = SpectralGrid::make(32, 2 * pi);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TcmState s = random_state(g, seed, 1.0);
    for (double m : {1.0, 1.5, 2.5}) {
      const double bound = sobolev_norm(s.v, m - 1, SobolevKind::homogeneous) *
                           sobolev_norm(s.theta, m, SobolevKind::homogeneous);
      EXPECT_LE(std::abs(cross_term(s.v, s.theta, m)), bound * (1 + 1e-12));
    }
  }
}

TEST(Functionals, ZeroState) {
  const auto g = SpectralGrid::make(16, 2 * pi);
  const auto p = make_params(0.0, 1.0);
  const FieldSet z(g);
  EXPECT_EQ(functional_A(z, p, 1.5), 0.0);
  EXPECT_EQ(functional_B(z, p, 1.5, BVariant::higher_order), 0.0);
  EXPECT_EQ(functional_X(z, p, 1.5), 0.0);
  EXPECT_EQ(functional_Y(z, p, 1.5), 0.0);
}

TEST(Functionals, NoTemperatureMeansPlainSums) {
  const auto g = SpectralGrid::make(32, 2 * pi);
  const auto p = make_params(0.5, 1.0);
  TcmState s = random_state(g, 2, 1.0);
  s.theta = SpectralField(g);
  const double m = 2.0;
  const double sigma = sq(sobolev_norm(s.u, m, SobolevKind::homogeneous)) +
                       sq(sobolev_norm(s.u, 1.0, SobolevKind::homogeneous)) +
                       sq(sobolev_norm(s.v, m, SobolevKind::nonhomogeneous));
  EXPECT_NEAR(functional_A(s, p, m), std::sqrt(sigma), 1e-12 * std::sqrt(sigma));
  const double sigma_x = sq(sobolev_norm(s.u, m, SobolevKind::homogeneous)) +
                         sq(sobolev_norm(s.v, m, SobolevKind::homogeneous)) +
                         sq(sobolev_norm(s.u, m - 1, SobolevKind::homogeneous)) +
                         sq(sobolev_norm(s.v, m - 1, SobolevKind::homogeneous));
  EXPECT_NEAR(functional_X(s, p, m), std::sqrt(sigma_x), 1e-12 * std::sqrt(sigma_x));
}

TEST(Functionals, ShearModeBValue) {
  // u = (sin y, 0): ||Lambda^2 u|| = ||u|| = pi sqrt 2, lambda = sqrt(1/12)
  const auto g = SpectralGrid::make(16, 2 * pi);
  const auto p = make_params(0.0, 2.0);
  FieldSet s(g);
  s.u.x = SpectralField::from_function(g, [](double, double y) { return std::sin(y); });
  EXPECT_NEAR(functional_B(s, p, 1.0, BVariant::higher_order), std::sqrt(1.0 / 12.0) * pi * std::sqrt(2.0), 1e-13);
}

TEST(Functionals, Homogeneity) {
  const auto g = SpectralGrid::make(32, 2 * pi);
  const auto p = make_params(0.0, 1.0);
  const TcmState s = random_state(g, 3, 1.0);
  TcmState d = s;
  d *= 2.0;
  for (auto variant : {BVariant::higher_order, BVariant::base}) {
    EXPECT_NEAR(functional_B(d, p, 1.5, variant), 2 * functional_B(s, p, 1.5, variant), 1e-12);
  }
  EXPECT_NEAR(functional_A(d, p, 1.5), 2 * functional_A(s, p, 1.5), 1e-12);
}

TEST(Functionals, EquivalenceBandsOnRandomStates) {
  const auto g = SpectralGrid::make(32, 2 * pi);
  for (double beta : {0.3, 1.0, std::sqrt(2.0), 5.0}) {
    const auto p = make_params(0.2, beta);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const TcmState s = random_state(g, seed, 0.01);
      for (double m : {1.5, 2.0, 3.0}) {
        const double a2 = sq(functional_A(s, p, m));
        const double sigma = functional_A_sum(s, p, m);
        EXPECT_GE(sigma, 0.75 * a2);
        EXPECT_LE(sigma, 1.25 * a2);
        const double x2 = sq(functional_X(s, p, m));
        const double sigma_x = functional_X_sum(s, m);
        EXPECT_GE(sigma_x, 0.5 * x2);
        EXPECT_LE(sigma_x, 2.0 * x2);
      }
    }
  }
}

TEST(Functionals, XRequiresOrderAboveOne) {
  const auto g = SpectralGrid::make(16, 2 * pi);
  EXPECT_THROW(functional_X(FieldSet(g), make_params(0.0, 1.0), 1.0), ConfigError);
}

TEST(TheoryTable, Entries) {
  EXPECT_DOUBLE_EQ(theory_exponent(FieldId::u, 1.0, false), -0.5);
  EXPECT_DOUBLE_EQ(theory_exponent(FieldId::u, 0.0, true), -2.0);
  EXPECT_DOUBLE_EQ(theory_exponent(FieldId::theta, 0.0, false), 0.0);
  EXPECT_DOUBLE_EQ(theory_exponent(FieldId::theta, 0.0, true), 0.0);
  EXPECT_DOUBLE_EQ(theory_exponent(FieldId::v, 1.0, true), -1.0);
  EXPECT_DOUBLE_EQ(theory_exponent(FieldId::u, 1.0, true), -2.5);
  EXPECT_THROW(theory_exponent(FieldId::v, -1.0, false), ConfigError);
}

TEST(DecayFit, ExactPowerLaw) {
  const auto s = sampled([](double t) { return std::pow(1 + t, -0.5); }, 1, 100, 50);
  const DecayFit f = decay_fit(s, 1, 100);
  EXPECT_NEAR(f.exponent, -0.5, 1e-9);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.samples, 50u);
}

TEST(DecayFit, ConstantSeries) {
  const auto s = sampled([](double) { return 3.0; }, 0, 10, 20);
  const DecayFit f = decay_fit(s, 0, 10);
  EXPECT_NEAR(f.exponent, 0.0, 1e-14);
  EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
}

TEST(DecayFit, PerturbedPowerLaw) {
  const auto s = sampled([](double t) { return 3 * std::pow(1 + t, -1.5) * (1 + 0.01 * std::sin(t)); }, 1, 100, 200);
  EXPECT_NEAR(decay_fit(s, 1, 100).exponent, -1.5, 0.02);
}

TEST(DecayFit, ScaleInvariant) {
  auto s = sampled([](double t) { return std::exp(-0.01 * t) * std::pow(1 + t, -0.7); }, 0, 50, 30);
  const double e1 = decay_fit(s, 5, 45).exponent;
  for (auto& x : s) x.value *= 17.0;
  EXPECT_NEAR(decay_fit(s, 5, 45).exponent, e1, 1e-12);
}

TEST(DecayFit, Errors) {
  auto s = sampled([](double t) { return 1.0 / (1 + t); }, 0, 10, 20);
  EXPECT_THROW(decay_fit(s, 5, 5), ConfigError);
  EXPECT_THROW(decay_fit(s, 0, 2), ConfigError);  // too few samples
  s[5].value = 0.0;
  EXPECT_THROW(decay_fit(s, 0, 10), NonPositiveSeriesError);
  EXPECT_NO_THROW(decay_fit(s, 3.0, 10));  // the zero lies outside the window
}

TEST(Record, EvaluateFillsEveryField) {
  const auto g = SpectralGrid::make(32, 2 * pi);
  const auto p = make_params(0.0, 1.0);
  const TcmState s = random_state(g, 4, 0.01);
  DiagnosticsSpec spec{{{FieldId::u, 0.0}, {FieldId::theta, 1.5}}, {1.5, 2.0}};
  const auto r = evaluate(s, p, spec, 0.25);
  ASSERT_EQ(r.norms.size(), 2u);
  EXPECT_EQ(r.norms[1].first.column(), "theta_gamma_1.5");
  EXPECT_NEAR(r.norms[1].second, sobolev_norm(s.theta, 1.5, SobolevKind::homogeneous), 1e-15);
  ASSERT_EQ(r.functionals.size(), 2u);
  EXPECT_DOUBLE_EQ(r.functionals[1].order, 2.0);
  EXPECT_NEAR(r.norm_sum, smallness_norm(s, p), 1e-15);
  EXPECT_EQ(r.dissipated, 0.25);
  EXPECT_LT(r.divergence, 1e-13);
  EXPECT_GT(r.linf[2], 0.0);
}

TEST(Monotonicity, CountsIncreasesBeyondTolerance) {
  std::vector<DiagnosticsRecord> recs(4);
  const double xs[] = {1.0, 0.9, 0.95, 0.8};
  for (int i = 0; i < 4; ++i) {
    recs[i].time = i;
    FunctionalValues f;
    f.X = xs[i];
    f.Y = 1.0;
    recs[i].functionals.push_back(f);
  }
  const auto rep = check_x_monotonicity(recs, 0, 0.1);
  EXPECT_EQ(rep.intervals, 3u);
  EXPECT_EQ(rep.violations, 1u);
  // a step large enough to swallow the bump
  EXPECT_EQ(check_x_monotonicity(recs, 0, 0.6).violations, 0u);
}
