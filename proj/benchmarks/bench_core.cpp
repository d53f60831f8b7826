#include <benchmark/benchmark.h>

#include <cmath>

#include "tcm/integrator.hpp"
#include "tcm/model.hpp"
#include "tcm/random_fields.hpp"

namespace {

tcm::TcmState sample_state(int n) {
  const auto grid = tcm::SpectralGrid::make(n, 16.0 * M_PI);
  tcm::Rng rng(7);
  const tcm::PeakedSpectrum spec;
  const auto amp = [&](double m) { return 1e-3 * spec.amplitude(m); };
  tcm::TcmState s(grid);
  s.u.x = tcm::random_field(grid, rng, amp, grid->dealias_limit());
  s.u.y = tcm::random_field(grid, rng, amp, grid->dealias_limit());
  s.u = tcm::leray_project(s.u);
  s.v.x = tcm::random_field(grid, rng, amp, grid->dealias_limit());
  s.v.y = tcm::random_field(grid, rng, amp, grid->dealias_limit());
  s.theta = tcm::random_field(grid, rng, amp, grid->dealias_limit());
  return s;
}

void BM_RoundTrip(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto grid = tcm::SpectralGrid::make(n, 2.0 * M_PI);
  tcm::SpectralField f = tcm::SpectralField::from_function(
      grid, [](double x, double y) { return std::sin(x) * std::cos(2.0 * y); });
  for (auto _ : state) {
    tcm::PhysicalField p = f.to_physical();
    f = p.to_spectral();
    benchmark::DoNotOptimize(f.coeffs().data());
  }
}
BENCHMARK(BM_RoundTrip)->Arg(64)->Arg(128)->Arg(256);

void BM_Rhs(benchmark::State& state) {
  const auto s = sample_state(static_cast<int>(state.range(0)));
  const auto params = tcm::ModelParams::make({});
  for (auto _ : state) {
    auto t = tcm::rhs(s, params);
    benchmark::DoNotOptimize(t.theta.coeffs().data());
  }
}
BENCHMARK(BM_Rhs)->Arg(64)->Arg(128)->Arg(256);

void BM_Step(benchmark::State& state) {
  tcm::TcmState s = sample_state(static_cast<int>(state.range(0)));
  const auto params = tcm::ModelParams::make({});
  tcm::Stepper stepper(s.grid_ptr(), params);
  for (auto _ : state) {
    s = stepper.step(s, 1e-3);
    benchmark::DoNotOptimize(s.theta.coeffs().data());
  }
}
BENCHMARK(BM_Step)->Arg(64)->Arg(128)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
