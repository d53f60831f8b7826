#include "tcm/random_fields.hpp"

#include <cmath>

namespace tcm {

SpectralField random_field(const GridPtr& grid, Rng& rng,
                           const std::function<double(double)>& amplitude, int band_limit) {
  SpectralField f(grid);
  auto c = f.coeffs();
  std::normal_distribution<double> normal(0.0, 1.0);
  const int limit = std::min(band_limit, grid->n() / 2 - 1);
  // Fixed traversal order keeps draws reproducible for a given seed.
  for (int mx = -limit; mx <= limit; ++mx) {
    for (int my = 0; my <= limit; ++my) {
      if (my == 0 && mx <= 0) continue;
      const double m = std::hypot(static_cast<double>(mx), static_cast<double>(my));
      const double sigma = amplitude(m) / std::sqrt(2.0);
      const double re = normal(rng);
      const double im = normal(rng);
      c[grid->slot(mx, my)] = Complex(sigma * re, sigma * im);
    }
  }
  for (int mx = 1; mx <= limit; ++mx) c[grid->slot(-mx, 0)] = std::conj(c[grid->slot(mx, 0)]);
  return f;
}

double PeakedSpectrum::amplitude(double m) const {
  const double r = m / peak;
  return std::sqrt(std::pow(r, slope) * std::exp(-r * r));
}

double PowerLawSpectrum::amplitude(double m) const { return std::pow(m, -exponent); }

}  // namespace tcm
