#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "tcm/spectral.hpp"

namespace tcm {

using Rng = std::mt19937_64;

// Draws a real, mean-free field whose coefficients are independent complex
// Gaussians with standard deviation amplitude(|m|), |m| the lattice-index
// magnitude. Modes with |mx| or |my| above band_limit stay zero. The jy = 0
// column is conjugate-symmetrized so the field is real.
SpectralField random_field(const GridPtr& grid, Rng& rng,
                           const std::function<double(double)>& amplitude, int band_limit);

// Energy-peaked spectrum used for initial data: coefficient variance
// proportional to (m / peak)^slope * exp(-(m / peak)^2). With slope = 1 the
// shell energy 2*pi*m*variance peaks exactly at m = peak.
struct PeakedSpectrum {
  double peak = 8.0;
  double slope = 1.0;

  double amplitude(double m) const;
};

// Power-law spectrum |m|^(-exponent) for coefficient standard deviations.
struct PowerLawSpectrum {
  double exponent = 2.0;

  double amplitude(double m) const;
};

}  // namespace tcm
