#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dub/image.hpp"
#include "dub/rng.hpp"

namespace dub {

struct NoiseConfig {
  double photons = 1e5;   // N0, mean photon count at zero attenuation
  double mu_max = 4.0;    // attenuation reached by a pixel of value 1.0
  std::string mode = "image";  // "image" or "projection"
  uint64_t seed = 0;
};

// Poisson sampler: exact inversion for lambda < 30, rounded Gaussian
// approximation above (moment error negligible at that scale).
uint64_t poisson(double lambda, Rng& rng);

// Photon-counting degradation. Image mode, per pixel: lambda = N0 *
// exp(-mu_max * x); n ~ Poisson(lambda); y = -ln(max(n,1)/N0) / mu_max,
// clamped to [0, 1.5]. Projection mode applies the same counting statistics
// per sinogram bin of the forward projection and reconstructs by filtered
// back projection. Deterministic per (clean, cfg).
Image simulate_low_dose(const Image& clean, const NoiseConfig& cfg);

struct Sinogram {
  int n_angles = 0;
  double angle_step = 0.0;       // radians, angles cover [0, pi)
  int n_bins = 0;
  double bin_step = 1.0;         // detector spacing, pixel units
  std::vector<double> values;    // [angle][bin] line integrals
};

// Parallel-beam line integrals of a square image (pixel size 1), bilinear
// sampling along each ray at quarter-pixel steps.
Sinogram radon(const Image& img, int n_angles, int n_bins);

// Ramp-filtered (band-limited Ram-Lak, applied in the frequency domain) back
// projection with linear detector interpolation; output clamped to [0, 1.5].
Image fbp(const Sinogram& sino, int size);

}  // namespace dub
