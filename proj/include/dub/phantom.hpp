#pragma once

#include <cstdint>
#include <string>

#include "dub/image.hpp"

namespace dub {

// Deterministic synthetic test images with piecewise-smooth structure and
// sharp edges. kind is one of "disks", "shepp-like", "piecewise".
Image make_phantom(const std::string& kind, int height, int width,
                   uint64_t seed);

// Additive i.i.d. Gaussian noise, clamped to the image range.
Image add_gaussian_noise(const Image& img, float sigma, uint64_t seed);

}  // namespace dub
