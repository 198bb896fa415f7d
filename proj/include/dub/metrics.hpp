#pragma once

#include "dub/image.hpp"

namespace dub {

// 10 * log10(peak^2 / MSE); identical images give +infinity.
double psnr(const Image& x, const Image& ref, double peak = 1.0);

// Mean local structural similarity over an 11x11 Gaussian window
// (sigma 1.5), C1 = (0.01*peak)^2, C2 = (0.03*peak)^2, averaged over window
// positions fully inside the image. Both images must be at least 11x11.
double ssim(const Image& x, const Image& ref, double peak = 1.0);

}  // namespace dub
