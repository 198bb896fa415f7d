#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dub/image.hpp"
#include "dub/metrics.hpp"
#include "dub/phantom.hpp"
#include "dub/rng.hpp"

using namespace dub;

namespace {

Image with_gaussian_noise(const Image& img, double sigma, uint64_t seed) {
  Rng rng(seed);
  Image out = img;
  for (float& p : out.pixels) p += float(sigma * rng.normal());
  return out;
}

}  // namespace

TEST_CASE("psnr of a constant offset has a closed form") {
  Image a(16, 16, 0.5f), b(16, 16, 0.6f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-7));
  CHECK(psnr(a, b, 2.0) ==
        doctest::Approx(20.0 + 20.0 * std::log10(2.0)).epsilon(1e-7));
}

TEST_CASE("psnr of identical images is infinite") {
  const Image a = make_phantom("disks", 16, 16, 1);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0.0);
}

TEST_CASE("psnr and ssim are symmetric in their arguments") {
  const Image a = make_phantom("disks", 32, 32, 2);
  const Image b = with_gaussian_noise(a, 0.1, 3);
  CHECK(std::fabs(psnr(a, b) - psnr(b, a)) < 1e-9);
  CHECK(std::fabs(ssim(a, b) - ssim(b, a)) < 1e-9);
}

TEST_CASE("both metrics fall as the noise level rises") {
  const Image clean = make_phantom("disks", 64, 64, 4);
  const double sigmas[3] = {5.0 / 255, 15.0 / 255, 25.0 / 255};
  double mean_psnr[3] = {0, 0, 0}, mean_ssim[3] = {0, 0, 0};
  for (int s = 0; s < 3; ++s) {
    for (int t = 0; t < 10; ++t) {
      const Image noisy =
          with_gaussian_noise(clean, sigmas[s], derive_seed(9, s * 10 + t));
      mean_psnr[s] += psnr(clean, noisy) / 10.0;
      mean_ssim[s] += ssim(clean, noisy) / 10.0;
    }
  }
  CHECK(mean_psnr[0] > mean_psnr[1]);
  CHECK(mean_psnr[1] > mean_psnr[2]);
  CHECK(mean_ssim[0] > mean_ssim[1]);
  CHECK(mean_ssim[1] > mean_ssim[2]);
}

TEST_CASE("gaussian noise psnr lands near its analytic value") {
  // mse ~ sigma^2, so psnr ~ -10 log10(sigma^2); 0.1 -> 20 dB.
  const Image clean(64, 64, 0.5f);
  double mean = 0.0;
  for (int t = 0; t < 10; ++t)
    mean += psnr(clean, with_gaussian_noise(clean, 0.1, 100 + t)) / 10.0;
  CHECK(std::fabs(mean - 20.0) < 0.5);
}

TEST_CASE("ssim of an image with itself is one") {
  const Image a = make_phantom("disks", 24, 24, 5);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ssim of two constants has a closed form") {
  // Zero variances: ssim = (2ab + c1) / (a^2 + b^2 + c1), c1 = (0.01 peak)^2.
  Image a(16, 16, 0.4f), b(16, 16, 0.6f);
  const double c1 = 0.01 * 0.01;
  const double expected =
      (2.0 * 0.4 * 0.6 + c1) / (0.4 * 0.4 + 0.6 * 0.6 + c1);
  CHECK(ssim(a, b) == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("ssim of anti-correlated structure is negative") {
  Image a(24, 24, 0.0f), b(24, 24, 0.0f);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      const float v = ((x + y) % 2 == 0) ? 0.9f : 0.1f;
      a.pixels[size_t(y) * 24 + x] = v;
      b.pixels[size_t(y) * 24 + x] = 1.0f - v;
    }
  CHECK(ssim(a, b) < 0.0);
}

TEST_CASE("ssim stays within its theoretical range") {
  Rng rng(6);
  for (int t = 0; t < 5; ++t) {
    const Image a = make_phantom("disks", 32, 32, 60 + uint64_t(t));
    const Image b = with_gaussian_noise(a, rng.uniform(0.0, 0.4), 70 + t);
    const double s = ssim(a, b);
    CHECK(s <= 1.0 + 1e-12);
    CHECK(s >= -1.0 - 1e-12);
  }
}

TEST_CASE("metric inputs are validated") {
  Image a(16, 16, 0.5f), b(16, 17, 0.5f), tiny(8, 8, 0.5f);
  CHECK_THROWS_AS(psnr(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ssim(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
  CHECK(psnr(tiny, tiny) > 0.0);  // psnr has no window, small is fine
}
