#include "dub/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dub {

namespace {

void check_shapes(const Image& a, const Image& b, double peak) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("metric images differ in shape");
  if (!(peak > 0.0)) throw std::invalid_argument("peak must be > 0");
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow * kWindow);
  const double c = (kWindow - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i)
    for (int j = 0; j < kWindow; ++j) {
      const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      w[size_t(i) * kWindow + j] = std::exp(-d2 / (2.0 * kSigma * kSigma));
      total += w[size_t(i) * kWindow + j];
    }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

double psnr(const Image& x, const Image& ref, double peak) {
  check_shapes(x, ref, peak);
  double mse = 0.0;
  for (size_t i = 0; i < x.pixels.size(); ++i) {
    const double d = double(x.pixels[i]) - double(ref.pixels[i]);
    mse += d * d;
  }
  mse /= double(x.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& x, const Image& ref, double peak) {
  check_shapes(x, ref, peak);
  if (x.height < kWindow || x.width < kWindow)
    throw std::invalid_argument("images smaller than the 11x11 window");

  static const std::vector<double> w = gaussian_window();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  double total = 0.0;
  long count = 0;
  for (int y = 0; y + kWindow <= x.height; ++y)
    for (int xx = 0; xx + kWindow <= x.width; ++xx) {
      double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) {
          const double wv = w[size_t(i) * kWindow + j];
          const double a = x.at(y + i, xx + j);
          const double b = ref.at(y + i, xx + j);
          mx += wv * a;
          my += wv * b;
          sxx += wv * a * a;
          syy += wv * b * b;
          sxy += wv * a * b;
        }
      const double vx = sxx - mx * mx;
      const double vy = syy - my * my;
      const double cxy = sxy - mx * my;
      const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      total += num / den;
      ++count;
    }
  return total / double(count);
}

}  // namespace dub
