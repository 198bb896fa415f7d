#include "dub/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "dub/rng.hpp"

namespace dub {

namespace {

void clamp01(Image& img) {
  for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
}

// Flat disks drawn from a small intensity palette, each with a gentle radial
// shading ramp. Repeated levels give the non-local self-similarity that
// block matching feeds on; the shading is low-amplitude texture with sharp
// rims.
Image disks_phantom(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w, float(rng.uniform(0.22, 0.32)));
  const int n_disks = 8 + rng.uniform_int(6);
  static const double palette[] = {0.40, 0.50, 0.60, 0.70, 0.80, 0.90};
  const double min_dim = std::min(h, w);

  for (int d = 0; d < n_disks; ++d) {
    const double cy = rng.uniform(0.1, 0.9) * h;
    const double cx = rng.uniform(0.1, 0.9) * w;
    const double r = rng.uniform(min_dim / 14.0, min_dim / 5.0);
    const double base = palette[rng.uniform_int(6)];
    const double shade = rng.uniform(-0.08, 0.08);
    for (int y = std::max(0, int(cy - r) - 1); y < std::min(h, int(cy + r) + 2); ++y) {
      for (int x = std::max(0, int(cx - r) - 1); x < std::min(w, int(cx + r) + 2); ++x) {
        const double dy = y - cy, dx = x - cx;
        const double rho = std::sqrt(dy * dy + dx * dx) / r;
        if (rho <= 1.0) img.at(y, x) = float(base + shade * (1.0 - rho));
      }
    }
  }
  clamp01(img);
  return img;
}

// Nested ellipses on a dark ring background, loosely skull-like.
Image shepp_like_phantom(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w, 0.08f);
  const double cy = h * 0.5, cx = w * 0.5;

  struct Ell {
    double a, b, phi, off_y, off_x, value;
  };
  Ell ells[6];
  ells[0] = {0.46, 0.42, 0.0, 0.0, 0.0, 0.75};              // outer shell
  ells[1] = {0.42, 0.38, 0.0, 0.0, 0.0, -0.45};             // interior
  for (int i = 2; i < 6; ++i)
    ells[i] = {rng.uniform(0.06, 0.16), rng.uniform(0.05, 0.13),
               rng.uniform(0.0, 3.14),  rng.uniform(-0.2, 0.2),
               rng.uniform(-0.2, 0.2),  rng.uniform(0.15, 0.45) * (i % 2 ? 1 : -1)};

  const double min_dim = std::min(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = img.at(y, x);
      for (const Ell& e : ells) {
        const double py = (y - cy - e.off_y * min_dim) / min_dim;
        const double px = (x - cx - e.off_x * min_dim) / min_dim;
        const double c = std::cos(e.phi), s = std::sin(e.phi);
        const double u = (px * c + py * s) / e.a;
        const double t = (-px * s + py * c) / e.b;
        if (u * u + t * t <= 1.0) v += e.value;
      }
      img.at(y, x) = float(v);
    }
  }
  clamp01(img);
  return img;
}

// Axis-aligned constant rectangles over a shallow global ramp.
Image piecewise_phantom(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  const double gy = rng.uniform(-0.1, 0.1), gx = rng.uniform(-0.1, 0.1);
  const double base = rng.uniform(0.25, 0.4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at(y, x) = float(base + gy * y / h + gx * x / w);

  const int n_rect = 5 + rng.uniform_int(4);
  for (int i = 0; i < n_rect; ++i) {
    const int rh = 4 + rng.uniform_int(std::max(1, h / 2));
    const int rw = 4 + rng.uniform_int(std::max(1, w / 2));
    const int y0 = rng.uniform_int(std::max(1, h - rh));
    const int x0 = rng.uniform_int(std::max(1, w - rw));
    const float v = float(rng.uniform(0.15, 0.9));
    for (int y = y0; y < std::min(h, y0 + rh); ++y)
      for (int x = x0; x < std::min(w, x0 + rw); ++x) img.at(y, x) = v;
  }
  clamp01(img);
  return img;
}

}  // namespace

Image make_phantom(const std::string& kind, int height, int width,
                   uint64_t seed) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("make_phantom: extents must be >= 1");
  if (kind == "disks") return disks_phantom(height, width, seed);
  if (kind == "shepp-like") return shepp_like_phantom(height, width, seed);
  if (kind == "piecewise") return piecewise_phantom(height, width, seed);
  throw std::invalid_argument("make_phantom: unknown kind '" + kind +
                              "' (want disks, shepp-like, piecewise)");
}

Image add_gaussian_noise(const Image& img, float sigma, uint64_t seed) {
  Rng rng(seed);
  Image out = img;
  for (float& v : out.pixels)
    v = std::clamp(v + sigma * float(rng.normal()), img.range_min, img.range_max);
  return out;
}

}  // namespace dub
