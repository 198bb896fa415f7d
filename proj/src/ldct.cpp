#include "dub/ldct.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace dub {

namespace {

void validate_noise_config(const NoiseConfig& cfg) {
  if (!(cfg.photons > 0.0)) throw std::invalid_argument("photons must be > 0");
  if (!(cfg.mu_max > 0.0)) throw std::invalid_argument("mu_max must be > 0");
  if (cfg.mode != "image" && cfg.mode != "projection")
    throw std::invalid_argument("noise mode must be image or projection");
}

// In-place radix-2 Cooley-Tukey; n must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / double(len) * (inverse ? 1 : -1);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= double(n);
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double bilinear(const Image& img, double x, double y) {
  const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  double acc = 0.0;
  for (int dy = 0; dy <= 1; ++dy)
    for (int dx = 0; dx <= 1; ++dx) {
      const int xi = x0 + dx, yi = y0 + dy;
      if (xi < 0 || xi >= img.width || yi < 0 || yi >= img.height) continue;
      const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
      acc += w * img.at(yi, xi);
    }
  return acc;
}

}  // namespace

uint64_t poisson(double lambda, Rng& rng) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (lambda == 0.0) return 0;
  if (lambda < 30.0) {
    double p = std::exp(-lambda);
    double cum = p;
    const double u = rng.uniform();
    uint64_t k = 0;
    while (u > cum && k < 200) {
      ++k;
      p *= lambda / double(k);
      cum += p;
    }
    return k;
  }
  const double n = std::round(lambda + std::sqrt(lambda) * rng.normal());
  return n < 0.0 ? 0 : uint64_t(n);
}

Image simulate_low_dose(const Image& clean, const NoiseConfig& cfg) {
  validate_noise_config(cfg);
  for (float v : clean.pixels)
    if (v < 0.0f || v > 1.0f)
      throw std::invalid_argument(
          "clean image values must lie in [0, 1] for dose simulation");

  Rng rng(cfg.seed);
  const double n0 = cfg.photons, mu = cfg.mu_max;

  if (cfg.mode == "image") {
    Image out(clean.height, clean.width);
    out.range_min = 0.0f;
    out.range_max = 1.5f;
    for (size_t i = 0; i < clean.pixels.size(); ++i) {
      const double lambda = n0 * std::exp(-mu * double(clean.pixels[i]));
      const double n = double(std::max<uint64_t>(poisson(lambda, rng), 1));
      const double y = -std::log(n / n0) / mu;
      out.pixels[i] = float(std::clamp(y, 0.0, 1.5));
    }
    return out;
  }

  // Projection mode. Line integrals scale with the path length, so the
  // attenuation exponent is normalized by the image side to keep the same
  // per-dose transmission range as image mode.
  if (clean.height != clean.width)
    throw std::invalid_argument("projection mode requires a square image");
  const int size = clean.height;
  const int n_angles = std::max(size, 64);
  const int n_bins = int(std::ceil(std::numbers::sqrt2 * size)) + 3;
  Sinogram sino = radon(clean, n_angles, n_bins);
  const double scale = mu / double(size);
  for (double& s : sino.values) {
    const double lambda = n0 * std::exp(-scale * s);
    const double n = double(std::max<uint64_t>(poisson(lambda, rng), 1));
    s = -std::log(n / n0) / scale;
  }
  Image out = fbp(sino, size);
  out.range_min = 0.0f;
  out.range_max = 1.5f;
  return out;
}

Sinogram radon(const Image& img, int n_angles, int n_bins) {
  if (img.height != img.width)
    throw std::invalid_argument("forward projection requires a square image");
  if (n_angles < 1 || n_bins < 1)
    throw std::invalid_argument("angle and bin counts must be >= 1");

  Sinogram sino;
  sino.n_angles = n_angles;
  sino.angle_step = std::numbers::pi / n_angles;
  sino.n_bins = n_bins;
  sino.bin_step = 1.0;
  sino.values.assign(size_t(n_angles) * n_bins, 0.0);

  const double c = (img.width - 1) / 2.0;
  const double s_mid = (n_bins - 1) / 2.0;
  const double ray_len = std::hypot(img.width, img.height) + 2.0;
  const double dt = 0.25;
  const int n_steps = int(std::ceil(ray_len / dt));

  for (int a = 0; a < n_angles; ++a) {
    const double theta = a * sino.angle_step;
    const double ux = std::cos(theta), uy = std::sin(theta);   // detector axis
    const double vx = -std::sin(theta), vy = std::cos(theta);  // ray direction
    for (int b = 0; b < n_bins; ++b) {
      const double s = (b - s_mid) * sino.bin_step;
      double acc = 0.0;
      for (int i = 0; i < n_steps; ++i) {
        const double t = -ray_len / 2.0 + (i + 0.5) * dt;
        acc += bilinear(img, c + s * ux + t * vx, c + s * uy + t * vy);
      }
      sino.values[size_t(a) * n_bins + b] = acc * dt;
    }
  }
  return sino;
}

Image fbp(const Sinogram& sino, int size) {
  if (size < 1) throw std::invalid_argument("output size must be >= 1");
  if (sino.n_angles < 1 || sino.n_bins < 1)
    throw std::invalid_argument("empty sinogram");
  if (sino.n_angles < size)
    std::fprintf(stderr,
                 "warning: %d angles for a %d-pixel reconstruction; expect "
                 "streak artifacts\n",
                 sino.n_angles, size);

  const int nb = sino.n_bins;
  const size_t nfft = next_pow2(size_t(nb) * 2);
  const double ds = sino.bin_step;

  // Band-limited ramp: sampled spatial kernel h, circularly arranged, taken
  // to the frequency domain once.
  std::vector<std::complex<double>> h(nfft, 0.0);
  h[0] = 1.0 / (4.0 * ds * ds);
  for (size_t n = 1; n < nfft / 2; n += 2) {
    const double v = -1.0 / (std::numbers::pi * std::numbers::pi *
                             double(n) * double(n) * ds * ds);
    h[n] = v;
    h[nfft - n] = v;
  }
  fft(h, false);

  std::vector<double> filtered(size_t(sino.n_angles) * nb);
  std::vector<std::complex<double>> row(nfft);
  for (int a = 0; a < sino.n_angles; ++a) {
    std::fill(row.begin(), row.end(), std::complex<double>(0.0, 0.0));
    for (int b = 0; b < nb; ++b)
      row[b] = sino.values[size_t(a) * nb + b];
    fft(row, false);
    for (size_t i = 0; i < nfft; ++i) row[i] *= h[i].real();
    fft(row, true);
    for (int b = 0; b < nb; ++b)
      filtered[size_t(a) * nb + b] = row[b].real() * ds;
  }

  Image out(size, size);
  const double c = (size - 1) / 2.0;
  const double s_mid = (nb - 1) / 2.0;
  const double dtheta = std::numbers::pi / sino.n_angles;
  for (int a = 0; a < sino.n_angles; ++a) {
    const double theta = a * sino.angle_step;
    const double ux = std::cos(theta), uy = std::sin(theta);
    const double* q = &filtered[size_t(a) * nb];
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double s = ((x - c) * ux + (y - c) * uy) / ds + s_mid;
        const int b0 = int(std::floor(s));
        if (b0 < 0 || b0 + 1 >= nb) continue;
        const double f = s - b0;
        out.at(y, x) += float(((1.0 - f) * q[b0] + f * q[b0 + 1]) * dtheta);
      }
  }
  for (float& v : out.pixels) v = std::clamp(v, 0.0f, 1.5f);
  out.range_min = 0.0f;
  out.range_max = 1.5f;
  return out;
}

}  // namespace dub
