#include "dub/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dub {

namespace {

bool is_power_of_two(int k) { return k >= 1 && (k & (k - 1)) == 0; }

constexpr double kInvSqrt2 = 0.70710678118654752440;

}  // namespace

Dct::Dct(int p) : p_(p) {
  if (p < 1) throw std::invalid_argument("transform size must be >= 1");
  table_.resize(size_t(p) * p);
  const double c0 = std::sqrt(1.0 / p);
  const double ck = std::sqrt(2.0 / p);
  for (int k = 0; k < p; ++k)
    for (int n = 0; n < p; ++n)
      table_[size_t(k) * p + n] =
          (k == 0 ? c0 : ck) *
          std::cos(std::numbers::pi * (2.0 * n + 1.0) * k / (2.0 * p));
}

void Dct::forward1d(const double* in, double* out) const {
  for (int k = 0; k < p_; ++k) {
    const double* row = &table_[size_t(k) * p_];
    double acc = 0.0;
    for (int n = 0; n < p_; ++n) acc += row[n] * in[n];
    out[k] = acc;
  }
}

void Dct::inverse1d(const double* in, double* out) const {
  for (int n = 0; n < p_; ++n) {
    double acc = 0.0;
    for (int k = 0; k < p_; ++k) acc += table_[size_t(k) * p_ + n] * in[k];
    out[n] = acc;
  }
}

void Dct::forward2d(const double* in, double* out) const {
  std::vector<double> tmp(size_t(p_) * p_);
  for (int r = 0; r < p_; ++r)
    forward1d(in + size_t(r) * p_, tmp.data() + size_t(r) * p_);
  std::vector<double> col(p_), colout(p_);
  for (int c = 0; c < p_; ++c) {
    for (int r = 0; r < p_; ++r) col[r] = tmp[size_t(r) * p_ + c];
    forward1d(col.data(), colout.data());
    for (int r = 0; r < p_; ++r) out[size_t(r) * p_ + c] = colout[r];
  }
}

void Dct::inverse2d(const double* in, double* out) const {
  std::vector<double> tmp(size_t(p_) * p_);
  std::vector<double> col(p_), colout(p_);
  for (int c = 0; c < p_; ++c) {
    for (int r = 0; r < p_; ++r) col[r] = in[size_t(r) * p_ + c];
    inverse1d(col.data(), colout.data());
    for (int r = 0; r < p_; ++r) tmp[size_t(r) * p_ + c] = colout[r];
  }
  for (int r = 0; r < p_; ++r)
    inverse1d(tmp.data() + size_t(r) * p_, out + size_t(r) * p_);
}

void haar_forward_group(const double* in, double* out, int k, int m) {
  if (!is_power_of_two(k))
    throw std::invalid_argument("group length must be a power of two, got " +
                                std::to_string(k));
  std::copy_n(in, size_t(k) * m, out);
  std::vector<double> tmp(size_t(k) * m);
  for (int n = k; n >= 2; n /= 2) {
    const int half = n / 2;
    for (int i = 0; i < half; ++i) {
      const double* a = out + size_t(2 * i) * m;
      const double* b = out + size_t(2 * i + 1) * m;
      double* s = tmp.data() + size_t(i) * m;
      double* d = tmp.data() + size_t(half + i) * m;
      for (int j = 0; j < m; ++j) {
        s[j] = (a[j] + b[j]) * kInvSqrt2;
        d[j] = (a[j] - b[j]) * kInvSqrt2;
      }
    }
    std::copy_n(tmp.data(), size_t(n) * m, out);
  }
}

void haar_inverse_group(const double* in, double* out, int k, int m) {
  if (!is_power_of_two(k))
    throw std::invalid_argument("group length must be a power of two, got " +
                                std::to_string(k));
  std::copy_n(in, size_t(k) * m, out);
  std::vector<double> tmp(size_t(k) * m);
  for (int n = 2; n <= k; n *= 2) {
    const int half = n / 2;
    for (int i = 0; i < half; ++i) {
      const double* s = out + size_t(i) * m;
      const double* d = out + size_t(half + i) * m;
      double* a = tmp.data() + size_t(2 * i) * m;
      double* b = tmp.data() + size_t(2 * i + 1) * m;
      for (int j = 0; j < m; ++j) {
        a[j] = (s[j] + d[j]) * kInvSqrt2;
        b[j] = (s[j] - d[j]) * kInvSqrt2;
      }
    }
    std::copy_n(tmp.data(), size_t(n) * m, out);
  }
}

namespace {

void validate_group(int k, int p, const ClassicConfig& cfg) {
  if (!is_power_of_two(k))
    throw std::invalid_argument("group size must be a power of two, got " +
                                std::to_string(k));
  if (p < 1) throw std::invalid_argument("patch side must be >= 1");
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(cfg.lambda_thr >= 0.0))
    throw std::invalid_argument("lambda_thr must be >= 0");
}

// 2D DCT of each patch, then Haar along the group axis.
void to_3d_basis(const Dct& dct, const float* in, double* out, int k, int p) {
  const size_t pp = size_t(p) * p;
  std::vector<double> patch(pp), coeffs(size_t(k) * pp);
  for (int g = 0; g < k; ++g) {
    for (size_t i = 0; i < pp; ++i) patch[i] = in[size_t(g) * pp + i];
    dct.forward2d(patch.data(), coeffs.data() + size_t(g) * pp);
  }
  haar_forward_group(coeffs.data(), out, k, int(pp));
}

void from_3d_basis(const Dct& dct, const double* in, float* out, int k, int p) {
  const size_t pp = size_t(p) * p;
  std::vector<double> coeffs(size_t(k) * pp), patch(pp);
  haar_inverse_group(in, coeffs.data(), k, int(pp));
  for (int g = 0; g < k; ++g) {
    dct.inverse2d(coeffs.data() + size_t(g) * pp, patch.data());
    for (size_t i = 0; i < pp; ++i) out[size_t(g) * pp + i] = float(patch[i]);
  }
}

}  // namespace

double hard_threshold_filter(const float* in, float* out, int k, int p,
                             const ClassicConfig& cfg) {
  validate_group(k, p, cfg);
  const Dct dct(p);
  const size_t pp = size_t(p) * p;
  std::vector<double> c(size_t(k) * pp);
  to_3d_basis(dct, in, c.data(), k, p);

  const double thr = cfg.lambda_thr * cfg.sigma;
  // Index 0 is the DC of the group-scaling patch; it always survives so the
  // group mean is preserved.
  long n_retained = 1;
  for (size_t i = 1; i < c.size(); ++i) {
    if (std::abs(c[i]) < thr)
      c[i] = 0.0;
    else
      ++n_retained;
  }

  from_3d_basis(dct, c.data(), out, k, p);
  return 1.0 / (cfg.sigma * cfg.sigma * double(std::max(1L, n_retained)));
}

double wiener_filter(const float* noisy, const float* pilot, float* out,
                     int k, int p, const ClassicConfig& cfg) {
  validate_group(k, p, cfg);
  const Dct dct(p);
  const size_t pp = size_t(p) * p;
  std::vector<double> cn(size_t(k) * pp), cp(size_t(k) * pp);
  to_3d_basis(dct, noisy, cn.data(), k, p);
  to_3d_basis(dct, pilot, cp.data(), k, p);

  const double s2 = cfg.sigma * cfg.sigma;
  double wsum2 = 0.0;
  for (size_t i = 0; i < cn.size(); ++i) {
    const double e = cp[i] * cp[i];
    const double w = e / (e + s2);
    cn[i] *= w;
    wsum2 += w * w;
  }

  from_3d_basis(dct, cn.data(), out, k, p);
  return wsum2 > 0.0 ? 1.0 / (s2 * wsum2) : 1.0;
}

double estimate_sigma_mad(const Image& img) {
  if (img.height < 2 || img.width < 2)
    throw std::invalid_argument("image too small for a noise estimate");
  std::vector<double> diag;
  diag.reserve(size_t(img.height / 2) * (img.width / 2));
  for (int y = 0; y + 1 < img.height; y += 2)
    for (int x = 0; x + 1 < img.width; x += 2) {
      const double d = (double(img.at(y, x)) - img.at(y, x + 1) -
                        img.at(y + 1, x) + img.at(y + 1, x + 1)) *
                       0.5;
      diag.push_back(std::abs(d));
    }
  const size_t mid = diag.size() / 2;
  std::nth_element(diag.begin(), diag.begin() + mid, diag.end());
  double med = diag[mid];
  if (diag.size() % 2 == 0) {
    const double lo = *std::max_element(diag.begin(), diag.begin() + mid);
    med = 0.5 * (med + lo);
  }
  return std::max(med / 0.6745, 1e-6);
}

}  // namespace dub
