#pragma once

#include <vector>

#include "dub/image.hpp"

namespace dub {

struct ClassicConfig {
  double sigma = 25.0 / 255.0;  // noise standard deviation, intensity units
  double lambda_thr = 2.7;      // hard-threshold multiplier
};

// Orthonormal type-II DCT of a fixed size with cached cosine tables.
// forward2d applies the 1D transform along rows then columns of a p x p
// block; inverse2d is its exact inverse.
class Dct {
 public:
  explicit Dct(int p);

  void forward1d(const double* in, double* out) const;
  void inverse1d(const double* in, double* out) const;
  void forward2d(const double* in, double* out) const;
  void inverse2d(const double* in, double* out) const;

  int size() const { return p_; }

 private:
  int p_;
  std::vector<double> table_;  // [k*p + n] = c_k * cos(pi*(2n+1)*k / (2p))
};

// Orthonormal multi-level Haar along the leading axis of a [k, m] array,
// k a power of two. Output row 0 is the scaling coefficient, followed by
// detail rows from coarsest to finest. Exact inverse pair.
void haar_forward_group(const double* in, double* out, int k, int m);
void haar_inverse_group(const double* in, double* out, int k, int m);

// Collaborative hard-threshold shrinkage of one patch group. in and out are
// k*p*p arrays (k patches of p x p, k a power of two). The group is taken to
// the separable 3D basis (2D DCT per patch, Haar along the group axis),
// coefficients with |c| < lambda_thr * sigma are zeroed except the DC of the
// scaling patch, and the group is transformed back. Returns the aggregation
// weight 1 / (sigma^2 * max(1, n_retained)).
double hard_threshold_filter(const float* in, float* out, int k, int p,
                             const ClassicConfig& cfg);

// Empirical Wiener shrinkage of one patch group guided by a pilot estimate
// at the same coordinates. Per 3D coefficient, the noisy coefficient is
// scaled by w = S^2 / (S^2 + sigma^2) with S the pilot coefficient. Returns
// the aggregation weight 1 / (sigma^2 * sum(w^2)), or 1.0 when every w is 0.
double wiener_filter(const float* noisy, const float* pilot, float* out,
                     int k, int p, const ClassicConfig& cfg);

// Noise level estimate: median absolute value of the single-level diagonal
// Haar detail of the image, divided by 0.6745, clamped to >= 1e-6.
double estimate_sigma_mad(const Image& img);

}  // namespace dub
