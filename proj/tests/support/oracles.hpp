#pragma once

// Double-precision reference implementations of the differentiable ops, the
// compact encoder-decoder, and aggregation, plus a central-difference
// driver. Tests cross-check the float32 production path against these.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dub/block_matching.hpp"
#include "dub/unet.hpp"

namespace oracle {

inline double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-6});
  return std::fabs(a - b) / denom;
}

// d f / d x[i] by central differences, h in the 64-bit domain.
inline double central_diff(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, size_t i, double h = 1e-3) {
  x[i] += h;
  const double fp = f(x);
  x[i] -= 2.0 * h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

inline std::vector<double> conv2d(const std::vector<double>& x, int n, int c,
                                  int h, int w, const std::vector<double>& k,
                                  int f, int ksz, const std::vector<double>& b,
                                  int pad) {
  const int ho = h + 2 * pad - ksz + 1;
  const int wo = w + 2 * pad - ksz + 1;
  std::vector<double> out(size_t(n) * f * ho * wo);
  for (int ni = 0; ni < n; ++ni)
    for (int fi = 0; fi < f; ++fi)
      for (int y = 0; y < ho; ++y)
        for (int xx = 0; xx < wo; ++xx) {
          double acc = b[size_t(fi)];
          for (int ci = 0; ci < c; ++ci)
            for (int i = 0; i < ksz; ++i)
              for (int j = 0; j < ksz; ++j) {
                const int sy = y + i - pad, sx = xx + j - pad;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                acc += x[((size_t(ni) * c + ci) * h + sy) * w + sx] *
                       k[((size_t(fi) * c + ci) * ksz + i) * ksz + j];
              }
          out[((size_t(ni) * f + fi) * ho + y) * wo + xx] = acc;
        }
  return out;
}

// sig, when given, collects the relu sign pattern and pool argmax pattern of
// a forward pass. Two passes with equal signatures share one smooth piece of
// the piecewise-smooth loss, so central differences between them are valid.
inline std::vector<double> relu(std::vector<double> x,
                                std::vector<int>* sig = nullptr) {
  for (double& v : x) {
    if (sig) sig->push_back(v > 0.0 ? 1 : 0);
    v = v > 0.0 ? v : 0.0;
  }
  return x;
}

inline std::vector<double> maxpool2(const std::vector<double>& x, int n, int c,
                                    int h, int w,
                                    std::vector<int>* sig = nullptr) {
  const int ho = h / 2, wo = w / 2;
  std::vector<double> out(size_t(n) * c * ho * wo);
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < ho; ++y)
        for (int xx = 0; xx < wo; ++xx) {
          double best = -1e300;
          int arg = 0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
              const double v =
                  x[((size_t(ni) * c + ci) * h + 2 * y + i) * w + 2 * xx + j];
              if (v > best) {
                best = v;
                arg = 2 * i + j;
              }
            }
          if (sig) sig->push_back(arg);
          out[((size_t(ni) * c + ci) * ho + y) * wo + xx] = best;
        }
  return out;
}

inline std::vector<double> upsample2(const std::vector<double>& x, int n,
                                     int c, int h, int w) {
  std::vector<double> out(size_t(n) * c * 4 * h * w);
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < 2 * h; ++y)
        for (int xx = 0; xx < 2 * w; ++xx)
          out[((size_t(ni) * c + ci) * 2 * h + y) * 2 * w + xx] =
              x[((size_t(ni) * c + ci) * h + y / 2) * w + xx / 2];
  return out;
}

inline std::vector<double> concat(const std::vector<double>& a, int ca,
                                  const std::vector<double>& b, int cb, int n,
                                  int h, int w) {
  std::vector<double> out(size_t(n) * (ca + cb) * h * w);
  const size_t plane = size_t(h) * w;
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < ca; ++ci)
      std::copy_n(a.begin() + (size_t(ni) * ca + ci) * plane, plane,
                  out.begin() + (size_t(ni) * (ca + cb) + ci) * plane);
    for (int ci = 0; ci < cb; ++ci)
      std::copy_n(b.begin() + (size_t(ni) * cb + ci) * plane, plane,
                  out.begin() + (size_t(ni) * (ca + cb) + ca + ci) * plane);
  }
  return out;
}

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / double(a.size());
}

// Parameter tensors widened to doubles, keyed by name.
struct RefParams {
  dub::UnetDescriptor desc;
  std::map<std::string, std::vector<double>> t;
};

inline RefParams to_ref(const dub::ModelParams& p) {
  RefParams r;
  r.desc = p.desc;
  for (const auto& [name, tensor] : p.tensors)
    r.t[name] = std::vector<double>(tensor.values().begin(),
                                    tensor.values().end());
  return r;
}

// Mirrors the production architecture: enc1, enc2, pool, bott, upsample,
// concat(up, skip), dec1, out. sig, when given, collects the activation
// signature of the pass (see relu above).
inline std::vector<double> forward_net(const RefParams& p,
                                       const std::vector<double>& x, int n,
                                       int h, int w,
                                       std::vector<int>* sig = nullptr) {
  const int c = p.desc.channels, wd = p.desc.width;
  auto e1 = relu(conv2d(x, n, c, h, w, p.t.at("enc1.w"), wd, 3,
                        p.t.at("enc1.b"), 1),
                 sig);
  auto e2 = relu(conv2d(e1, n, wd, h, w, p.t.at("enc2.w"), wd, 3,
                        p.t.at("enc2.b"), 1),
                 sig);
  auto pl = maxpool2(e2, n, wd, h, w, sig);
  auto bt = relu(conv2d(pl, n, wd, h / 2, w / 2, p.t.at("bott.w"), 2 * wd, 3,
                        p.t.at("bott.b"), 1),
                 sig);
  auto up = upsample2(bt, n, 2 * wd, h / 2, w / 2);
  auto cat = concat(up, 2 * wd, e2, wd, n, h, w);
  auto d1 = relu(conv2d(cat, n, 3 * wd, h, w, p.t.at("dec1.w"), wd, 3,
                        p.t.at("dec1.b"), 1),
                 sig);
  return conv2d(d1, n, wd, h, w, p.t.at("out.w"), c, 3, p.t.at("out.b"), 1);
}

// Weighted scatter with denominators recomputed from the plan, all double.
inline std::vector<double> aggregate(const dub::MatchPlan& plan,
                                     const std::vector<double>& stacks) {
  const int pp = plan.config.patch, kk = plan.config.group_size;
  std::vector<double> num(size_t(plan.image_h) * plan.image_w, 0.0);
  std::vector<double> den(size_t(plan.image_h) * plan.image_w, 0.0);
  for (int g = 0; g < plan.num_groups; ++g)
    for (int k = 0; k < kk; ++k) {
      const int oy = plan.coord_y[size_t(g) * kk + k];
      const int ox = plan.coord_x[size_t(g) * kk + k];
      const double wgt = plan.weight[size_t(g)];
      for (int i = 0; i < pp; ++i)
        for (int j = 0; j < pp; ++j) {
          const size_t pix = size_t(oy + i) * plan.image_w + ox + j;
          num[pix] +=
              wgt * stacks[((size_t(g) * kk + k) * pp + i) * pp + j];
          den[pix] += wgt;
        }
    }
  for (size_t i = 0; i < num.size(); ++i) num[i] /= den[i];
  return num;
}

}  // namespace oracle
