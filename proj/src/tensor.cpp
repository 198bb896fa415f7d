#include "dub/tensor.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>

namespace dub::ad {

namespace {

thread_local Tape* g_active_tape = nullptr;

size_t checked_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int e : shape) {
    if (e < 0) throw std::invalid_argument("tensor extent must be >= 0, got " + shape_str(shape));
    n *= size_t(e);
  }
  return n;
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Grad pointer for accumulation, allocating on first touch.
float* grad_ptr(TensorImpl* t) {
  if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0f);
  return t->grad.data();
}

bool grad_present(const TensorImpl* t) { return !t->grad.empty(); }

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  size_t n = checked_numel(shape);
  t.impl_->shape = std::move(shape);
  t.impl_->data.assign(n, 0.0f);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(std::vector<int> shape, float value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<float> data,
                    bool requires_grad) {
  size_t n = checked_numel(shape);
  if (data.size() != n)
    throw std::invalid_argument("tensor data size " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

float* Tensor::ensure_grad() { return grad_ptr(impl_.get()); }

void Tensor::zero_grad() {
  if (!impl_->grad.empty())
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

float Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("item() requires a scalar tensor, shape is " +
                                shape_str(impl_->shape));
  return impl_->data[0];
}

void Tape::record(std::function<void()> backward_fn) {
  nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor& loss, float seed) {
  if (!loss.defined() || loss.numel() != 1)
    throw std::invalid_argument("backward() requires a defined scalar loss");
  loss.impl()->grad.assign(1, 0.0f);
  loss.impl()->grad[0] += seed;
  for (size_t i = nodes_.size(); i-- > 0;) nodes_[i]();
}

TapeScope::TapeScope(Tape& tape) {
  previous_ = g_active_tape;
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

namespace {

// Marks out as grad-carrying and records fn when recording is active and some
// input needs gradients. Returns true when the node was recorded.
bool maybe_record(std::initializer_list<const Tensor*> inputs, Tensor& out,
                  std::function<void()> fn) {
  bool needs = false;
  for (const Tensor* t : inputs) needs = needs || t->requires_grad();
  if (!needs || active_tape() == nullptr) return false;
  out.impl()->requires_grad = true;
  active_tape()->record(std::move(fn));
  return true;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                    shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
}

void check_nchw(const Tensor& t, const char* op) {
  check(t.defined() && t.rank() == 4,
        std::string(op) + ": expected rank-4 [N,C,H,W] tensor");
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int padding) {
  check_nchw(input, "conv2d");
  check(kernel.rank() == 4, "conv2d: kernel must be [F,C,k,k]");
  const int n_batch = input.shape()[0], c_in = input.shape()[1];
  const int h = input.shape()[2], w = input.shape()[3];
  const int f_out = kernel.shape()[0], k = kernel.shape()[2];
  check(kernel.shape()[1] == c_in,
        "conv2d: kernel channels " + std::to_string(kernel.shape()[1]) +
            " do not match input channels " + std::to_string(c_in));
  check(kernel.shape()[3] == k && k % 2 == 1 && k >= 1,
        "conv2d: kernel must be square with odd side");
  check(bias.rank() == 1 && bias.shape()[0] == f_out,
        "conv2d: bias must be [F]");
  check(padding >= 0, "conv2d: padding must be >= 0");
  const int h2 = h + 2 * padding - k + 1;
  const int w2 = w + 2 * padding - k + 1;
  check(h2 >= 1 && w2 >= 1, "conv2d: output would be empty");

  Tensor out = Tensor::zeros({n_batch, f_out, h2, w2});
  const float* in = input.data();
  const float* wt = kernel.data();
  const float* bi = bias.data();
  float* o = out.data();
  const size_t in_plane = size_t(h) * w, out_plane = size_t(h2) * w2;

  for (int n = 0; n < n_batch; ++n) {
    const float* in_n = in + size_t(n) * c_in * in_plane;
    for (int f = 0; f < f_out; ++f) {
      float* o_plane = o + (size_t(n) * f_out + f) * out_plane;
      std::fill(o_plane, o_plane + out_plane, bi[f]);
      for (int c = 0; c < c_in; ++c) {
        const float* in_c = in_n + size_t(c) * in_plane;
        const float* w_fc = wt + ((size_t(f) * c_in + c)) * k * k;
        for (int i = 0; i < k; ++i) {
          const int y_lo = std::max(0, padding - i);
          const int y_hi = std::min(h2, h + padding - i);
          for (int j = 0; j < k; ++j) {
            const float wv = w_fc[i * k + j];
            if (wv == 0.0f) continue;
            const int x_lo = std::max(0, padding - j);
            const int x_hi = std::min(w2, w + padding - j);
            for (int y = y_lo; y < y_hi; ++y) {
              const float* in_row = in_c + size_t(y + i - padding) * w + (j - padding);
              float* o_row = o_plane + size_t(y) * w2;
              for (int x = x_lo; x < x_hi; ++x) o_row[x] += wv * in_row[x];
            }
          }
        }
      }
    }
  }

  auto in_impl = input.shared_impl();
  auto w_impl = kernel.shared_impl();
  auto b_impl = bias.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&input, &kernel, &bias}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    const float* in_d = in_impl->data.data();
    const float* wt_d = w_impl->data.data();
    float* g_in = in_impl->requires_grad ? grad_ptr(in_impl.get()) : nullptr;
    float* g_wt = w_impl->requires_grad ? grad_ptr(w_impl.get()) : nullptr;
    float* g_bi = b_impl->requires_grad ? grad_ptr(b_impl.get()) : nullptr;
    for (int n = 0; n < n_batch; ++n) {
      for (int f = 0; f < f_out; ++f) {
        const float* g_plane = g + (size_t(n) * f_out + f) * out_plane;
        if (g_bi) {
          double s = 0.0;
          for (size_t idx = 0; idx < out_plane; ++idx) s += g_plane[idx];
          g_bi[f] += float(s);
        }
        for (int c = 0; c < c_in; ++c) {
          const size_t c_off = (size_t(n) * c_in + c) * in_plane;
          const float* in_c = in_d + c_off;
          const size_t w_off = (size_t(f) * c_in + c) * k * k;
          const float* w_fc = wt_d + w_off;
          for (int i = 0; i < k; ++i) {
            const int y_lo = std::max(0, padding - i);
            const int y_hi = std::min(h2, h + padding - i);
            for (int j = 0; j < k; ++j) {
              const int x_lo = std::max(0, padding - j);
              const int x_hi = std::min(w2, w + padding - j);
              double dw = 0.0;
              const float wv = w_fc[i * k + j];
              for (int y = y_lo; y < y_hi; ++y) {
                const float* in_row = in_c + size_t(y + i - padding) * w + (j - padding);
                const float* g_row = g_plane + size_t(y) * w2;
                if (g_wt)
                  for (int x = x_lo; x < x_hi; ++x) dw += double(in_row[x]) * g_row[x];
                if (g_in) {
                  float* gi_row = g_in + c_off + size_t(y + i - padding) * w + (j - padding);
                  for (int x = x_lo; x < x_hi; ++x) gi_row[x] += wv * g_row[x];
                }
              }
              if (g_wt) g_wt[w_off + i * k + j] += float(dw);
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor relu(const Tensor& x) {
  check(x.defined(), "relu: undefined tensor");
  Tensor out = Tensor::zeros(x.shape());
  const float* in = x.data();
  float* o = out.data();
  const size_t n = x.numel();
  for (size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0f ? in[i] : 0.0f;

  auto x_impl = x.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&x}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    const float* in_d = x_impl->data.data();
    float* gx = grad_ptr(x_impl.get());
    for (size_t i = 0; i < x_impl->data.size(); ++i)
      if (in_d[i] > 0.0f) gx[i] += g[i];
  });
  return out;
}

Tensor maxpool2(const Tensor& x) {
  check_nchw(x, "maxpool2");
  const int n_batch = x.shape()[0], c = x.shape()[1];
  const int h = x.shape()[2], w = x.shape()[3];
  check(h % 2 == 0 && w % 2 == 0, "maxpool2: H and W must be even, got " +
                                      shape_str(x.shape()));
  const int h2 = h / 2, w2 = w / 2;
  Tensor out = Tensor::zeros({n_batch, c, h2, w2});
  auto argmax = std::make_shared<std::vector<size_t>>(out.numel());
  const float* in = x.data();
  float* o = out.data();
  size_t oi = 0;
  for (int n = 0; n < n_batch; ++n)
    for (int ch = 0; ch < c; ++ch) {
      const float* plane = in + (size_t(n) * c + ch) * h * w;
      const size_t base = (size_t(n) * c + ch) * h * w;
      for (int y = 0; y < h2; ++y)
        for (int x2 = 0; x2 < w2; ++x2, ++oi) {
          // Row-major scan keeps the first occurrence on ties.
          size_t best = size_t(2 * y) * w + 2 * x2;
          float bv = plane[best];
          const size_t cand[3] = {best + 1, best + w, best + w + 1};
          for (size_t k = 0; k < 3; ++k)
            if (plane[cand[k]] > bv) {
              bv = plane[cand[k]];
              best = cand[k];
            }
          o[oi] = bv;
          (*argmax)[oi] = base + best;
        }
    }

  auto x_impl = x.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&x}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    float* gx = grad_ptr(x_impl.get());
    for (size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += g[i];
  });
  return out;
}

Tensor upsample2_nearest(const Tensor& x) {
  check_nchw(x, "upsample2_nearest");
  const int n_batch = x.shape()[0], c = x.shape()[1];
  const int h = x.shape()[2], w = x.shape()[3];
  Tensor out = Tensor::zeros({n_batch, c, 2 * h, 2 * w});
  const float* in = x.data();
  float* o = out.data();
  for (int p = 0; p < n_batch * c; ++p) {
    const float* ip = in + size_t(p) * h * w;
    float* op = o + size_t(p) * 4 * h * w;
    for (int y = 0; y < h; ++y)
      for (int x2 = 0; x2 < w; ++x2) {
        const float v = ip[size_t(y) * w + x2];
        float* row0 = op + size_t(2 * y) * 2 * w + 2 * x2;
        row0[0] = v;
        row0[1] = v;
        row0[2 * w] = v;
        row0[2 * w + 1] = v;
      }
  }

  auto x_impl = x.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&x}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    float* gx = grad_ptr(x_impl.get());
    for (int p = 0; p < n_batch * c; ++p) {
      const float* gp = g + size_t(p) * 4 * h * w;
      float* gxp = gx + size_t(p) * h * w;
      for (int y = 0; y < h; ++y)
        for (int x2 = 0; x2 < w; ++x2) {
          const float* row0 = gp + size_t(2 * y) * 2 * w + 2 * x2;
          gxp[size_t(y) * w + x2] +=
              row0[0] + row0[1] + row0[2 * w] + row0[2 * w + 1];
        }
    }
  });
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  check_nchw(a, "concat_channels");
  check_nchw(b, "concat_channels");
  check(a.shape()[0] == b.shape()[0] && a.shape()[2] == b.shape()[2] &&
            a.shape()[3] == b.shape()[3],
        "concat_channels: N/H/W mismatch " + shape_str(a.shape()) + " vs " +
            shape_str(b.shape()));
  const int n_batch = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  const int h = a.shape()[2], w = a.shape()[3];
  const size_t plane = size_t(h) * w;
  Tensor out = Tensor::zeros({n_batch, ca + cb, h, w});
  float* o = out.data();
  for (int n = 0; n < n_batch; ++n) {
    std::copy_n(a.data() + size_t(n) * ca * plane, size_t(ca) * plane,
                o + size_t(n) * (ca + cb) * plane);
    std::copy_n(b.data() + size_t(n) * cb * plane, size_t(cb) * plane,
                o + size_t(n) * (ca + cb) * plane + size_t(ca) * plane);
  }

  auto a_impl = a.shared_impl();
  auto b_impl = b.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&a, &b}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    float* ga = a_impl->requires_grad ? grad_ptr(a_impl.get()) : nullptr;
    float* gb = b_impl->requires_grad ? grad_ptr(b_impl.get()) : nullptr;
    for (int n = 0; n < n_batch; ++n) {
      const float* gn = g + size_t(n) * (ca + cb) * plane;
      if (ga) {
        float* dst = ga + size_t(n) * ca * plane;
        for (size_t i = 0; i < size_t(ca) * plane; ++i) dst[i] += gn[i];
      }
      if (gb) {
        float* dst = gb + size_t(n) * cb * plane;
        const float* src = gn + size_t(ca) * plane;
        for (size_t i = 0; i < size_t(cb) * plane; ++i) dst[i] += src[i];
      }
    }
  });
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, int c_front) {
  check_nchw(x, "split_channels");
  const int n_batch = x.shape()[0], c = x.shape()[1];
  const int h = x.shape()[2], w = x.shape()[3];
  check(c_front >= 1 && c_front < c,
        "split_channels: split index out of range");
  const size_t plane = size_t(h) * w;
  Tensor front = Tensor::zeros({n_batch, c_front, h, w});
  Tensor back = Tensor::zeros({n_batch, c - c_front, h, w});
  for (int n = 0; n < n_batch; ++n) {
    const float* src = x.data() + size_t(n) * c * plane;
    std::copy_n(src, size_t(c_front) * plane,
                front.data() + size_t(n) * c_front * plane);
    std::copy_n(src + size_t(c_front) * plane, size_t(c - c_front) * plane,
                back.data() + size_t(n) * (c - c_front) * plane);
  }

  auto x_impl = x.shared_impl();
  auto f_impl = front.shared_impl();
  auto b_impl = back.shared_impl();
  if (x.requires_grad() && active_tape() != nullptr) {
    front.impl()->requires_grad = true;
    back.impl()->requires_grad = true;
    active_tape()->record([=]() {
      float* gx = grad_ptr(x_impl.get());
      const int cb = c - c_front;
      for (int n = 0; n < n_batch; ++n) {
        float* dst = gx + size_t(n) * c * plane;
        if (grad_present(f_impl.get())) {
          const float* gf = f_impl->grad.data() + size_t(n) * c_front * plane;
          for (size_t i = 0; i < size_t(c_front) * plane; ++i) dst[i] += gf[i];
        }
        if (grad_present(b_impl.get())) {
          const float* gb = b_impl->grad.data() + size_t(n) * cb * plane;
          float* dst2 = dst + size_t(c_front) * plane;
          for (size_t i = 0; i < size_t(cb) * plane; ++i) dst2[i] += gb[i];
        }
      }
    });
  }
  return {front, back};
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  auto a_impl = a.shared_impl();
  auto b_impl = b.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&a, &b}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    const size_t m = out_impl->data.size();
    if (a_impl->requires_grad) {
      float* ga = grad_ptr(a_impl.get());
      for (size_t i = 0; i < m; ++i) ga[i] += g[i];
    }
    if (b_impl->requires_grad) {
      float* gb = grad_ptr(b_impl.get());
      for (size_t i = 0; i < m; ++i) gb[i] += g[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
  auto a_impl = a.shared_impl();
  auto b_impl = b.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&a, &b}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    const size_t m = out_impl->data.size();
    if (a_impl->requires_grad) {
      float* ga = grad_ptr(a_impl.get());
      for (size_t i = 0; i < m; ++i) ga[i] += g[i];
    }
    if (b_impl->requires_grad) {
      float* gb = grad_ptr(b_impl.get());
      for (size_t i = 0; i < m; ++i) gb[i] -= g[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  auto a_impl = a.shared_impl();
  auto b_impl = b.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&a, &b}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    const size_t m = out_impl->data.size();
    if (a_impl->requires_grad) {
      float* ga = grad_ptr(a_impl.get());
      for (size_t i = 0; i < m; ++i) ga[i] += g[i] * b_impl->data[i];
    }
    if (b_impl->requires_grad) {
      float* gb = grad_ptr(b_impl.get());
      for (size_t i = 0; i < m; ++i) gb[i] += g[i] * a_impl->data[i];
    }
  });
  return out;
}

Tensor scale(const Tensor& x, float c) {
  check(x.defined(), "scale: undefined tensor");
  Tensor out = Tensor::zeros(x.shape());
  const size_t n = x.numel();
  for (size_t i = 0; i < n; ++i) out.data()[i] = c * x.data()[i];
  auto x_impl = x.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&x}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float* g = out_impl->grad.data();
    float* gx = grad_ptr(x_impl.get());
    for (size_t i = 0; i < x_impl->data.size(); ++i) gx[i] += c * g[i];
  });
  return out;
}

Tensor sum(const Tensor& x) {
  check(x.defined(), "sum: undefined tensor");
  double s = 0.0;
  for (size_t i = 0; i < x.numel(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(float(s));
  auto x_impl = x.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&x}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float g = out_impl->grad[0];
    float* gx = grad_ptr(x_impl.get());
    for (size_t i = 0; i < x_impl->data.size(); ++i) gx[i] += g;
  });
  return out;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "mse");
  const size_t n = pred.numel();
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = double(pred.data()[i]) - double(target.data()[i]);
    s += d * d;
  }
  Tensor out = Tensor::scalar(float(s / double(n)));
  auto p_impl = pred.shared_impl();
  auto t_impl = target.shared_impl();
  auto out_impl = out.shared_impl();
  maybe_record({&pred, &target}, out, [=]() {
    if (!grad_present(out_impl.get())) return;
    const float g = out_impl->grad[0];
    const size_t m = p_impl->data.size();
    const float c = 2.0f * g / float(m);
    if (p_impl->requires_grad) {
      float* gp = grad_ptr(p_impl.get());
      for (size_t i = 0; i < m; ++i)
        gp[i] += c * (p_impl->data[i] - t_impl->data[i]);
    }
    if (t_impl->requires_grad) {
      float* gt = grad_ptr(t_impl.get());
      for (size_t i = 0; i < m; ++i)
        gt[i] -= c * (p_impl->data[i] - t_impl->data[i]);
    }
  });
  return out;
}

}  // namespace dub::ad
