#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

// Minimal define-by-run reverse-mode autodiff over dense float32 tensors.
// A Tape records backward closures while it is installed via TapeScope; ops
// record only when some input requires grad. Tapes and the tensors they touch
// belong to one logical thread.

namespace dub::ad {

struct TensorImpl {
  std::vector<int> shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until a backward pass needs it
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, float value,
                     bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<float> data,
                     bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  int rank() const { return int(impl_->shape.size()); }
  size_t numel() const { return impl_->data.size(); }
  bool requires_grad() const { return impl_->requires_grad; }

  float* data() { return impl_->data.data(); }
  const float* data() const { return impl_->data.data(); }
  std::vector<float>& values() { return impl_->data; }
  const std::vector<float>& values() const { return impl_->data; }

  // Allocates (zero-filled) grad storage on demand.
  float* ensure_grad();
  bool has_grad() const { return !impl_->grad.empty(); }
  const std::vector<float>& grad() const { return impl_->grad; }
  void zero_grad();

  float item() const;  // scalar tensors only

  TensorImpl* impl() const { return impl_.get(); }
  std::shared_ptr<TensorImpl> shared_impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

class Tape {
 public:
  // Appends a backward closure; nodes run in reverse order of recording.
  void record(std::function<void()> backward_fn);

  // Seeds d(loss)/d(loss) = seed and runs all closures in reverse. loss must
  // be scalar. A tape is good for one backward pass.
  void backward(const Tensor& loss, float seed = 1.0f);

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

// Installs a tape as the active recording target for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// ---- Operations ------------------------------------------------------------

// Cross-correlation: input [N,C,H,W] * kernel [F,C,k,k] + bias [F], k odd.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int padding);

Tensor relu(const Tensor& x);

// 2x2 non-overlapping max; H and W must be even. Gradient goes to the first
// (row-major) argmax cell of each window.
Tensor maxpool2(const Tensor& x);

// Each cell replicated into a 2x2 block.
Tensor upsample2_nearest(const Tensor& x);

// [N,C1,H,W] ++ [N,C2,H,W] -> [N,C1+C2,H,W].
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Inverse of concat_channels at channel index c_front.
std::pair<Tensor, Tensor> split_channels(const Tensor& x, int c_front);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& x, float c);
Tensor sum(const Tensor& x);  // scalar

// Mean over all elements of (pred - target)^2.
Tensor mse(const Tensor& pred, const Tensor& target);

std::string shape_str(const std::vector<int>& shape);

}  // namespace dub::ad
