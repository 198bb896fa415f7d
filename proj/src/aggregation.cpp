#include "dub/aggregation.hpp"

#include <stdexcept>
#include <string>

namespace dub {

namespace {

void check_stack_shape(const MatchPlan& plan, int groups, int k, int patch) {
  if (groups != plan.num_groups || k != plan.config.group_size ||
      patch != plan.config.patch)
    throw std::invalid_argument(
        "stack batch [" + std::to_string(groups) + "," + std::to_string(k) +
        "," + std::to_string(patch) + "," + std::to_string(patch) +
        "] does not match the plan (" + std::to_string(plan.num_groups) +
        " groups, K=" + std::to_string(plan.config.group_size) +
        ", P=" + std::to_string(plan.config.patch) + ")");
}

}  // namespace

Aggregator::Aggregator(const MatchPlan& plan) : plan_(plan) {
  const int p = plan_.config.patch;
  denom_.assign(size_t(plan_.image_h) * plan_.image_w, 0.0);
  for (int g = 0; g < plan_.num_groups; ++g) {
    const double w = plan_.weight[g];
    if (!(w > 0.0))
      throw std::invalid_argument("group " + std::to_string(g) +
                                  " has non-positive weight");
    for (int s = 0; s < plan_.config.group_size; ++s) {
      const size_t slot = size_t(g) * plan_.config.group_size + s;
      const int y = plan_.coord_y[slot], x = plan_.coord_x[slot];
      for (int i = 0; i < p; ++i) {
        double* row = &denom_[size_t(y + i) * plan_.image_w + x];
        for (int j = 0; j < p; ++j) row[j] += w;
      }
    }
  }
  for (size_t idx = 0; idx < denom_.size(); ++idx)
    if (denom_[idx] == 0.0)
      throw std::invalid_argument(
          "plan leaves pixel (" + std::to_string(idx / plan_.image_w) + "," +
          std::to_string(idx % plan_.image_w) + ") uncovered");
}

Image Aggregator::forward(const StackBatch& stacks) const {
  check_stack_shape(plan_, stacks.groups, stacks.k, stacks.patch);
  const int p = plan_.config.patch, k = plan_.config.group_size;
  std::vector<double> num(denom_.size(), 0.0);
  const float* v = stacks.data.data();
  for (int g = 0; g < plan_.num_groups; ++g) {
    const double w = plan_.weight[g];
    for (int s = 0; s < k; ++s) {
      const size_t slot = size_t(g) * k + s;
      const int y = plan_.coord_y[slot], x = plan_.coord_x[slot];
      for (int i = 0; i < p; ++i) {
        double* row = &num[size_t(y + i) * plan_.image_w + x];
        const float* src = v + slot * p * p + size_t(i) * p;
        for (int j = 0; j < p; ++j) row[j] += w * src[j];
      }
    }
  }
  Image out(plan_.image_h, plan_.image_w);
  for (size_t idx = 0; idx < num.size(); ++idx)
    out.pixels[idx] = float(num[idx] / denom_[idx]);
  return out;
}

StackBatch Aggregator::adjoint(const Image& grad_image) const {
  if (grad_image.height != plan_.image_h || grad_image.width != plan_.image_w)
    throw std::invalid_argument("gradient image shape does not match the plan");
  const int p = plan_.config.patch, k = plan_.config.group_size;
  StackBatch out;
  out.groups = plan_.num_groups;
  out.k = k;
  out.patch = p;
  out.plan = &plan_;
  out.data.resize(size_t(plan_.num_groups) * k * p * p);
  float* v = out.data.data();
  for (int g = 0; g < plan_.num_groups; ++g) {
    const double w = plan_.weight[g];
    for (int s = 0; s < k; ++s) {
      const size_t slot = size_t(g) * k + s;
      const int y = plan_.coord_y[slot], x = plan_.coord_x[slot];
      for (int i = 0; i < p; ++i) {
        const size_t base = size_t(y + i) * plan_.image_w + x;
        float* dst = v + slot * p * p + size_t(i) * p;
        for (int j = 0; j < p; ++j)
          dst[j] = float(w * double(grad_image.pixels[base + j]) /
                         denom_[base + j]);
      }
    }
  }
  return out;
}

ad::Tensor aggregate_op(const ad::Tensor& stacks,
                        std::shared_ptr<const Aggregator> agg) {
  if (!stacks.defined() || stacks.rank() != 4)
    throw std::invalid_argument("aggregate_op expects a [G,K,P,P] tensor");
  if (stacks.shape()[2] != stacks.shape()[3])
    throw std::invalid_argument("aggregate_op expects square patches");
  const MatchPlan& plan = agg->plan();
  check_stack_shape(plan, stacks.shape()[0], stacks.shape()[1],
                    stacks.shape()[2]);

  StackBatch batch;
  batch.groups = stacks.shape()[0];
  batch.k = stacks.shape()[1];
  batch.patch = stacks.shape()[2];
  batch.plan = &plan;
  batch.data.assign(stacks.data(), stacks.data() + stacks.numel());
  Image img = agg->forward(batch);

  ad::Tensor out = ad::Tensor::from({img.height, img.width},
                                    std::move(img.pixels));
  if (stacks.requires_grad() && ad::active_tape() != nullptr) {
    out.impl()->requires_grad = true;
    auto s_impl = stacks.shared_impl();
    auto o_impl = out.shared_impl();
    ad::active_tape()->record([s_impl, o_impl, agg]() {
      if (o_impl->grad.empty()) return;
      Image g(o_impl->shape[0], o_impl->shape[1]);
      g.pixels = o_impl->grad;
      StackBatch gs = agg->adjoint(g);
      if (s_impl->grad.empty()) s_impl->grad.assign(s_impl->data.size(), 0.0f);
      for (size_t i = 0; i < gs.data.size(); ++i) s_impl->grad[i] += gs.data[i];
    });
  }
  return out;
}

}  // namespace dub
