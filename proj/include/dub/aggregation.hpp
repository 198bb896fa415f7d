#pragma once

#include <memory>
#include <vector>

#include "dub/block_matching.hpp"
#include "dub/tensor.hpp"

namespace dub {

// Weighted scatter of patch groups back to image coordinates, and the exact
// adjoint of that linear map with the per-pixel denominators held fixed.
// The plan (including its group weights) is copied at construction; the
// denominator field is computed once and reused by forward and adjoint.
class Aggregator {
 public:
  explicit Aggregator(const MatchPlan& plan);

  const MatchPlan& plan() const { return plan_; }
  const std::vector<double>& denominator() const { return denom_; }

  // output[p] = sum_slots(weight_g * value) / sum_slots(weight_g).
  Image forward(const StackBatch& stacks) const;

  // Transpose map: slot (g,k,i,j) receives
  // weight_g * grad_image[p] / denominator[p] at its image pixel.
  StackBatch adjoint(const Image& grad_image) const;

 private:
  MatchPlan plan_;
  std::vector<double> denom_;  // image_h * image_w, all > 0
};

// Differentiable aggregation: stacks tensor [G,K,P,P] -> image tensor [H,W].
// The backward rule applies the adjoint. The aggregator is captured shared
// so the tape node stays valid for the backward pass.
ad::Tensor aggregate_op(const ad::Tensor& stacks,
                        std::shared_ptr<const Aggregator> agg);

}  // namespace dub
