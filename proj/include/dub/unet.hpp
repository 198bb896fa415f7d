#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dub/block_matching.hpp"
#include "dub/image.hpp"
#include "dub/tensor.hpp"

namespace dub {

// Compact two-level encoder-decoder with one skip connection:
//   conv3x3(C -> W) + relu
//   conv3x3(W -> W) + relu      -> skip
//   maxpool2
//   conv3x3(W -> 2W) + relu
//   upsample2
//   concat(2W, skip W)
//   conv3x3(3W -> W) + relu
//   conv3x3(W -> C)             (linear; predicts the clean signal directly)
// channels C is the patch-group size K in stack mode and 1 in image mode.
struct UnetDescriptor {
  int channels = 8;
  int width = 16;
  int patch = 8;  // nominal spatial extent in stack mode

  bool operator==(const UnetDescriptor&) const = default;
};

// Named parameter tensors in fixed order (enc1, enc2, bott, dec1, out; each
// .w then .b). The order is the serialization and optimizer traversal order.
struct ModelParams {
  UnetDescriptor desc;
  std::vector<std::pair<std::string, ad::Tensor>> tensors;

  ad::Tensor& find(const std::string& name);
  const ad::Tensor& find(const std::string& name) const;
};

// Kernels ~ uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)), biases 0.
ModelParams init_params(const UnetDescriptor& desc, uint64_t seed);

size_t param_count(const UnetDescriptor& desc);

// Core forward on [N,C,H,W]; H and W must be even and >= 2.
ad::Tensor forward_net(const ModelParams& params, const ad::Tensor& input);

// Stack mode: groups map to the batch axis, patches-in-group to channels.
ad::Tensor forward_stack_t(const ModelParams& params, const ad::Tensor& stacks);
StackBatch forward_stack(const ModelParams& params, const StackBatch& stacks);

// Image mode (channels must be 1). Odd extents are reflect-padded to even
// and cropped back.
Image forward_image(const ModelParams& params, const Image& img);

}  // namespace dub
