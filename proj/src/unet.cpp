#include "dub/unet.hpp"

#include <cmath>
#include <stdexcept>

#include "dub/rng.hpp"

namespace dub {

using ad::Tensor;

ad::Tensor& ModelParams::find(const std::string& name) {
  for (auto& [n, t] : tensors)
    if (n == name) return t;
  throw std::invalid_argument("no parameter named " + name);
}

const ad::Tensor& ModelParams::find(const std::string& name) const {
  return const_cast<ModelParams*>(this)->find(name);
}

namespace {

void validate_descriptor(const UnetDescriptor& d) {
  if (d.channels < 1 || d.width < 1 || d.patch < 2 || d.patch % 2 != 0)
    throw std::invalid_argument("invalid network descriptor");
}

struct ConvSpec {
  const char* name;
  int out_ch, in_ch;
};

std::vector<ConvSpec> conv_specs(const UnetDescriptor& d) {
  const int c = d.channels, w = d.width;
  return {{"enc1", w, c},
          {"enc2", w, w},
          {"bott", 2 * w, w},
          {"dec1", w, 3 * w},
          {"out", c, w}};
}

}  // namespace

ModelParams init_params(const UnetDescriptor& desc, uint64_t seed) {
  validate_descriptor(desc);
  ModelParams p;
  p.desc = desc;
  Rng rng(seed);
  for (const ConvSpec& s : conv_specs(desc)) {
    Tensor w = Tensor::zeros({s.out_ch, s.in_ch, 3, 3}, true);
    const double fan_in = double(s.in_ch) * 9, fan_out = double(s.out_ch) * 9;
    const double b = std::sqrt(6.0 / (fan_in + fan_out));
    for (size_t i = 0; i < w.numel(); ++i)
      w.data()[i] = float(rng.uniform(-b, b));
    p.tensors.emplace_back(std::string(s.name) + ".w", w);
    p.tensors.emplace_back(std::string(s.name) + ".b",
                           Tensor::zeros({s.out_ch}, true));
  }
  return p;
}

size_t param_count(const UnetDescriptor& desc) {
  validate_descriptor(desc);
  size_t n = 0;
  for (const ConvSpec& s : conv_specs(desc))
    n += size_t(s.out_ch) * s.in_ch * 9 + size_t(s.out_ch);
  return n;
}

Tensor forward_net(const ModelParams& params, const Tensor& input) {
  if (!input.defined() || input.rank() != 4)
    throw std::invalid_argument("network input must be [N,C,H,W]");
  if (input.shape()[1] != params.desc.channels)
    throw std::invalid_argument(
        "input has " + std::to_string(input.shape()[1]) +
        " channels, network expects " + std::to_string(params.desc.channels));
  if (input.shape()[2] % 2 != 0 || input.shape()[3] % 2 != 0 ||
      input.shape()[2] < 2 || input.shape()[3] < 2)
    throw std::invalid_argument("network input extents must be even and >= 2");

  auto conv = [&](const Tensor& x, const char* name) {
    return ad::conv2d(x, params.find(std::string(name) + ".w"),
                      params.find(std::string(name) + ".b"), 1);
  };
  Tensor e1 = ad::relu(conv(input, "enc1"));
  Tensor e2 = ad::relu(conv(e1, "enc2"));
  Tensor down = ad::maxpool2(e2);
  Tensor bott = ad::relu(conv(down, "bott"));
  Tensor up = ad::upsample2_nearest(bott);
  Tensor cat = ad::concat_channels(up, e2);
  Tensor d1 = ad::relu(conv(cat, "dec1"));
  return conv(d1, "out");
}

Tensor forward_stack_t(const ModelParams& params, const Tensor& stacks) {
  if (!stacks.defined() || stacks.rank() != 4)
    throw std::invalid_argument("stack input must be [G,K,P,P]");
  return forward_net(params, stacks);
}

StackBatch forward_stack(const ModelParams& params, const StackBatch& stacks) {
  if (stacks.k != params.desc.channels)
    throw std::invalid_argument("stack K does not match the network channels");
  Tensor in = Tensor::from({stacks.groups, stacks.k, stacks.patch, stacks.patch},
                           stacks.data);
  Tensor out = forward_net(params, in);
  StackBatch result = stacks;
  result.data.assign(out.data(), out.data() + out.numel());
  return result;
}

Image forward_image(const ModelParams& params, const Image& img) {
  if (params.desc.channels != 1)
    throw std::invalid_argument(
        "image mode requires a single-channel network descriptor");
  if (img.height < 2 || img.width < 2)
    throw std::invalid_argument("image mode needs at least 2x2 input");
  const int h = img.height, w = img.width;
  const int h2 = h + (h % 2), w2 = w + (w % 2);

  // Reflect-pad the last row/column when an extent is odd.
  std::vector<float> padded(size_t(h2) * w2);
  for (int y = 0; y < h2; ++y) {
    const int sy = y < h ? y : h - 2;
    for (int x = 0; x < w2; ++x) {
      const int sx = x < w ? x : w - 2;
      padded[size_t(y) * w2 + x] = img.at(sy, sx);
    }
  }

  Tensor in = Tensor::from({1, 1, h2, w2}, std::move(padded));
  Tensor out = forward_net(params, in);

  Image result(h, w);
  result.range_min = img.range_min;
  result.range_max = img.range_max;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      result.at(y, x) = out.data()[size_t(y) * w2 + x];
  return result;
}

}  // namespace dub
