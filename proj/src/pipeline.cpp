#include "dub/pipeline.hpp"

#include <stdexcept>

#include "dub/aggregation.hpp"

namespace dub {

Method parse_method(const std::string& name) {
  if (name == "noisy") return Method::Noisy;
  if (name == "bm3d-classic") return Method::Bm3dClassic;
  if (name == "du-bm3d") return Method::DuBm3d;
  if (name == "unet-image") return Method::UnetImage;
  throw std::invalid_argument(
      "unknown method '" + name +
      "' (expected noisy, bm3d-classic, du-bm3d, or unet-image)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Noisy: return "noisy";
    case Method::Bm3dClassic: return "bm3d-classic";
    case Method::DuBm3d: return "du-bm3d";
    case Method::UnetImage: return "unet-image";
  }
  throw std::invalid_argument("bad method enum");
}

Image bm3d_classic(const Image& noisy, const MatchConfig& mcfg, double sigma,
                   double lambda_thr) {
  ClassicConfig cfg;
  cfg.sigma = sigma > 0.0 ? sigma : estimate_sigma_mad(noisy);
  cfg.lambda_thr = lambda_thr;
  const int k = mcfg.group_size, p = mcfg.patch;

  MatchPlan plan1 = plan_matches(noisy, mcfg);
  StackBatch stacks = gather_stacks(noisy, plan1);
  StackBatch filtered = stacks;
  for (int g = 0; g < stacks.groups; ++g)
    plan1.weight[g] =
        hard_threshold_filter(stacks.group(g), filtered.group(g), k, p, cfg);
  Image pilot = Aggregator(plan1).forward(filtered);

  MatchPlan plan2 = plan_matches(pilot, mcfg);
  StackBatch noisy2 = gather_stacks(noisy, plan2);
  StackBatch pilot2 = gather_stacks(pilot, plan2);
  StackBatch out2 = noisy2;
  for (int g = 0; g < noisy2.groups; ++g)
    plan2.weight[g] = wiener_filter(noisy2.group(g), pilot2.group(g),
                                    out2.group(g), k, p, cfg);
  Image out = Aggregator(plan2).forward(out2);
  out.range_min = noisy.range_min;
  out.range_max = noisy.range_max;
  return out;
}

Image du_bm3d_forward(const Image& noisy, const ModelParams& params,
                      const MatchConfig& mcfg) {
  if (params.desc.channels != mcfg.group_size)
    throw std::invalid_argument(
        "network channels (" + std::to_string(params.desc.channels) +
        ") do not match the group size (" + std::to_string(mcfg.group_size) +
        ")");
  MatchPlan plan = plan_matches(noisy, mcfg);
  StackBatch stacks = gather_stacks(noisy, plan);
  StackBatch denoised = forward_stack(params, stacks);
  Image out = Aggregator(plan).forward(denoised);
  out.range_min = noisy.range_min;
  out.range_max = noisy.range_max;
  return out;
}

Image denoise_pipeline(const Image& noisy, Method method,
                       const ModelParams* params, const MatchConfig& mcfg,
                       double sigma) {
  Image out;
  switch (method) {
    case Method::Noisy:
      out = noisy;
      break;
    case Method::Bm3dClassic:
      out = bm3d_classic(noisy, mcfg, sigma);
      break;
    case Method::DuBm3d:
      if (params == nullptr)
        throw std::invalid_argument("du-bm3d needs a trained checkpoint");
      out = du_bm3d_forward(noisy, *params, mcfg);
      break;
    case Method::UnetImage:
      if (params == nullptr)
        throw std::invalid_argument("unet-image needs a trained checkpoint");
      out = forward_image(*params, noisy);
      break;
  }
  require_finite(out, "denoised output");
  return out;
}

}  // namespace dub
