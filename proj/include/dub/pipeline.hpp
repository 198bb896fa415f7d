#pragma once

#include <string>

#include "dub/block_matching.hpp"
#include "dub/image.hpp"
#include "dub/transforms.hpp"
#include "dub/unet.hpp"

namespace dub {

enum class Method { Noisy, Bm3dClassic, DuBm3d, UnetImage };

Method parse_method(const std::string& name);
std::string method_name(Method m);

// Two-stage collaborative filtering. sigma <= 0 selects the per-image noise
// estimate. Stage 1 hard-thresholds groups matched on the noisy image to
// form a pilot; stage 2 re-matches on the pilot and Wiener-filters the noisy
// pixels, each stage aggregating with its own group weights.
Image bm3d_classic(const Image& noisy, const MatchConfig& mcfg,
                   double sigma = -1.0, double lambda_thr = 2.7);

// Match on the noisy image, gather, run the learned group filter, aggregate
// with uniform weights.
Image du_bm3d_forward(const Image& noisy, const ModelParams& params,
                      const MatchConfig& mcfg);

// Unified entry point; params may be null for noisy/bm3d-classic. Throws
// NumericError if the output contains non-finite values.
Image denoise_pipeline(const Image& noisy, Method method,
                       const ModelParams* params, const MatchConfig& mcfg,
                       double sigma = -1.0);

}  // namespace dub
