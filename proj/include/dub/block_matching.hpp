#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dub/image.hpp"

namespace dub {

struct MatchConfig {
  int patch = 8;        // patch side P
  int stride = 4;       // reference-grid step, 1 <= stride <= patch
  int window = 12;      // search half-extent around the reference
  int group_size = 8;   // K, patches per group
  double tau = std::numeric_limits<double>::infinity();  // per-pixel mean
                                                         // squared distance cutoff
};

// Grouping geometry for one image: per reference patch, the K matched patch
// corners (reference first), their mean squared distances to the reference,
// and one aggregation weight per group.
//
// Invariants: every coordinate places a full P x P patch inside the image;
// slot 0 of each group is the reference with distance exactly 0; distances
// are non-decreasing within a group; every image pixel is covered by at
// least one patch.
struct MatchPlan {
  MatchConfig config;
  int image_h = 0;
  int image_w = 0;
  int num_groups = 0;
  std::vector<int32_t> coord_y;  // num_groups * K
  std::vector<int32_t> coord_x;  // num_groups * K
  std::vector<double> dist;      // num_groups * K
  std::vector<double> weight;    // num_groups, all 1.0 until a filter sets them
};

// Deterministic grouping. The reference grid steps by cfg.stride with the
// final row/column clamped so the last patch touches the border. Candidates
// within the search window are ranked by mean squared pixel distance
// (ties by row-major position); the reference always ranks first. Groups
// short of K (after the tau cut) are padded by repeating the reference
// immediately after slot 0, keeping distances non-decreasing.
MatchPlan plan_matches(const Image& img, const MatchConfig& cfg);

// Patch values gathered for a plan, shape [groups, K, P, P]. Holds a
// non-owning pointer to the plan that shaped it; keep the plan alive.
struct StackBatch {
  int groups = 0;
  int k = 0;
  int patch = 0;
  std::vector<float> data;
  const MatchPlan* plan = nullptr;

  size_t group_stride() const { return size_t(k) * patch * patch; }
  float* group(int g) { return data.data() + size_t(g) * group_stride(); }
  const float* group(int g) const {
    return data.data() + size_t(g) * group_stride();
  }
};

// Pure gather; img may differ from the image the plan was built on as long
// as the shape matches (training gathers clean pixels through a noisy plan).
StackBatch gather_stacks(const Image& img, const MatchPlan& plan);

// Canonical little-endian byte encoding, for fingerprinting plans.
std::vector<uint8_t> serialize_plan(const MatchPlan& plan);

}  // namespace dub
