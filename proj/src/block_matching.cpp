#include "dub/block_matching.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dub/binio.hpp"

namespace dub {

namespace {

void validate_config(const MatchConfig& cfg) {
  if (cfg.patch < 1) throw std::invalid_argument("patch side must be >= 1");
  if (cfg.stride < 1 || cfg.stride > cfg.patch)
    throw std::invalid_argument("stride must satisfy 1 <= stride <= patch");
  if (cfg.window < 0) throw std::invalid_argument("window must be >= 0");
  if (cfg.group_size < 1) throw std::invalid_argument("group_size must be >= 1");
  if (!(cfg.tau >= 0.0)) throw std::invalid_argument("tau must be >= 0");
}

// {0, stride, 2*stride, ...} with the last position clamped so the final
// patch touches the border.
std::vector<int> reference_grid(int extent, int patch, int stride) {
  std::vector<int> pos;
  const int last = extent - patch;
  for (int p = 0; p < last; p += stride) pos.push_back(p);
  pos.push_back(last);
  return pos;
}

double patch_distance(const Image& img, int ay, int ax, int by, int bx,
                      int patch) {
  double acc = 0.0;
  for (int i = 0; i < patch; ++i) {
    const float* ra = &img.pixels[size_t(ay + i) * img.width + ax];
    const float* rb = &img.pixels[size_t(by + i) * img.width + bx];
    for (int j = 0; j < patch; ++j) {
      const double d = double(ra[j]) - double(rb[j]);
      acc += d * d;
    }
  }
  return acc / (double(patch) * patch);
}

}  // namespace

MatchPlan plan_matches(const Image& img, const MatchConfig& cfg) {
  validate_config(cfg);
  if (img.height < cfg.patch || img.width < cfg.patch)
    throw std::invalid_argument(
        "image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
        " is smaller than the patch side " + std::to_string(cfg.patch));

  const int p = cfg.patch, k = cfg.group_size;
  const std::vector<int> rows = reference_grid(img.height, p, cfg.stride);
  const std::vector<int> cols = reference_grid(img.width, p, cfg.stride);

  MatchPlan plan;
  plan.config = cfg;
  plan.image_h = img.height;
  plan.image_w = img.width;
  plan.num_groups = int(rows.size() * cols.size());
  plan.coord_y.reserve(size_t(plan.num_groups) * k);
  plan.coord_x.reserve(size_t(plan.num_groups) * k);
  plan.dist.reserve(size_t(plan.num_groups) * k);
  plan.weight.assign(size_t(plan.num_groups), 1.0);

  struct Candidate {
    double d;
    int y, x;
    bool operator<(const Candidate& o) const {
      if (d != o.d) return d < o.d;
      if (y != o.y) return y < o.y;
      return x < o.x;
    }
  };
  std::vector<Candidate> cands;

  for (int ry : rows)
    for (int rx : cols) {
      cands.clear();
      const int y0 = std::max(0, ry - cfg.window);
      const int y1 = std::min(img.height - p, ry + cfg.window);
      const int x0 = std::max(0, rx - cfg.window);
      const int x1 = std::min(img.width - p, rx + cfg.window);
      for (int cy = y0; cy <= y1; ++cy)
        for (int cx = x0; cx <= x1; ++cx) {
          if (cy == ry && cx == rx) continue;
          const double d = patch_distance(img, ry, rx, cy, cx, p);
          if (d <= cfg.tau) cands.push_back({d, cy, cx});
        }
      std::sort(cands.begin(), cands.end());

      const int n_real = std::min<int>(k - 1, int(cands.size()));
      const int n_pad = k - 1 - n_real;
      plan.coord_y.push_back(ry);
      plan.coord_x.push_back(rx);
      plan.dist.push_back(0.0);
      for (int s = 0; s < n_pad; ++s) {
        plan.coord_y.push_back(ry);
        plan.coord_x.push_back(rx);
        plan.dist.push_back(0.0);
      }
      for (int s = 0; s < n_real; ++s) {
        plan.coord_y.push_back(cands[s].y);
        plan.coord_x.push_back(cands[s].x);
        plan.dist.push_back(cands[s].d);
      }
    }
  return plan;
}

StackBatch gather_stacks(const Image& img, const MatchPlan& plan) {
  if (img.height != plan.image_h || img.width != plan.image_w)
    throw std::invalid_argument(
        "image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
        " does not match the plan's " + std::to_string(plan.image_h) + "x" +
        std::to_string(plan.image_w));

  const int p = plan.config.patch, k = plan.config.group_size;
  StackBatch batch;
  batch.groups = plan.num_groups;
  batch.k = k;
  batch.patch = p;
  batch.plan = &plan;
  batch.data.resize(size_t(plan.num_groups) * k * p * p);

  float* dst = batch.data.data();
  for (size_t slot = 0; slot < plan.coord_y.size(); ++slot) {
    const int y = plan.coord_y[slot], x = plan.coord_x[slot];
    for (int i = 0; i < p; ++i, dst += p)
      std::memcpy(dst, &img.pixels[size_t(y + i) * img.width + x],
                  size_t(p) * sizeof(float));
  }
  return batch;
}

std::vector<uint8_t> serialize_plan(const MatchPlan& plan) {
  std::ostringstream os(std::ios::binary);
  auto put_f64 = [&os](double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    binio::put_u64(os, bits);
  };
  binio::put_u32(os, uint32_t(plan.config.patch));
  binio::put_u32(os, uint32_t(plan.config.stride));
  binio::put_u32(os, uint32_t(plan.config.window));
  binio::put_u32(os, uint32_t(plan.config.group_size));
  put_f64(plan.config.tau);
  binio::put_u32(os, uint32_t(plan.image_h));
  binio::put_u32(os, uint32_t(plan.image_w));
  binio::put_u32(os, uint32_t(plan.num_groups));
  for (size_t i = 0; i < plan.coord_y.size(); ++i) {
    binio::put_u32(os, uint32_t(plan.coord_y[i]));
    binio::put_u32(os, uint32_t(plan.coord_x[i]));
  }
  for (double d : plan.dist) put_f64(d);
  for (double w : plan.weight) put_f64(w);
  const std::string s = os.str();
  return std::vector<uint8_t>(s.begin(), s.end());
}

}  // namespace dub
