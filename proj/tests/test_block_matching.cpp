#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "dub/block_matching.hpp"
#include "dub/rng.hpp"

using namespace dub;

namespace {

Image random_image(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (float& p : img.pixels) p = float(rng.uniform(0.0, 1.0));
  return img;
}

// Exhaustive re-derivation of the grouping contract, written against the
// documented rules rather than the production code path.
std::vector<int> brute_grid(int extent, int patch, int stride) {
  std::vector<int> pos;
  const int last = extent - patch;
  for (int p = 0;; p += stride) {
    if (p >= last) {
      pos.push_back(last);
      break;
    }
    pos.push_back(p);
  }
  return pos;
}

double brute_distance(const Image& img, int ay, int ax, int by, int bx,
                      int patch) {
  double acc = 0.0;
  for (int i = 0; i < patch; ++i)
    for (int j = 0; j < patch; ++j) {
      const double d = double(img.at(ay + i, ax + j)) -
                       double(img.at(by + i, bx + j));
      acc += d * d;
    }
  return acc / (double(patch) * patch);
}

struct BruteSlot {
  int y, x;
  double d;
};

std::vector<BruteSlot> brute_group(const Image& img, int ry, int rx,
                                   const MatchConfig& cfg) {
  struct C {
    double d;
    int y, x;
  };
  std::vector<C> cands;
  const int p = cfg.patch;
  for (int cy = std::max(0, ry - cfg.window);
       cy <= std::min(img.height - p, ry + cfg.window); ++cy)
    for (int cx = std::max(0, rx - cfg.window);
         cx <= std::min(img.width - p, rx + cfg.window); ++cx) {
      if (cy == ry && cx == rx) continue;
      const double d = brute_distance(img, ry, rx, cy, cx, p);
      if (d <= cfg.tau) cands.push_back({d, cy, cx});
    }
  std::sort(cands.begin(), cands.end(), [](const C& a, const C& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<BruteSlot> group;
  group.push_back({ry, rx, 0.0});
  const int n_real = std::min<int>(cfg.group_size - 1, int(cands.size()));
  for (int s = 0; s < cfg.group_size - 1 - n_real; ++s)
    group.push_back({ry, rx, 0.0});
  for (int s = 0; s < n_real; ++s)
    group.push_back({cands[size_t(s)].y, cands[size_t(s)].x,
                     cands[size_t(s)].d});
  return group;
}

void check_against_brute_force(const Image& img, const MatchConfig& cfg) {
  const MatchPlan plan = plan_matches(img, cfg);
  const auto rows = brute_grid(img.height, cfg.patch, cfg.stride);
  const auto cols = brute_grid(img.width, cfg.patch, cfg.stride);
  REQUIRE(plan.num_groups == int(rows.size() * cols.size()));

  int g = 0;
  for (int ry : rows)
    for (int rx : cols) {
      const auto want = brute_group(img, ry, rx, cfg);
      for (int k = 0; k < cfg.group_size; ++k) {
        const size_t s = size_t(g) * cfg.group_size + k;
        REQUIRE(plan.coord_y[s] == want[size_t(k)].y);
        REQUIRE(plan.coord_x[s] == want[size_t(k)].x);
        REQUIRE(plan.dist[s] == want[size_t(k)].d);
      }
      ++g;
    }
}

}  // namespace

TEST_CASE("constant image groups follow row-major candidate order") {
  Image img(16, 16, 0.42f);
  MatchConfig cfg;
  cfg.patch = 8;
  cfg.stride = 4;
  cfg.window = 12;
  cfg.group_size = 4;
  const MatchPlan plan = plan_matches(img, cfg);

  for (double d : plan.dist) CHECK(d == 0.0);

  // Reference (0,0): every in-window candidate ties at 0, so the first
  // K-1 row-major positions win.
  CHECK(plan.coord_y[0] == 0);
  CHECK(plan.coord_x[0] == 0);
  CHECK(plan.coord_y[1] == 0);
  CHECK(plan.coord_x[1] == 1);
  CHECK(plan.coord_y[2] == 0);
  CHECK(plan.coord_x[2] == 2);
  CHECK(plan.coord_y[3] == 0);
  CHECK(plan.coord_x[3] == 3);
}

TEST_CASE("an exact duplicate of the reference joins with distance zero") {
  Image img = random_image(24, 24, 3);
  // Plant a copy of the (0,0) patch at (0, 9): inside the search window,
  // not overlapping the reference.
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) img.at(i, 9 + j) = img.at(i, j);

  MatchConfig cfg;
  cfg.patch = 8;
  cfg.stride = 8;
  cfg.window = 12;
  cfg.group_size = 8;
  const MatchPlan plan = plan_matches(img, cfg);

  CHECK(plan.coord_y[1] == 0);
  CHECK(plan.coord_x[1] == 9);
  CHECK(plan.dist[1] == 0.0);
}

TEST_CASE("plans equal the brute-force oracle on assorted images") {
  MatchConfig defaults;  // P=8, stride=4, window=12, K=8, tau=inf
  check_against_brute_force(random_image(32, 32, 7), defaults);
  check_against_brute_force(random_image(48, 48, 8), defaults);
  check_against_brute_force(random_image(17, 23, 9), defaults);

  MatchConfig tight;
  tight.patch = 4;
  tight.stride = 3;
  tight.window = 5;
  tight.group_size = 4;
  tight.tau = 0.02;
  check_against_brute_force(random_image(30, 41, 10), tight);

  MatchConfig no_window;
  no_window.patch = 8;
  no_window.stride = 8;
  no_window.window = 0;
  no_window.group_size = 3;
  check_against_brute_force(random_image(32, 32, 11), no_window);
}

TEST_CASE("every pixel is covered by at least one planned patch") {
  for (auto [h, w] : {std::pair{21, 37}, {8, 8}, {48, 33}}) {
    MatchConfig cfg;
    cfg.patch = 8;
    cfg.stride = 8;
    cfg.window = 4;
    cfg.group_size = 2;
    const MatchPlan plan = plan_matches(random_image(h, w, 13), cfg);
    std::vector<int> hits(size_t(h) * w, 0);
    for (size_t s = 0; s < plan.coord_y.size(); ++s)
      for (int i = 0; i < cfg.patch; ++i)
        for (int j = 0; j < cfg.patch; ++j)
          hits[size_t(plan.coord_y[s] + i) * w + plan.coord_x[s] + j]++;
    for (int v : hits) CHECK(v >= 1);
  }
}

TEST_CASE("group invariants hold on random inputs") {
  const Image img = random_image(40, 40, 17);
  MatchConfig cfg;
  cfg.group_size = 6;
  const MatchPlan plan = plan_matches(img, cfg);
  for (int g = 0; g < plan.num_groups; ++g) {
    const size_t base = size_t(g) * cfg.group_size;
    CHECK(plan.dist[base] == 0.0);
    for (int k = 1; k < cfg.group_size; ++k)
      CHECK(plan.dist[base + k] >= plan.dist[base + k - 1]);
    for (int k = 0; k < cfg.group_size; ++k) {
      CHECK(plan.coord_y[base + k] >= 0);
      CHECK(plan.coord_y[base + k] <= img.height - cfg.patch);
      CHECK(plan.coord_x[base + k] >= 0);
      CHECK(plan.coord_x[base + k] <= img.width - cfg.patch);
    }
  }
  CHECK(plan.weight == std::vector<double>(size_t(plan.num_groups), 1.0));
}

TEST_CASE("groups short of candidates pad with the reference") {
  const Image img = random_image(16, 16, 19);
  MatchConfig cfg;
  cfg.patch = 8;
  cfg.stride = 8;
  cfg.window = 0;  // no candidates at all
  cfg.group_size = 4;
  const MatchPlan plan = plan_matches(img, cfg);
  for (int g = 0; g < plan.num_groups; ++g)
    for (int k = 0; k < cfg.group_size; ++k) {
      const size_t s = size_t(g) * cfg.group_size + k;
      CHECK(plan.coord_y[s] == plan.coord_y[size_t(g) * cfg.group_size]);
      CHECK(plan.coord_x[s] == plan.coord_x[size_t(g) * cfg.group_size]);
      CHECK(plan.dist[s] == 0.0);
    }
}

TEST_CASE("tau filters every surviving candidate") {
  const Image img = random_image(32, 32, 23);
  MatchConfig cfg;
  cfg.tau = 0.01;
  cfg.group_size = 8;
  const MatchPlan plan = plan_matches(img, cfg);
  for (double d : plan.dist) CHECK(d <= cfg.tau);
}

TEST_CASE("gather_stacks copies the planned image regions") {
  const Image img = random_image(24, 24, 29);
  MatchConfig cfg;
  cfg.patch = 8;
  cfg.stride = 4;
  cfg.group_size = 4;
  const MatchPlan plan = plan_matches(img, cfg);
  const StackBatch batch = gather_stacks(img, plan);
  REQUIRE(batch.groups == plan.num_groups);
  REQUIRE(batch.k == 4);
  REQUIRE(batch.patch == 8);
  REQUIRE(batch.plan == &plan);

  for (int g = 0; g < batch.groups; ++g)
    for (int k = 0; k < batch.k; ++k) {
      const size_t s = size_t(g) * batch.k + k;
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          REQUIRE(batch.group(g)[(size_t(k) * 8 + i) * 8 + j] ==
                  img.at(plan.coord_y[s] + i, plan.coord_x[s] + j));
    }
}

TEST_CASE("a whole-image patch with K=1 gathers the image itself") {
  const Image img = random_image(8, 8, 31);
  MatchConfig cfg;
  cfg.patch = 8;
  cfg.stride = 8;
  cfg.group_size = 1;
  const MatchPlan plan = plan_matches(img, cfg);
  REQUIRE(plan.num_groups == 1);
  const StackBatch batch = gather_stacks(img, plan);
  CHECK(batch.data == img.pixels);
}

TEST_CASE("gather_stacks rejects a shape mismatch") {
  const Image img = random_image(24, 24, 37);
  const MatchPlan plan = plan_matches(img, MatchConfig{});
  const Image other = random_image(24, 25, 38);
  CHECK_THROWS_AS(gather_stacks(other, plan), std::invalid_argument);
}

TEST_CASE("gathering clean pixels through a noisy plan is allowed") {
  const Image noisy = random_image(24, 24, 39);
  const Image clean = random_image(24, 24, 40);
  const MatchPlan plan = plan_matches(noisy, MatchConfig{});
  const StackBatch batch = gather_stacks(clean, plan);
  CHECK(batch.group(0)[0] == clean.at(0, 0));
}

TEST_CASE("plan serialization is deterministic and content-sensitive") {
  const Image img = random_image(24, 24, 41);
  MatchPlan plan = plan_matches(img, MatchConfig{});
  const auto bytes1 = serialize_plan(plan);
  const auto bytes2 = serialize_plan(plan_matches(img, MatchConfig{}));
  CHECK(bytes1 == bytes2);

  const auto other = serialize_plan(plan_matches(random_image(24, 24, 42),
                                                 MatchConfig{}));
  CHECK(bytes1 != other);

  plan.weight[0] = 2.0;
  CHECK(serialize_plan(plan) != bytes1);
}

TEST_CASE("invalid configurations and undersized images are rejected") {
  const Image img = random_image(16, 16, 43);
  MatchConfig cfg;
  cfg.stride = 9;  // > patch
  CHECK_THROWS_AS(plan_matches(img, cfg), std::invalid_argument);
  cfg = MatchConfig{};
  cfg.stride = 0;
  CHECK_THROWS_AS(plan_matches(img, cfg), std::invalid_argument);
  cfg = MatchConfig{};
  cfg.group_size = 0;
  CHECK_THROWS_AS(plan_matches(img, cfg), std::invalid_argument);
  cfg = MatchConfig{};
  CHECK_THROWS_AS(plan_matches(random_image(7, 16, 44), cfg),
                  std::invalid_argument);
}
