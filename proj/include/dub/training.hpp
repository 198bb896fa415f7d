#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dub/aggregation.hpp"
#include "dub/block_matching.hpp"
#include "dub/image.hpp"
#include "dub/unet.hpp"

namespace dub {

enum class TrainMode { DuBm3d, UnetImage };

TrainMode parse_train_mode(const std::string& name);
std::string train_mode_name(TrainMode mode);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t seed = 0;
  TrainMode mode = TrainMode::DuBm3d;
};

// First/second moment buffers aligned one-to-one with ModelParams::tensors.
struct AdamState {
  std::vector<std::vector<float>> m, v;
  uint64_t t = 0;
};

AdamState make_adam_state(const ModelParams& params);

// One update from the gradients currently accumulated on the parameter
// tensors: t += 1; m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2;
// theta -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
// A parameter with no gradient buffer is treated as g = 0.
void adam_step(ModelParams& params, AdamState& state, const TrainConfig& cfg);

struct TrainPair {
  Image noisy;
  Image clean;
};

double mse_loss(const Image& pred, const Image& target);

struct Split {
  std::vector<int> train, val, test;
};

// Deterministic shuffle of [0, n), then contiguous [train | val | test]
// slices. Validation and test take their rounded fractions; train keeps the
// remainder.
Split split_dataset(int n, double f_train, double f_val, double f_test,
                    uint64_t seed);

// Mean per-image loss of the current parameters over a set of pairs,
// forward only.
double evaluate_loss(const std::vector<TrainPair>& pairs,
                     const ModelParams& params, const MatchConfig& mcfg,
                     TrainMode mode);

// Owns the optimization loop for both modes. Per-sample matching plans,
// gathered inputs, and aggregators are computed once up front and cached:
// the grouping geometry depends only on the (fixed) noisy inputs, so it
// never changes across epochs.
class Trainer {
 public:
  Trainer(std::vector<TrainPair> data, ModelParams params, MatchConfig mcfg,
          TrainConfig tcfg);

  // Shuffles per (seed, epoch_index), then one Adam step per mini-batch with
  // the batch loss averaged across its samples. Returns the mean batch loss.
  double run_epoch(int epoch_index);

  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  AdamState& state() { return state_; }
  uint64_t steps() const { return state_.t; }
  const MatchConfig& match_config() const { return mcfg_; }
  const TrainConfig& config() const { return tcfg_; }

 private:
  std::vector<TrainPair> data_;
  ModelParams params_;
  MatchConfig mcfg_;
  TrainConfig tcfg_;
  AdamState state_;
  // per-sample caches
  std::vector<std::shared_ptr<const Aggregator>> aggs_;  // du-bm3d mode
  std::vector<ad::Tensor> inputs_;
  std::vector<ad::Tensor> targets_;
};

// Self-describing parameter + optimizer snapshot.
struct Checkpoint {
  UnetDescriptor desc;
  std::vector<std::pair<std::string, ad::Tensor>> tensors;
  bool has_adam = false;
  AdamState adam;
  uint64_t train_steps = 0;
};

Checkpoint make_checkpoint(const ModelParams& params, const AdamState* adam,
                           uint64_t train_steps);
// Validates names and shapes against the descriptor's architecture.
ModelParams params_from_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dub
