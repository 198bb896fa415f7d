#include "dub/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "dub/binio.hpp"
#include "dub/rng.hpp"

namespace dub {

TrainMode parse_train_mode(const std::string& name) {
  if (name == "du-bm3d") return TrainMode::DuBm3d;
  if (name == "unet-image") return TrainMode::UnetImage;
  throw std::invalid_argument("unknown training mode '" + name +
                              "' (expected du-bm3d or unet-image)");
}

std::string train_mode_name(TrainMode mode) {
  return mode == TrainMode::DuBm3d ? "du-bm3d" : "unet-image";
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("betas must lie in [0, 1)");
}

void fisher_yates(std::vector<int>& v, Rng& rng) {
  for (int i = int(v.size()) - 1; i > 0; --i)
    std::swap(v[i], v[rng.uniform_int(i + 1)]);
}

}  // namespace

AdamState make_adam_state(const ModelParams& params) {
  AdamState s;
  s.m.reserve(params.tensors.size());
  s.v.reserve(params.tensors.size());
  for (const auto& [name, t] : params.tensors) {
    s.m.emplace_back(t.numel(), 0.0f);
    s.v.emplace_back(t.numel(), 0.0f);
  }
  return s;
}

void adam_step(ModelParams& params, AdamState& state, const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (state.m.size() != params.tensors.size())
    throw std::invalid_argument("optimizer state does not match the parameters");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    ad::Tensor& p = params.tensors[i].second;
    const std::vector<float>& grad = p.grad();
    std::vector<float>& m = state.m[i];
    std::vector<float>& v = state.v[i];
    if (m.size() != p.numel())
      throw std::invalid_argument("optimizer moment shape mismatch at " +
                                  params.tensors[i].first);
    float* theta = p.data();
    for (size_t j = 0; j < p.numel(); ++j) {
      const double g = grad.empty() ? 0.0 : double(grad[j]);
      const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      m[j] = float(mj);
      v[j] = float(vj);
      theta[j] = float(double(theta[j]) -
                       cfg.lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg.eps));
    }
  }
}

double mse_loss(const Image& pred, const Image& target) {
  if (pred.height != target.height || pred.width != target.width)
    throw std::invalid_argument("loss images differ in shape");
  double acc = 0.0;
  for (size_t i = 0; i < pred.pixels.size(); ++i) {
    const double d = double(pred.pixels[i]) - double(target.pixels[i]);
    acc += d * d;
  }
  return acc / double(pred.pixels.size());
}

Split split_dataset(int n, double f_train, double f_val, double f_test,
                    uint64_t seed) {
  if (n < 1) throw std::invalid_argument("cannot split an empty dataset");
  if (std::abs(f_train + f_val + f_test - 1.0) > 1e-6)
    throw std::invalid_argument("split fractions must sum to 1");
  if (f_train < 0 || f_val < 0 || f_test < 0)
    throw std::invalid_argument("split fractions must be non-negative");

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  fisher_yates(idx, rng);

  const int n_val = std::min<int>(n, int(std::llround(f_val * n)));
  const int n_test = std::min<int>(n - n_val, int(std::llround(f_test * n)));
  const int n_train = n - n_val - n_test;

  Split s;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  s.test.assign(idx.begin() + n_train + n_val, idx.end());
  return s;
}

double evaluate_loss(const std::vector<TrainPair>& pairs,
                     const ModelParams& params, const MatchConfig& mcfg,
                     TrainMode mode) {
  if (pairs.empty()) throw std::invalid_argument("empty evaluation set");
  double acc = 0.0;
  for (const TrainPair& pair : pairs) {
    Image pred;
    if (mode == TrainMode::DuBm3d) {
      MatchPlan plan = plan_matches(pair.noisy, mcfg);
      StackBatch stacks = gather_stacks(pair.noisy, plan);
      StackBatch denoised = forward_stack(params, stacks);
      pred = Aggregator(plan).forward(denoised);
    } else {
      pred = forward_image(params, pair.noisy);
    }
    acc += mse_loss(pred, pair.clean);
  }
  return acc / double(pairs.size());
}

Trainer::Trainer(std::vector<TrainPair> data, ModelParams params,
                 MatchConfig mcfg, TrainConfig tcfg)
    : data_(std::move(data)),
      params_(std::move(params)),
      mcfg_(mcfg),
      tcfg_(tcfg) {
  validate_train_config(tcfg_);
  if (data_.empty()) throw std::invalid_argument("empty training dataset");
  state_ = make_adam_state(params_);

  inputs_.reserve(data_.size());
  targets_.reserve(data_.size());
  if (tcfg_.mode == TrainMode::DuBm3d) aggs_.reserve(data_.size());

  for (const TrainPair& pair : data_) {
    if (pair.noisy.height != pair.clean.height ||
        pair.noisy.width != pair.clean.width)
      throw std::invalid_argument("training pair images differ in shape");
    if (tcfg_.mode == TrainMode::DuBm3d) {
      MatchPlan plan = plan_matches(pair.noisy, mcfg_);
      auto agg = std::make_shared<Aggregator>(plan);
      StackBatch stacks = gather_stacks(pair.noisy, agg->plan());
      inputs_.push_back(ad::Tensor::from(
          {stacks.groups, stacks.k, stacks.patch, stacks.patch},
          std::move(stacks.data)));
      targets_.push_back(ad::Tensor::from(
          {pair.clean.height, pair.clean.width}, pair.clean.pixels));
      aggs_.push_back(std::move(agg));
    } else {
      if (pair.noisy.height % 2 != 0 || pair.noisy.width % 2 != 0)
        throw std::invalid_argument(
            "image-mode training needs even image extents");
      inputs_.push_back(ad::Tensor::from(
          {1, 1, pair.noisy.height, pair.noisy.width}, pair.noisy.pixels));
      targets_.push_back(ad::Tensor::from(
          {1, 1, pair.clean.height, pair.clean.width}, pair.clean.pixels));
    }
  }
}

double Trainer::run_epoch(int epoch_index) {
  std::vector<int> order(data_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  Rng rng(derive_seed(tcfg_.seed, uint64_t(epoch_index)));
  fisher_yates(order, rng);

  const int n = int(order.size());
  double epoch_loss = 0.0;
  int n_batches = 0;
  for (int start = 0; start < n; start += tcfg_.batch_size) {
    const int b = std::min(tcfg_.batch_size, n - start);
    for (auto& [name, t] : params_.tensors) t.zero_grad();

    double batch_loss = 0.0;
    for (int s = 0; s < b; ++s) {
      const int i = order[start + s];
      ad::Tape tape;
      ad::TapeScope scope(tape);
      ad::Tensor pred;
      if (tcfg_.mode == TrainMode::DuBm3d) {
        ad::Tensor denoised = forward_stack_t(params_, inputs_[i]);
        pred = aggregate_op(denoised, aggs_[i]);
      } else {
        pred = forward_net(params_, inputs_[i]);
      }
      ad::Tensor loss = ad::mse(pred, targets_[i]);
      batch_loss += loss.item();
      tape.backward(loss, 1.0f / float(b));
    }
    adam_step(params_, state_, tcfg_);
    epoch_loss += batch_loss / b;
    ++n_batches;
  }
  return epoch_loss / n_batches;
}

Checkpoint make_checkpoint(const ModelParams& params, const AdamState* adam,
                           uint64_t train_steps) {
  Checkpoint c;
  c.desc = params.desc;
  c.tensors = params.tensors;
  c.train_steps = train_steps;
  if (adam != nullptr) {
    c.has_adam = true;
    c.adam = *adam;
  }
  return c;
}

ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams expected = init_params(ckpt.desc, 0);
  if (ckpt.tensors.size() != expected.tensors.size())
    throw DataError("checkpoint parameter count does not match the architecture");
  ModelParams p;
  p.desc = ckpt.desc;
  for (size_t i = 0; i < expected.tensors.size(); ++i) {
    const auto& [name, t] = ckpt.tensors[i];
    if (name != expected.tensors[i].first ||
        t.shape() != expected.tensors[i].second.shape())
      throw DataError("checkpoint tensor '" + name +
                      "' does not match the architecture");
    ad::Tensor copy = ad::Tensor::from(t.shape(), t.values(), true);
    p.tensors.emplace_back(name, copy);
  }
  return p;
}

namespace {

constexpr uint32_t kCheckpointVersion = 1;

void put_named_tensor(std::ostream& os, const std::string& name,
                      const std::vector<int>& shape,
                      const std::vector<float>& data) {
  binio::put_u16(os, uint16_t(name.size()));
  os.write(name.data(), std::streamsize(name.size()));
  binio::put_u32(os, uint32_t(shape.size()));
  for (int e : shape) binio::put_u32(os, uint32_t(e));
  for (float f : data) binio::put_f32(os, f);
}

std::pair<std::string, ad::Tensor> get_named_tensor(std::istream& is) {
  const uint16_t len = binio::get_u16(is, "tensor name length");
  std::string name(len, '\0');
  if (!is.read(name.data(), len))
    throw DataError("truncated file while reading tensor name");
  const uint32_t rank = binio::get_u32(is, "tensor rank");
  if (rank > 8) throw DataError("implausible tensor rank in checkpoint");
  std::vector<int> shape(rank);
  size_t numel = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    const uint32_t e = binio::get_u32(is, "tensor extent");
    if (e == 0 || e > (1u << 24)) throw DataError("implausible tensor extent");
    shape[i] = int(e);
    numel *= e;
  }
  std::vector<float> data(numel);
  for (size_t i = 0; i < numel; ++i)
    data[i] = binio::get_f32(is, "tensor data");
  return {name, ad::Tensor::from(std::move(shape), std::move(data))};
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os.write("DUBM", 4);
  binio::put_u32(os, kCheckpointVersion);
  binio::put_u32(os, uint32_t(ckpt.desc.channels));
  binio::put_u32(os, uint32_t(ckpt.desc.width));
  binio::put_u32(os, uint32_t(ckpt.desc.patch));
  binio::put_u64(os, ckpt.train_steps);
  binio::put_u32(os, uint32_t(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors)
    put_named_tensor(os, name, t.shape(), t.values());
  os.put(ckpt.has_adam ? 1 : 0);
  if (ckpt.has_adam) {
    if (ckpt.adam.m.size() != ckpt.tensors.size() ||
        ckpt.adam.v.size() != ckpt.tensors.size())
      throw std::invalid_argument("optimizer state does not match parameters");
    binio::put_u64(os, ckpt.adam.t);
    for (size_t i = 0; i < ckpt.tensors.size(); ++i) {
      put_named_tensor(os, "m." + ckpt.tensors[i].first,
                       ckpt.tensors[i].second.shape(), ckpt.adam.m[i]);
      put_named_tensor(os, "v." + ckpt.tensors[i].first,
                       ckpt.tensors[i].second.shape(), ckpt.adam.v[i]);
    }
  }
  if (!os) throw DataError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DUBM", 4) != 0)
    throw DataError(path + " is not a model checkpoint (bad magic)");
  const uint32_t version = binio::get_u32(is, "checkpoint version");
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  Checkpoint c;
  c.desc.channels = int(binio::get_u32(is, "descriptor channels"));
  c.desc.width = int(binio::get_u32(is, "descriptor width"));
  c.desc.patch = int(binio::get_u32(is, "descriptor patch"));
  c.train_steps = binio::get_u64(is, "train step count");
  const uint32_t count = binio::get_u32(is, "tensor count");
  if (count > 4096) throw DataError("implausible tensor count in checkpoint");
  for (uint32_t i = 0; i < count; ++i)
    c.tensors.push_back(get_named_tensor(is));

  char flag = 0;
  if (!is.get(flag)) throw DataError("truncated file while reading flags");
  if (flag != 0 && flag != 1) throw DataError("corrupt optimizer flag");
  c.has_adam = flag == 1;
  if (c.has_adam) {
    c.adam.t = binio::get_u64(is, "optimizer step count");
    c.adam.m.resize(count);
    c.adam.v.resize(count);
    for (uint32_t i = 0; i < 2 * count; ++i) {
      auto [name, t] = get_named_tensor(is);
      const bool is_m = name.rfind("m.", 0) == 0;
      const bool is_v = name.rfind("v.", 0) == 0;
      if (!is_m && !is_v) throw DataError("unexpected optimizer tensor " + name);
      const std::string base = name.substr(2);
      bool matched = false;
      for (uint32_t j = 0; j < count; ++j)
        if (c.tensors[j].first == base) {
          if (t.shape() != c.tensors[j].second.shape())
            throw DataError("optimizer moment shape mismatch for " + base);
          (is_m ? c.adam.m : c.adam.v)[j] = t.values();
          matched = true;
          break;
        }
      if (!matched) throw DataError("optimizer tensor " + name +
                                    " has no matching parameter");
    }
  }
  return c;
}

}  // namespace dub
