#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "stair/common.hpp"
#include "stair/kernels.hpp"

// The temporal mapping applied along the time axis of each channel: a direct
// linear map lookback -> horizon when layers == 1, otherwise a shallow MLP
// with `layers` linear layers and an activation (plus inverted dropout) after
// each hidden layer. A bank holds either one shared parameter set used for
// every channel or C channel-specific sets of identical shape.

namespace stair {

enum class Activation { None, Relu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct BackboneConfig {
  int layers = 1;
  int hidden = 512;  // used when layers > 1
  Activation activation = Activation::Relu;
  double dropout_rate = 0.1;
  int input_len = 96;
  int horizon = 96;

  void validate() const {
    if (layers < 1) throw std::invalid_argument("backbone: layers must be >= 1");
    if (layers > 1 && hidden < 1) throw std::invalid_argument("backbone: hidden must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
      throw std::invalid_argument("backbone: dropout_rate must be in [0,1)");
    }
    if (input_len < 1 || horizon < 1) {
      throw std::invalid_argument("backbone: input_len and horizon must be >= 1");
    }
  }

  // (in, out) dimensions of each linear layer.
  std::vector<std::pair<int, int>> layer_dims() const {
    std::vector<std::pair<int, int>> dims;
    if (layers == 1) {
      dims.emplace_back(input_len, horizon);
      return dims;
    }
    dims.emplace_back(input_len, hidden);
    for (int l = 1; l < layers - 1; ++l) dims.emplace_back(hidden, hidden);
    dims.emplace_back(hidden, horizon);
    return dims;
  }

  // Dropout is applied after hidden activations only; with no activation it
  // is skipped entirely.
  bool uses_dropout() const {
    return layers > 1 && activation != Activation::None && dropout_rate > 0.0;
  }

  bool operator==(const BackboneConfig&) const = default;
};

template <class T>
struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<T> m;  // Adam first moment
  std::vector<T> v;  // Adam second moment

  std::size_t size() const { return value.size(); }

  void allocate(std::string block_name, std::vector<std::size_t> dims) {
    name = std::move(block_name);
    shape = std::move(dims);
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    value.assign(n, T(0));
    grad.assign(n, T(0));
    m.assign(n, T(0));
    v.assign(n, T(0));
  }

  void reset_optimizer_state() {
    std::fill(m.begin(), m.end(), T(0));
    std::fill(v.begin(), v.end(), T(0));
    std::fill(grad.begin(), grad.end(), T(0));
  }
};

template <class T>
struct LayerParams {
  ParamBlock<T> w;  // out x in, row-major
  ParamBlock<T> b;  // out
};

enum class BankKind { Shared, Individual };

template <class T>
struct ParamBank {
  BackboneConfig config;
  BankKind kind = BankKind::Shared;
  std::size_t channels = 1;  // 1 for shared banks, C for individual banks
  std::vector<std::vector<LayerParams<T>>> sets;  // [set][layer]

  std::vector<ParamBlock<T>*> blocks() {
    std::vector<ParamBlock<T>*> out;
    for (auto& set : sets) {
      for (auto& layer : set) {
        out.push_back(&layer.w);
        out.push_back(&layer.b);
      }
    }
    return out;
  }

  std::vector<const ParamBlock<T>*> blocks() const {
    std::vector<const ParamBlock<T>*> out;
    for (const auto& set : sets) {
      for (const auto& layer : set) {
        out.push_back(&layer.w);
        out.push_back(&layer.b);
      }
    }
    return out;
  }

  void zero_grad() {
    for (auto* blk : blocks()) std::fill(blk->grad.begin(), blk->grad.end(), T(0));
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* blk : blocks()) n += blk->size();
    return n;
  }

  // Parameter values only, in traversal order (snapshots for best-epoch
  // checkpoints and anchors).
  std::vector<std::vector<T>> snapshot_values() const {
    std::vector<std::vector<T>> out;
    for (const auto* blk : blocks()) out.push_back(blk->value);
    return out;
  }

  void restore_values(const std::vector<std::vector<T>>& snap) {
    auto blks = blocks();
    if (snap.size() != blks.size()) throw std::invalid_argument("restore_values: block count mismatch");
    for (std::size_t i = 0; i < blks.size(); ++i) {
      if (snap[i].size() != blks[i]->value.size()) {
        throw std::invalid_argument("restore_values: block size mismatch at " + blks[i]->name);
      }
      blks[i]->value = snap[i];
    }
  }
};

namespace detail {

template <class T>
void init_layer_uniform(LayerParams<T>& layer, std::size_t fan_in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& w : layer.w.value) w = static_cast<T>(dist(rng));
  for (auto& b : layer.b.value) b = static_cast<T>(dist(rng));
}

}  // namespace detail

template <class T>
ParamBank<T> init_shared(const BackboneConfig& config, std::uint64_t seed) {
  config.validate();
  ParamBank<T> bank;
  bank.config = config;
  bank.kind = BankKind::Shared;
  bank.channels = 1;
  bank.sets.resize(1);
  const auto dims = config.layer_dims();
  auto& set = bank.sets[0];
  set.resize(dims.size());
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const auto [in, out] = dims[l];
    set[l].w.allocate("layer" + std::to_string(l) + ".w",
                      {static_cast<std::size_t>(out), static_cast<std::size_t>(in)});
    set[l].b.allocate("layer" + std::to_string(l) + ".b", {static_cast<std::size_t>(out)});
    detail::init_layer_uniform(set[l], static_cast<std::size_t>(in), mix_seed(seed, l));
  }
  return bank;
}

// C deep copies of the shared parameters; gradients and optimizer state of
// the new bank start at zero.
template <class T>
ParamBank<T> clone_to_individual(const ParamBank<T>& shared, std::size_t channels) {
  if (shared.kind != BankKind::Shared) {
    throw std::invalid_argument("clone_to_individual: shared bank required");
  }
  if (channels < 1) throw std::invalid_argument("clone_to_individual: channels must be >= 1");
  ParamBank<T> bank;
  bank.config = shared.config;
  bank.kind = BankKind::Individual;
  bank.channels = channels;
  bank.sets.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    bank.sets[c] = shared.sets[0];
    for (auto& layer : bank.sets[c]) {
      layer.w.name = "ch" + std::to_string(c) + "." + layer.w.name;
      layer.b.name = "ch" + std::to_string(c) + "." + layer.b.name;
      layer.w.reset_optimizer_state();
      layer.b.reset_optimizer_state();
    }
  }
  return bank;
}

// Activations recorded by a training-mode forward pass. Buffers cover all
// C*B rows; per-channel processing of an individual bank writes the row
// range belonging to its channel plane.
template <class T>
struct BackboneCache {
  std::size_t rows = 0;
  std::size_t channels = 0;
  std::size_t batch = 0;
  bool train_mode = false;
  BackboneConfig config;
  std::vector<std::vector<T>> input;  // input[l]: rows x in_dim of layer l
  std::vector<std::vector<T>> pre;    // pre[l]: rows x out_dim, hidden layers only
  std::vector<std::vector<T>> mask;   // mask[l]: dropout scales, hidden layers only
};

namespace detail {

template <class T>
void fill_dropout_mask(T* mask, std::size_t n, double rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = unit(rng) < rate ? T(0) : keep_scale;
  }
}

// Runs the layer stack over rows [row0, row0+nrows) of the cache buffers
// using one parameter set, writing the final layer into out (rows x horizon).
template <class T>
void forward_rows(const std::vector<LayerParams<T>>& set, const BackboneConfig& cfg,
                  BackboneCache<T>& cache, std::size_t row0, std::size_t nrows, T* out,
                  bool train_mode, std::uint64_t mask_seed) {
  const auto dims = cfg.layer_dims();
  const std::size_t n_layers = dims.size();
  const bool dropout = train_mode && cfg.uses_dropout();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto in_dim = static_cast<std::size_t>(dims[l].first);
    const auto out_dim = static_cast<std::size_t>(dims[l].second);
    const T* in = cache.input[l].data() + row0 * in_dim;
    const bool last = (l + 1 == n_layers);
    T* dst = last ? out : cache.pre[l].data() + row0 * out_dim;
    kern::matmul_nt(in, set[l].w.value.data(), set[l].b.value.data(), dst, nrows, out_dim,
                    static_cast<std::size_t>(dims[l].first));
    (void)in_dim;
    if (last) break;
    T* act = cache.input[l + 1].data() + row0 * out_dim;
    if (cfg.activation == Activation::Relu) {
      kern::relu(act, dst, nrows * out_dim);
    } else {
      std::copy(dst, dst + nrows * out_dim, act);
    }
    if (dropout) {
      T* mask = cache.mask[l].data() + row0 * out_dim;
      fill_dropout_mask(mask, nrows * out_dim, cfg.dropout_rate, mix_seed(mask_seed, l));
      kern::mul_inplace(act, mask, nrows * out_dim);
    }
  }
}

template <class T>
void backward_rows(std::vector<LayerParams<T>>& set, const BackboneConfig& cfg,
                   const BackboneCache<T>& cache, std::size_t row0, std::size_t nrows,
                   const T* dy, std::vector<std::vector<T>>& scratch) {
  const auto dims = cfg.layer_dims();
  const std::size_t n_layers = dims.size();
  const bool dropout = cache.train_mode && cfg.uses_dropout();
  // scratch[l]: rows x in_dim of layer l, gradient flowing into layer l's input
  const T* d = dy;  // rows x out_dim of the current layer
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto in_dim = static_cast<std::size_t>(dims[l].first);
    const auto out_dim = static_cast<std::size_t>(dims[l].second);
    const T* in = cache.input[l].data() + row0 * in_dim;
    // dW += d^T * in ; db += column sums of d
    kern::matmul_tn_acc(d, in, set[l].w.grad.data(), out_dim, in_dim, nrows);
    kern::colsum_acc(d, set[l].b.grad.data(), nrows, out_dim);
    if (l == 0) break;
    T* dprev = scratch[l - 1].data() + row0 * in_dim;
    kern::matmul_nn(d, set[l].w.value.data(), dprev, nrows, in_dim, out_dim);
    if (dropout) {
      kern::mul_inplace(dprev, cache.mask[l - 1].data() + row0 * in_dim, nrows * in_dim);
    }
    if (cfg.activation == Activation::Relu) {
      kern::relu_backward(dprev, dprev, cache.pre[l - 1].data() + row0 * in_dim,
                          nrows * in_dim);
    }
    d = dprev;
  }
}

}  // namespace detail

// Forward pass. Shared banks apply the one parameter set to every channel;
// individual banks route channel c through set c. In train mode with an
// active dropout configuration, masks are generated from `seed` and recorded
// in the cache for backward; eval mode applies no mask.
template <class T>
void forward(const ParamBank<T>& bank, const SeqBatch<T>& x, bool train_mode,
             std::uint64_t seed, BackboneCache<T>& cache, SeqBatch<T>& y) {
  bank.config.validate();
  if (static_cast<int>(x.len) != bank.config.input_len) {
    throw std::invalid_argument("forward: input length " + std::to_string(x.len) +
                                " does not match config input_len " +
                                std::to_string(bank.config.input_len));
  }
  if (bank.kind == BankKind::Individual && x.channels != bank.channels) {
    throw std::invalid_argument("forward: individual bank has " + std::to_string(bank.channels) +
                                " channels, input has " + std::to_string(x.channels));
  }
  const std::size_t rows = x.channels * x.batch;
  const std::size_t H = static_cast<std::size_t>(bank.config.horizon);
  const auto dims = bank.config.layer_dims();

  cache.rows = rows;
  cache.channels = x.channels;
  cache.batch = x.batch;
  cache.train_mode = train_mode;
  cache.config = bank.config;
  cache.input.resize(dims.size());
  cache.pre.assign(dims.size() > 0 ? dims.size() - 1 : 0, {});
  cache.mask.assign(dims.size() > 0 ? dims.size() - 1 : 0, {});
  cache.input[0] = x.data;  // owned copy; backward needs the layer-0 input
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto out_dim = static_cast<std::size_t>(dims[l].second);
    cache.pre[l].assign(rows * out_dim, T(0));
    cache.input[l + 1].assign(rows * out_dim, T(0));
    if (train_mode && bank.config.uses_dropout()) cache.mask[l].assign(rows * out_dim, T(0));
  }

  y.channels = x.channels;
  y.batch = x.batch;
  y.len = H;
  y.data.assign(rows * H, T(0));

  if (bank.kind == BankKind::Shared) {
    detail::forward_rows(bank.sets[0], bank.config, cache, 0, rows, y.data.data(), train_mode,
                         mix_seed(seed, 0));
  } else {
    for (std::size_t c = 0; c < x.channels; ++c) {
      detail::forward_rows(bank.sets[c], bank.config, cache, c * x.batch, x.batch,
                           y.plane(c), train_mode, mix_seed(seed, c + 1));
    }
  }
}

// Accumulates parameter gradients from d(loss)/d(output). For individual
// banks, set c receives gradient only from channel c's rows. Gradients are
// accumulated; call bank.zero_grad() first for a fresh batch.
template <class T>
void backward(ParamBank<T>& bank, const BackboneCache<T>& cache, const SeqBatch<T>& dy) {
  if (!cache.train_mode) {
    throw std::invalid_argument("backward: cache was not produced by a train-mode forward");
  }
  if (!(cache.config == bank.config)) {
    throw std::invalid_argument("backward: cache does not match this bank's config");
  }
  if (dy.channels != cache.channels || dy.batch != cache.batch ||
      dy.len != static_cast<std::size_t>(bank.config.horizon)) {
    throw std::invalid_argument("backward: gradient shape does not match cached forward");
  }
  const auto dims = bank.config.layer_dims();
  std::vector<std::vector<T>> scratch(dims.size() > 0 ? dims.size() - 1 : 0);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    scratch[l].assign(cache.rows * static_cast<std::size_t>(dims[l].second), T(0));
  }
  if (bank.kind == BankKind::Shared) {
    detail::backward_rows(bank.sets[0], bank.config, cache, 0, cache.rows, dy.data.data(),
                          scratch);
  } else {
    for (std::size_t c = 0; c < cache.channels; ++c) {
      detail::backward_rows(bank.sets[c], bank.config, cache, c * cache.batch, cache.batch,
                            dy.plane(c), scratch);
    }
  }
}

// HC x LC joint operator of a linear bank: block-diagonal with diagonal
// blocks equal to the per-channel weight matrices (identical blocks for a
// shared bank) and exact zeros elsewhere. vec(X) stacks channels
// [x_1; ...; x_C], each of length L.
template <class T>
struct JointMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> w;     // row-major rows x cols
  std::vector<T> bias;  // rows
};

template <class T>
JointMatrix<T> export_joint_matrix(const ParamBank<T>& bank, std::size_t channels) {
  if (bank.config.layers != 1) {
    throw std::logic_error("export_joint_matrix: only linear (1-layer) banks have a joint matrix");
  }
  if (bank.kind == BankKind::Individual) {
    if (channels != 0 && channels != bank.channels) {
      throw std::invalid_argument("export_joint_matrix: channel count mismatch");
    }
    channels = bank.channels;
  } else if (channels == 0) {
    throw std::invalid_argument("export_joint_matrix: shared bank needs a channel count");
  }
  const std::size_t L = static_cast<std::size_t>(bank.config.input_len);
  const std::size_t H = static_cast<std::size_t>(bank.config.horizon);
  JointMatrix<T> jm;
  jm.rows = H * channels;
  jm.cols = L * channels;
  jm.w.assign(jm.rows * jm.cols, T(0));
  jm.bias.assign(jm.rows, T(0));
  for (std::size_t c = 0; c < channels; ++c) {
    const auto& layer = bank.sets[bank.kind == BankKind::Shared ? 0 : c][0];
    for (std::size_t h = 0; h < H; ++h) {
      T* dst = jm.w.data() + (c * H + h) * jm.cols + c * L;
      const T* src = layer.w.value.data() + h * L;
      std::copy(src, src + L, dst);
      jm.bias[c * H + h] = layer.b.value[h];
    }
  }
  return jm;
}

}  // namespace stair
