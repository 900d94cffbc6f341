#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stair/backbone.hpp"
#include "stair/common.hpp"
#include "stair/kernels.hpp"

namespace stair {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;  // decoupled, applied after the Adam step
  double clip_norm = 1.0;      // global L2 bound over all blocks in the stage

  void validate() const {
    if (lr <= 0.0) throw std::invalid_argument("optim: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw std::invalid_argument("optim: betas must be in [0,1)");
    }
    if (clip_norm <= 0.0) throw std::invalid_argument("optim: clip_norm must be positive");
  }
};

// loss = mean((pred - target)^2) over all B*H*C entries, with
// d(loss)/d(pred) = 2 (pred - target) / (B*H*C).
template <class T>
double mse_loss(const SeqBatch<T>& pred, const SeqBatch<T>& target, SeqBatch<T>& grad) {
  if (pred.channels != target.channels || pred.batch != target.batch ||
      pred.len != target.len) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  const std::size_t n = pred.size();
  if (n == 0) throw std::invalid_argument("mse_loss: empty tensors");
  grad.channels = pred.channels;
  grad.batch = pred.batch;
  grad.len = pred.len;
  grad.data.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    acc += d * d;
    grad.data[i] = static_cast<T>(2.0 * d * inv_n);
  }
  return acc * inv_n;
}

// Scales every gradient by max_norm / g when the global L2 norm g across all
// blocks exceeds max_norm. Returns the pre-clip norm. Non-finite gradients
// abort with the offending block's name.
template <class T>
double clip_global_norm(const std::vector<ParamBlock<T>*>& blocks, double max_norm) {
  if (max_norm <= 0.0) throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  double total = 0.0;
  for (const auto* blk : blocks) {
    const double sq = kern::sumsq(blk->grad.data(), blk->grad.size());
    if (!std::isfinite(sq)) {
      throw std::runtime_error("non-finite gradient in parameter block '" + blk->name + "'");
    }
    total += sq;
  }
  const double norm = std::sqrt(total);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* blk : blocks) {
      kern::scale_inplace(blk->grad.data(), static_cast<T>(s), blk->grad.size());
    }
  }
  return norm;
}

// One Adam step (bias-corrected) over the given blocks, followed by decoupled
// weight decay. step_count is 1-based and shared by every block in the stage.
template <class T>
void adam_step(const std::vector<ParamBlock<T>*>& blocks, const OptimConfig& cfg,
               std::int64_t step_count) {
  cfg.validate();
  if (step_count < 1) throw std::invalid_argument("adam_step: step_count must be >= 1");
  const double bc1 = 1.0 / (1.0 - std::pow(cfg.beta1, static_cast<double>(step_count)));
  const double bc2 = 1.0 / (1.0 - std::pow(cfg.beta2, static_cast<double>(step_count)));
  for (auto* blk : blocks) {
    const double sq = kern::sumsq(blk->grad.data(), blk->grad.size());
    if (!std::isfinite(sq)) {
      throw std::runtime_error("non-finite gradient in parameter block '" + blk->name + "'");
    }
    kern::adam_update(blk->value.data(), blk->grad.data(), blk->m.data(), blk->v.data(),
                      blk->value.size(), static_cast<T>(cfg.lr), static_cast<T>(cfg.beta1),
                      static_cast<T>(cfg.beta2), static_cast<T>(cfg.eps), static_cast<T>(bc1),
                      static_cast<T>(bc2), static_cast<T>(cfg.weight_decay));
    if (!std::isfinite(kern::sumsq(blk->value.data(), blk->value.size()))) {
      throw std::runtime_error("non-finite parameters in block '" + blk->name +
                               "' after update");
    }
  }
}

// Squared-L2 anchor tying each channel's parameters to the shared snapshot
// they were cloned from. Adds 2*lambda*(theta_c - anchor) to the gradient
// buffers and returns lambda * sum_c ||theta_c - anchor||^2. The anchor holds
// one block sequence (layer weights and biases of the shared set).
template <class T>
double anchor_penalty(ParamBank<T>& bank, const std::vector<std::vector<T>>& anchor,
                      double lambda) {
  if (bank.kind != BankKind::Individual) {
    throw std::invalid_argument("anchor_penalty: individual bank required");
  }
  const std::size_t per_set = bank.sets.empty() ? 0 : bank.sets[0].size() * 2;
  if (anchor.size() != per_set) {
    throw std::invalid_argument("anchor_penalty: anchor block count mismatch");
  }
  double penalty = 0.0;
  const T g_scale = static_cast<T>(2.0 * lambda);
  for (auto& set : bank.sets) {
    std::size_t a = 0;
    for (auto& layer : set) {
      for (ParamBlock<T>* blk : {&layer.w, &layer.b}) {
        const auto& ref = anchor[a++];
        if (ref.size() != blk->value.size()) {
          throw std::invalid_argument("anchor_penalty: shape mismatch at " + blk->name);
        }
        for (std::size_t i = 0; i < ref.size(); ++i) {
          const double d = static_cast<double>(blk->value[i]) - static_cast<double>(ref[i]);
          penalty += d * d;
          blk->grad[i] += g_scale * static_cast<T>(d);
        }
      }
    }
  }
  return lambda * penalty;
}

}  // namespace stair
