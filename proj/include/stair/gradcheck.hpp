#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stair/backbone.hpp"
#include "stair/common.hpp"
#include "stair/optim.hpp"
#include "stair/residual.hpp"

// Finite-difference verification of the analytic gradients, at 64-bit
// precision with central differences. The checker only ever calls the forward
// paths and the loss, so it stays independent of backward().

namespace stair {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t params = 0;
};

namespace detail {

inline double fd_rel_err(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / denom;
}

}  // namespace detail

// Loss used by every check: plain MSE between the module output and a fixed
// random target.
inline GradCheckResult gradcheck_backbone(const BackboneConfig& config, BankKind kind,
                                          std::size_t channels, std::size_t batch,
                                          std::uint64_t seed, double step = 1e-5) {
  ParamBank<double> bank = init_shared<double>(config, mix_seed(seed, 1));
  if (kind == BankKind::Individual) bank = clone_to_individual(bank, channels);
  // Nudge individual sets apart so the check does not run on identical copies.
  if (kind == BankKind::Individual) {
    std::mt19937_64 rng(mix_seed(seed, 2));
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    for (auto* blk : bank.blocks()) {
      for (auto& w : blk->value) w += dist(rng);
    }
  }

  SeqBatch<double> x(channels, batch, static_cast<std::size_t>(config.input_len));
  SeqBatch<double> target(channels, batch, static_cast<std::size_t>(config.horizon));
  {
    std::mt19937_64 rng(mix_seed(seed, 3));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& v : x.data) v = dist(rng);
    for (auto& v : target.data) v = dist(rng);
  }

  BackboneCache<double> cache;
  SeqBatch<double> y, grad;
  auto loss_at = [&]() {
    forward(bank, x, /*train_mode=*/false, 0, cache, y);
    SeqBatch<double> g;
    return mse_loss(y, target, g);
  };

  // Analytic gradients
  forward(bank, x, /*train_mode=*/true, 0, cache, y);
  mse_loss(y, target, grad);
  bank.zero_grad();
  backward(bank, cache, grad);

  GradCheckResult res;
  res.name = std::string(config.layers == 1 ? "linear" : std::to_string(config.layers) + "-layer-" +
                                                             to_string(config.activation)) +
             "/" + (kind == BankKind::Shared ? "shared" : "individual");
  for (auto* blk : bank.blocks()) {
    for (std::size_t i = 0; i < blk->value.size(); ++i) {
      const double saved = blk->value[i];
      blk->value[i] = saved + step;
      const double lp = loss_at();
      blk->value[i] = saved - step;
      const double lm = loss_at();
      blk->value[i] = saved;
      const double fd = (lp - lm) / (2.0 * step);
      res.max_rel_err = std::max(res.max_rel_err, detail::fd_rel_err(blk->grad[i], fd));
      ++res.params;
    }
  }
  return res;
}

inline GradCheckResult gradcheck_residual(std::size_t channels, std::size_t input_len,
                                          std::size_t horizon, std::size_t hidden,
                                          std::size_t rank, std::size_t batch,
                                          std::uint64_t seed, double step = 1e-5) {
  ResidualParams<double> params =
      init_residual<double>(channels, input_len, horizon, hidden, rank, 1.0, mix_seed(seed, 4));
  // The decoder is zero-initialized by contract; give it nonzero values so
  // every gradient path is exercised.
  {
    std::mt19937_64 rng(mix_seed(seed, 5));
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    for (auto& w : params.dec_w.value) w = dist(rng);
    for (auto& b : params.dec_b.value) b = dist(rng);
  }

  SeqBatch<double> x(channels, batch, input_len);
  SeqBatch<double> target(channels, batch, horizon);
  {
    std::mt19937_64 rng(mix_seed(seed, 6));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& v : x.data) v = dist(rng);
    for (auto& v : target.data) v = dist(rng);
  }

  ResidualCache<double> cache;
  SeqBatch<double> r, grad;
  auto loss_at = [&]() {
    forward_residual(params, x, cache, r);
    SeqBatch<double> g;
    return mse_loss(r, target, g);
  };

  forward_residual(params, x, cache, r);
  mse_loss(r, target, grad);
  params.zero_grad();
  backward_residual(params, cache, grad);

  GradCheckResult res;
  res.name = "residual";
  for (auto* blk : params.blocks()) {
    for (std::size_t i = 0; i < blk->value.size(); ++i) {
      const double saved = blk->value[i];
      blk->value[i] = saved + step;
      const double lp = loss_at();
      blk->value[i] = saved - step;
      const double lm = loss_at();
      blk->value[i] = saved;
      const double fd = (lp - lm) / (2.0 * step);
      res.max_rel_err = std::max(res.max_rel_err, detail::fd_rel_err(blk->grad[i], fd));
      ++res.params;
    }
  }
  return res;
}

// The standard suite: {linear, 2-layer relu, 4-layer relu} x {shared,
// individual} on small shapes, plus the residual adapter.
inline std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
  std::vector<GradCheckResult> out;
  const int L = 8, H = 4;
  const std::size_t C = 3, B = 2;
  for (int layers : {1, 2, 4}) {
    BackboneConfig cfg;
    cfg.layers = layers;
    cfg.hidden = 5;
    cfg.activation = layers == 1 ? Activation::None : Activation::Relu;
    cfg.dropout_rate = 0.0;
    cfg.input_len = L;
    cfg.horizon = H;
    for (auto kind : {BankKind::Shared, BankKind::Individual}) {
      out.push_back(gradcheck_backbone(cfg, kind, C, B, mix_seed(seed, layers, kind == BankKind::Shared ? 0 : 1)));
    }
  }
  out.push_back(gradcheck_residual(C, L, H, /*hidden=*/3, /*rank=*/2, B, mix_seed(seed, 99)));
  return out;
}

}  // namespace stair
