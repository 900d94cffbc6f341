#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stair/backbone.hpp"
#include "stair/dataio.hpp"
#include "stair/metrics.hpp"
#include "stair/norm.hpp"
#include "stair/optim.hpp"
#include "stair/residual.hpp"

// Three-stage training: a shared temporal mapping, per-channel fine-tuning
// initialized from it, and a frozen-backbone cross-variable residual. Every
// stage trains with MSE on denormalized predictions against the
// dataset-standardized targets, selects its best checkpoint by validation
// MSE, and starts exactly where the previous stage ended (clone and zero-init
// contracts), so a stage can never finish worse than its predecessor.

namespace stair {

struct StageOptim {
  OptimConfig optim;
  int epochs = 20;
  int patience = 10;
  double anchor = 1e-4;  // stage 2 anchor coefficient
};

struct StageReport {
  int stage = 1;
  double initial_val_mse = 0.0;  // before any update in this stage
  double initial_val_mae = 0.0;
  std::vector<double> train_loss;  // one entry per trained epoch
  std::vector<double> val_mse;
  std::vector<double> val_mae;
  int best_epoch = 0;  // 0 = the stage's initial state
  double best_val_mse = 0.0;
  double best_val_mae = 0.0;
  double test_mse = 0.0;
  double test_mae = 0.0;
  double wall_time_s = 0.0;  // informational; excluded from report files
};

// Lowest validation MSE wins; ties break to lower validation MAE, then to
// the lower stage number.
inline int select_stage(const std::vector<StageReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("select_stage: no reports");
  int best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const auto& cand = reports[i];
    const auto& cur = reports[best];
    if (cand.best_val_mse < cur.best_val_mse ||
        (cand.best_val_mse == cur.best_val_mse && cand.best_val_mae < cur.best_val_mae)) {
      best = static_cast<int>(i);
    }
  }
  return reports[best].stage;
}

struct NormSpec {
  NormMode mode = NormMode::Full;
  double alpha = 0.99;
};

template <class T>
struct StageData {
  WindowSet<T> train;
  WindowSet<T> val;
  WindowSet<T> test;
};

// Split, standardize with a train-fitted scaler and window a series.
template <class T>
StageData<T> prepare_stage_data(const RawSeries& series, SplitProtocol protocol,
                                std::size_t lookback, std::size_t horizon) {
  Splits splits = split(series, {protocol, lookback});
  const Scaler scaler = Scaler::fit(splits.train);
  scaler.apply(splits.train);
  scaler.apply(splits.val);
  scaler.apply(splits.test);
  StageData<T> data;
  data.train = WindowSet<T>::from_segment(splits.train, lookback, horizon);
  data.val = WindowSet<T>::from_segment(splits.val, lookback, horizon);
  data.test = WindowSet<T>::from_segment(splits.test, lookback, horizon);
  return data;
}

template <class T>
struct PredictionDump {
  std::size_t windows = 0;
  std::size_t horizon = 0;
  std::size_t channels = 0;
  std::vector<T> preds;    // window-major N x H x C
  std::vector<T> targets;  // window-major N x H x C
};

template <class T>
class StagedTrainer {
 public:
  StagedTrainer(const StageData<T>* data, NormSpec norm, std::size_t batch_size,
                std::uint64_t seed)
      : data_(data), norm_(norm), batch_size_(batch_size), seed_(seed) {
    if (batch_size_ == 0) throw std::invalid_argument("trainer: batch size must be positive");
  }

  struct Stage1Result {
    ParamBank<T> bank;
    StageReport report;
  };
  struct Stage2Result {
    ParamBank<T> bank;
    StageReport report;
  };
  struct Stage3Result {
    ResidualParams<T> residual;
    StageReport report;
  };

  Stage1Result run_stage1(const BackboneConfig& config, const StageOptim& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    ParamBank<T> bank = init_shared<T>(config, mix_seed(seed_, 1));
    StageReport report;
    report.stage = 1;
    train_bank(bank, opt, /*anchor=*/nullptr, /*stage_tag=*/1, report);
    const Metrics test = evaluate_bank(bank, data_->test);
    report.test_mse = test.mse;
    report.test_mae = test.mae;
    report.wall_time_s = seconds_since(t0);
    return {std::move(bank), std::move(report)};
  }

  Stage2Result run_stage2(const ParamBank<T>& stage1_bank, const StageOptim& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    ParamBank<T> bank = clone_to_individual(stage1_bank, data_->train.channels());
    const auto anchor = stage1_bank.snapshot_values();
    StageReport report;
    report.stage = 2;
    train_bank(bank, opt, &anchor, /*stage_tag=*/2, report);
    const Metrics test = evaluate_bank(bank, data_->test);
    report.test_mse = test.mse;
    report.test_mae = test.mae;
    report.wall_time_s = seconds_since(t0);
    return {std::move(bank), std::move(report)};
  }

  Stage3Result run_stage3(const ParamBank<T>& stage2_bank, const StageOptim& opt,
                          std::size_t hidden, std::size_t rank, T scale) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t C = data_->train.channels();
    ResidualParams<T> res = init_residual<T>(C, data_->train.lookback, data_->train.horizon,
                                             hidden, rank, scale, mix_seed(seed_, 3));
    StageReport report;
    report.stage = 3;

    Metrics val = evaluate_composite(stage2_bank, res, data_->val);
    report.initial_val_mse = val.mse;
    report.initial_val_mae = val.mae;
    report.best_epoch = 0;
    report.best_val_mse = val.mse;
    report.best_val_mae = val.mae;
    auto best = res.snapshot_values();

    BackboneCache<T> bcache;
    ResidualCache<T> rcache;
    SeqBatch<T> xn, y2, r_out, yhat, grad;
    std::int64_t step = 0;
    int bad_epochs = 0;
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
      double loss_sum = 0.0;
      std::size_t loss_n = 0;
      BatchIter<T> iter(data_->train, batch_size_, /*shuffle=*/true,
                        mix_seed(seed_, 3, static_cast<std::uint64_t>(epoch)));
      WindowBatch<T> batch;
      while (iter.next(batch)) {
        const auto state = fit_instance_stats(batch.inputs, norm_.alpha, norm_.mode);
        normalize_into(batch.inputs, state, xn);
        forward(stage2_bank, xn, /*train_mode=*/false, 0, bcache, y2);
        forward_residual(res, xn, rcache, r_out);
        kern::add_inplace(r_out.data.data(), y2.data.data(), r_out.size());
        denormalize_into(r_out, state, yhat);
        const double loss = mse_loss(yhat, batch.targets, grad);
        loss_sum += loss * static_cast<double>(grad.size());
        loss_n += grad.size();
        denormalize_backward_inplace(grad, state);
        res.zero_grad();
        backward_residual(res, rcache, grad);
        clip_global_norm(res.blocks(), opt.optim.clip_norm);
        adam_step(res.blocks(), opt.optim, ++step);
      }
      report.train_loss.push_back(loss_sum / static_cast<double>(loss_n));
      val = evaluate_composite(stage2_bank, res, data_->val);
      report.val_mse.push_back(val.mse);
      report.val_mae.push_back(val.mae);
      if (val.mse < report.best_val_mse) {
        report.best_val_mse = val.mse;
        report.best_val_mae = val.mae;
        report.best_epoch = epoch;
        best = res.snapshot_values();
        bad_epochs = 0;
      } else {
        ++bad_epochs;
      }
      if (bad_epochs >= opt.patience) break;
    }
    res.restore_values(best);
    const Metrics test = evaluate_composite(stage2_bank, res, data_->test);
    report.test_mse = test.mse;
    report.test_mae = test.mae;
    report.wall_time_s = seconds_since(t0);
    return {std::move(res), std::move(report)};
  }

  // Evaluation-space metrics of a bank over a window set.
  Metrics evaluate_bank(const ParamBank<T>& bank, const WindowSet<T>& ws) const {
    return evaluate_impl(&bank, nullptr, ws, nullptr);
  }

  Metrics evaluate_composite(const ParamBank<T>& bank, const ResidualParams<T>& res,
                             const WindowSet<T>& ws) const {
    return evaluate_impl(&bank, &res, ws, nullptr);
  }

  PredictionDump<T> predict(const ParamBank<T>& bank, const ResidualParams<T>* res,
                            const WindowSet<T>& ws) const {
    PredictionDump<T> dump;
    evaluate_impl(&bank, res, ws, &dump);
    return dump;
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  // Shared loop for stages 1 and 2. When `anchor` is set the bank is
  // individual and the squared-L2 anchor penalty joins the objective; its
  // gradient is added before clipping so the clip bound covers the total.
  void train_bank(ParamBank<T>& bank, const StageOptim& opt,
                  const std::vector<std::vector<T>>* anchor, std::uint64_t stage_tag,
                  StageReport& report) {
    Metrics val = evaluate_bank(bank, data_->val);
    report.initial_val_mse = val.mse;
    report.initial_val_mae = val.mae;
    report.best_epoch = 0;
    report.best_val_mse = val.mse;
    report.best_val_mae = val.mae;
    auto best = bank.snapshot_values();

    BackboneCache<T> cache;
    SeqBatch<T> xn, yn, yhat, grad;
    std::int64_t step = 0;
    int bad_epochs = 0;
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
      double loss_sum = 0.0;
      std::size_t loss_n = 0;
      BatchIter<T> iter(data_->train, batch_size_, /*shuffle=*/true,
                        mix_seed(seed_, stage_tag, static_cast<std::uint64_t>(epoch)));
      WindowBatch<T> batch;
      std::uint64_t batch_idx = 0;
      while (iter.next(batch)) {
        const auto state = fit_instance_stats(batch.inputs, norm_.alpha, norm_.mode);
        normalize_into(batch.inputs, state, xn);
        const std::uint64_t dropout_seed =
            mix_seed(mix_seed(seed_, stage_tag, static_cast<std::uint64_t>(epoch)), ++batch_idx);
        forward(bank, xn, /*train_mode=*/true, dropout_seed, cache, yn);
        denormalize_into(yn, state, yhat);
        double loss = mse_loss(yhat, batch.targets, grad);
        denormalize_backward_inplace(grad, state);
        bank.zero_grad();
        backward(bank, cache, grad);
        if (anchor) loss += anchor_penalty(bank, *anchor, opt.anchor);
        loss_sum += loss * static_cast<double>(grad.size());
        loss_n += grad.size();
        clip_global_norm(bank.blocks(), opt.optim.clip_norm);
        adam_step(bank.blocks(), opt.optim, ++step);
      }
      report.train_loss.push_back(loss_sum / static_cast<double>(loss_n));
      val = evaluate_bank(bank, data_->val);
      report.val_mse.push_back(val.mse);
      report.val_mae.push_back(val.mae);
      if (val.mse < report.best_val_mse) {
        report.best_val_mse = val.mse;
        report.best_val_mae = val.mae;
        report.best_epoch = epoch;
        best = bank.snapshot_values();
        bad_epochs = 0;
      } else {
        ++bad_epochs;
      }
      if (bad_epochs >= opt.patience) break;
    }
    bank.restore_values(best);
  }

  Metrics evaluate_impl(const ParamBank<T>* bank, const ResidualParams<T>* res,
                        const WindowSet<T>& ws, PredictionDump<T>* dump) const {
    MetricAccumulator acc;
    BackboneCache<T> cache;
    ResidualCache<T> rcache;
    SeqBatch<T> xn, yn, r_out, yhat;
    BatchIter<T> iter(ws, batch_size_, /*shuffle=*/false, 0);
    WindowBatch<T> batch;
    if (dump) {
      dump->windows = ws.count();
      dump->horizon = ws.horizon;
      dump->channels = ws.cols;
      dump->preds.resize(ws.count() * ws.horizon * ws.cols);
      dump->targets.resize(ws.count() * ws.horizon * ws.cols);
    }
    std::size_t window_base = 0;
    while (iter.next(batch)) {
      const auto state = fit_instance_stats(batch.inputs, norm_.alpha, norm_.mode);
      normalize_into(batch.inputs, state, xn);
      forward(*bank, xn, /*train_mode=*/false, 0, cache, yn);
      if (res) {
        forward_residual(*res, xn, rcache, r_out);
        kern::add_inplace(yn.data.data(), r_out.data.data(), yn.size());
      }
      denormalize_into(yn, state, yhat);
      acc.add(yhat, batch.targets);
      if (dump) {
        const std::size_t H = ws.horizon, C = ws.cols;
        for (std::size_t b = 0; b < batch.targets.batch; ++b) {
          const std::size_t w = window_base + b;
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t h = 0; h < H; ++h) {
              dump->preds[(w * H + h) * C + c] = yhat.at(c, b, h);
              dump->targets[(w * H + h) * C + c] = batch.targets.at(c, b, h);
            }
          }
        }
      }
      window_base += batch.targets.batch;
    }
    return acc.finalize();
  }

  const StageData<T>* data_;
  NormSpec norm_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

}  // namespace stair
