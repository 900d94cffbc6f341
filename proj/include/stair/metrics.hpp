#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "stair/common.hpp"

namespace stair {

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
};

// Flat means over all N*H*C entries of predictions already restored to the
// evaluation space. Non-finite predictions abort with the offending window
// indices.
template <class T>
Metrics compute_metrics(const std::vector<T>& preds, const std::vector<T>& targets,
                        std::size_t n_windows, std::size_t horizon, std::size_t channels) {
  const std::size_t total = n_windows * horizon * channels;
  if (preds.size() != total || targets.size() != total) {
    throw std::invalid_argument("compute_metrics: shape mismatch (expected " +
                                std::to_string(total) + " entries, got " +
                                std::to_string(preds.size()) + " preds / " +
                                std::to_string(targets.size()) + " targets)");
  }
  std::vector<std::size_t> bad;
  double sq = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    const double p = static_cast<double>(preds[i]);
    if (!std::isfinite(p)) {
      const std::size_t w = i / (horizon * channels);
      if (bad.empty() || bad.back() != w) bad.push_back(w);
      continue;
    }
    const double d = p - static_cast<double>(targets[i]);
    sq += d * d;
    ab += std::fabs(d);
  }
  if (!bad.empty()) {
    std::string msg = "compute_metrics: non-finite predictions in windows [";
    for (std::size_t i = 0; i < bad.size() && i < 16; ++i) {
      if (i) msg += ", ";
      msg += std::to_string(bad[i]);
    }
    if (bad.size() > 16) msg += ", ...";
    msg += "]";
    throw std::runtime_error(msg);
  }
  return {sq / static_cast<double>(total), ab / static_cast<double>(total)};
}

// Running accumulator used by evaluation loops; sums in double so the final
// metric is a flat mean over every entry regardless of batch boundaries.
struct MetricAccumulator {
  double sq = 0.0;
  double ab = 0.0;
  std::size_t n = 0;

  template <class T>
  void add(const SeqBatch<T>& pred, const SeqBatch<T>& target) {
    if (pred.size() != target.size()) {
      throw std::invalid_argument("metrics: prediction/target size mismatch");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
      sq += d * d;
      ab += std::fabs(d);
    }
    n += pred.size();
  }

  Metrics finalize() const {
    if (n == 0) throw std::runtime_error("metrics: no entries accumulated");
    return {sq / static_cast<double>(n), ab / static_cast<double>(n)};
  }
};

}  // namespace stair
