#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "stair/common.hpp"

namespace stair {

// Multivariate series as loaded from disk or generated: rows x cols values in
// row-major (time-major) order, one name per data column. The date column of
// CSV files is validated and discarded.
struct RawSeries {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major rows x cols
  std::vector<std::string> names;
  std::string source;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Loads a benchmark CSV: UTF-8, header row, first column named "date"
// (ignored), remaining columns numeric. Throws with row/column location on
// missing files, ragged rows and non-numeric or non-finite cells.
RawSeries load_csv(const std::string& path);

// Writes a series in the same layout (date column = 0-based row index),
// with enough digits that a reload reproduces the values exactly.
void write_csv(const RawSeries& series, const std::string& path);

enum class SplitProtocol { EttHourly, EttMinutely, Ratio712 };

SplitProtocol protocol_from_string(const std::string& s);
std::string to_string(SplitProtocol p);

struct SplitSpec {
  SplitProtocol protocol = SplitProtocol::Ratio712;
  std::size_t lookback = 96;
};

struct Segment {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct Splits {
  Segment train;
  Segment val;   // first `lookback` rows overlap the end of train
  Segment test;  // first `lookback` rows overlap the end of val
};

// ETT protocols use fixed month boundaries (12/4/4 months of 30 days at 24 or
// 96 samples per day) and ignore any rows past the last boundary; the ratio
// protocol covers the whole series with a 70/10/20 contiguous split. Val and
// test are prepended with the last `lookback` rows of the preceding segment
// so their first prediction window starts at the split boundary.
Splits split(const RawSeries& series, const SplitSpec& spec);

// Per-variable standardization fitted on the train segment only. Population
// std, floored at 1e-8; constant columns are flagged and transform to zero.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std_dev;
  std::vector<std::size_t> constant_columns;

  static Scaler fit(const Segment& train);
  void apply(Segment& seg) const;
  void invert(Segment& seg) const;
};

inline constexpr double kScalerStdFloor = 1e-8;

// Immutable view over a standardized segment from which (lookback, horizon)
// windows are drawn. Window w covers input rows [w, w+L) and target rows
// [w+L, w+L+H). Safe to share across readers.
template <class T>
struct WindowSet {
  std::size_t lookback = 0;
  std::size_t horizon = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;  // row-major rows x cols

  static WindowSet from_segment(const Segment& seg, std::size_t lookback, std::size_t horizon) {
    if (seg.rows < lookback + horizon) {
      throw std::invalid_argument("make_windows: segment length " + std::to_string(seg.rows) +
                                  " < lookback + horizon = " +
                                  std::to_string(lookback + horizon));
    }
    WindowSet ws;
    ws.lookback = lookback;
    ws.horizon = horizon;
    ws.rows = seg.rows;
    ws.cols = seg.cols;
    ws.values.resize(seg.values.size());
    std::transform(seg.values.begin(), seg.values.end(), ws.values.begin(),
                   [](double v) { return static_cast<T>(v); });
    return ws;
  }

  std::size_t count() const { return rows - lookback - horizon + 1; }
  std::size_t channels() const { return cols; }
};

template <class T>
struct WindowBatch {
  SeqBatch<T> inputs;   // C x B x L
  SeqBatch<T> targets;  // C x B x H
  std::vector<std::size_t> start;  // window-start offsets, length B
};

// One epoch over a WindowSet in batches of size B. With shuffle off the order
// is ascending by start index; with shuffle on it is a seeded permutation.
// Each iterator owns its RNG, so independent iterators never interact.
template <class T>
class BatchIter {
 public:
  BatchIter(const WindowSet<T>& ws, std::size_t batch_size, bool shuffle, std::uint64_t seed)
      : ws_(&ws), batch_(batch_size) {
    if (batch_ == 0) throw std::invalid_argument("batch_iter: batch size must be positive");
    order_.resize(ws.count());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (shuffle) {
      std::mt19937_64 rng(seed);
      std::shuffle(order_.begin(), order_.end(), rng);
    }
  }

  std::size_t num_batches() const { return (order_.size() + batch_ - 1) / batch_; }

  void reset() { pos_ = 0; }

  bool next(WindowBatch<T>& out) {
    if (pos_ >= order_.size()) return false;
    const std::size_t b = std::min(batch_, order_.size() - pos_);
    const std::size_t C = ws_->cols;
    const std::size_t L = ws_->lookback;
    const std::size_t H = ws_->horizon;
    out.inputs = SeqBatch<T>(C, b, L);
    out.targets = SeqBatch<T>(C, b, H);
    out.start.assign(order_.begin() + pos_, order_.begin() + pos_ + b);
    const T* src = ws_->values.data();
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t s = out.start[i];
      for (std::size_t c = 0; c < C; ++c) {
        T* in_row = out.inputs.row(c, i);
        for (std::size_t t = 0; t < L; ++t) in_row[t] = src[(s + t) * C + c];
        T* tg_row = out.targets.row(c, i);
        for (std::size_t t = 0; t < H; ++t) tg_row[t] = src[(s + L + t) * C + c];
      }
    }
    pos_ += b;
    return true;
  }

 private:
  const WindowSet<T>* ws_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> order_;
};

// Synthetic series with controllable structure: each channel follows an
// order-p linear autoregression with channel-specific coefficients, plus
// `coupling` times a linear function of the other channels' lags, plus
// Gaussian noise. coupling = 0 leaves channels independent given their own
// histories. When coupling > 0 the own-lag coefficients are rescaled so the
// joint recursion stays stable.
struct SyntheticSpec {
  std::size_t channels = 4;
  std::size_t length = 4000;
  std::size_t order = 4;
  std::string rule = "shared";  // shared | individual
  std::vector<std::vector<double>> coeffs;  // optional: 1 row (broadcast) or C rows
  double coupling = 0.0;  // kappa >= 0
  double noise = 0.1;     // standard deviation
  std::uint64_t seed = 2026;

  void validate() const;
};

RawSeries gen_synthetic(const SyntheticSpec& spec);

// The per-channel lag coefficients the generator resolved (for tests and for
// computing residuals of the true recursion).
std::vector<std::vector<double>> synthetic_coefficients(const SyntheticSpec& spec);

}  // namespace stair
