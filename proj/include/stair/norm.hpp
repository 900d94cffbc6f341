#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stair/common.hpp"
#include "stair/kernels.hpp"

// Partial reversible instance normalization. For each input window and each
// channel, a strength alpha in [0,1] controls how much of the window's mean
// and scale is removed:
//
//   full:      x~ = (x - alpha*mu) / sigma^alpha,  y^ = y~ * sigma^alpha + alpha*mu
//   mean_only: x~ = x - alpha*mu                   (sigma^alpha treated as 1)
//   std_only:  x~ = x / sigma^alpha                (alpha*mu treated as 0)
//   none:      identity
//
// alpha = 1 in full mode is classical RevIN without affine parameters;
// alpha = 0 or mode none is the identity. Statistics come from the input
// window only and are reused to invert the prediction window.

namespace stair {

enum class NormMode { Full, MeanOnly, StdOnly, None };

NormMode norm_mode_from_string(const std::string& s);
std::string to_string(NormMode m);

template <class T>
struct NormState {
  NormMode mode = NormMode::Full;
  double alpha = 0.0;
  std::size_t channels = 0;
  std::size_t batch = 0;
  // Indexed [c * batch + b], matching SeqBatch plane order.
  std::vector<T> mu;
  std::vector<T> sigma;        // sqrt(var + kVarEpsilon), always > 0
  std::vector<T> sigma_alpha;  // exp(alpha * log(sigma)); 1 for mean_only/none
  std::vector<T> shift;        // alpha * mu; 0 for std_only/none

  std::size_t idx(std::size_t c, std::size_t b) const { return c * batch + b; }
};

// Epsilon added inside the variance before the square root, so constant
// windows normalize to zero instead of NaN.
inline constexpr double kVarEpsilon = 1e-5;

template <class T>
NormState<T> fit_instance_stats(const SeqBatch<T>& inputs, double alpha, NormMode mode) {
  if (inputs.len == 0) throw std::invalid_argument("fit_instance_stats: empty window");
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("fit_instance_stats: alpha must be in [0,1]");
  }
  NormState<T> st;
  st.mode = mode;
  st.alpha = alpha;
  st.channels = inputs.channels;
  st.batch = inputs.batch;
  const std::size_t n = inputs.channels * inputs.batch;
  st.mu.resize(n);
  st.sigma.resize(n);
  st.sigma_alpha.assign(n, T(1));
  st.shift.assign(n, T(0));
  const bool want_scale = (mode == NormMode::Full || mode == NormMode::StdOnly);
  const bool want_shift = (mode == NormMode::Full || mode == NormMode::MeanOnly);
  for (std::size_t c = 0; c < inputs.channels; ++c) {
    for (std::size_t b = 0; b < inputs.batch; ++b) {
      double mean = 0.0, var = 0.0;
      kern::mean_var(inputs.row(c, b), inputs.len, mean, var);
      const double sigma = std::sqrt(var + kVarEpsilon);
      const std::size_t i = st.idx(c, b);
      st.mu[i] = static_cast<T>(mean);
      st.sigma[i] = static_cast<T>(sigma);
      if (want_scale) st.sigma_alpha[i] = static_cast<T>(std::exp(alpha * std::log(sigma)));
      if (want_shift) st.shift[i] = static_cast<T>(alpha * mean);
    }
  }
  return st;
}

namespace detail {

template <class T>
void check_state(const SeqBatch<T>& x, const NormState<T>& st, const char* what) {
  if (x.channels != st.channels || x.batch != st.batch) {
    throw std::invalid_argument(std::string(what) + ": state fitted for (" +
                                std::to_string(st.channels) + "," + std::to_string(st.batch) +
                                ") instances, got (" + std::to_string(x.channels) + "," +
                                std::to_string(x.batch) + ")");
  }
}

}  // namespace detail

// dst = normalized x. dst may alias x.
template <class T>
void normalize_into(const SeqBatch<T>& x, const NormState<T>& st, SeqBatch<T>& dst) {
  detail::check_state(x, st, "normalize");
  dst.channels = x.channels;
  dst.batch = x.batch;
  dst.len = x.len;
  dst.data.resize(x.size());
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t b = 0; b < x.batch; ++b) {
      const std::size_t i = st.idx(c, b);
      const T inv = T(1) / st.sigma_alpha[i];
      // (x - shift) * inv expressed as a single affine pass
      kern::affine(dst.row(c, b), x.row(c, b), inv, -st.shift[i] * inv, x.len);
    }
  }
}

template <class T>
SeqBatch<T> normalize(const SeqBatch<T>& x, const NormState<T>& st) {
  SeqBatch<T> out;
  normalize_into(x, st, out);
  return out;
}

// Inverts normalize on the prediction window (any len), reusing input-window
// statistics: y^ = y~ * sigma^alpha + alpha*mu per mode.
template <class T>
void denormalize_into(const SeqBatch<T>& y, const NormState<T>& st, SeqBatch<T>& dst) {
  detail::check_state(y, st, "denormalize");
  dst.channels = y.channels;
  dst.batch = y.batch;
  dst.len = y.len;
  dst.data.resize(y.size());
  for (std::size_t c = 0; c < y.channels; ++c) {
    for (std::size_t b = 0; b < y.batch; ++b) {
      const std::size_t i = st.idx(c, b);
      kern::affine(dst.row(c, b), y.row(c, b), st.sigma_alpha[i], st.shift[i], y.len);
    }
  }
}

template <class T>
SeqBatch<T> denormalize(const SeqBatch<T>& y, const NormState<T>& st) {
  SeqBatch<T> out;
  denormalize_into(y, st, out);
  return out;
}

// d(loss)/d(y~) = d(loss)/d(y^) * sigma^alpha, in place. The alpha*mu shift
// has zero derivative.
template <class T>
void denormalize_backward_inplace(SeqBatch<T>& grad, const NormState<T>& st) {
  detail::check_state(grad, st, "denormalize_backward");
  for (std::size_t c = 0; c < grad.channels; ++c) {
    for (std::size_t b = 0; b < grad.batch; ++b) {
      kern::scale_inplace(grad.row(c, b), st.sigma_alpha[st.idx(c, b)], grad.len);
    }
  }
}

}  // namespace stair
