#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stair/backbone.hpp"
#include "stair/common.hpp"
#include "stair/kernels.hpp"

// Cross-variable residual adapter: a per-channel linear encoder L -> d_h
// shared across channels, low-rank channel mixing M = U V^T with the diagonal
// zeroed so each channel's residual depends only on the other channels, and a
// linear decoder d_h -> H that starts at exactly zero. With the zero decoder
// the adapter contributes nothing, so a composite prediction at step 0 equals
// the backbone prediction bitwise.

namespace stair {

template <class T>
struct ResidualParams {
  std::size_t channels = 0;
  std::size_t input_len = 0;
  std::size_t horizon = 0;
  std::size_t hidden = 0;  // d_h
  std::size_t rank = 0;    // r
  T scale = T(1);          // fixed residual scale s, not learned

  ParamBlock<T> enc_w;  // d_h x L
  ParamBlock<T> enc_b;  // d_h
  ParamBlock<T> u;      // C x r
  ParamBlock<T> v;      // C x r
  ParamBlock<T> dec_w;  // H x d_h, zero-initialized
  ParamBlock<T> dec_b;  // H, zero-initialized

  std::vector<ParamBlock<T>*> blocks() { return {&enc_w, &enc_b, &u, &v, &dec_w, &dec_b}; }
  std::vector<const ParamBlock<T>*> blocks() const {
    return {&enc_w, &enc_b, &u, &v, &dec_w, &dec_b};
  }

  void zero_grad() {
    for (auto* blk : blocks()) std::fill(blk->grad.begin(), blk->grad.end(), T(0));
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* blk : blocks()) n += blk->size();
    return n;
  }

  std::vector<std::vector<T>> snapshot_values() const {
    std::vector<std::vector<T>> out;
    for (const auto* blk : blocks()) out.push_back(blk->value);
    return out;
  }

  void restore_values(const std::vector<std::vector<T>>& snap) {
    auto blks = blocks();
    if (snap.size() != blks.size()) throw std::invalid_argument("restore_values: block count mismatch");
    for (std::size_t i = 0; i < blks.size(); ++i) blks[i]->value = snap[i];
  }

  // The C x C mixing matrix actually applied: U V^T with a zeroed diagonal.
  std::vector<T> mixing_matrix() const {
    std::vector<T> m(channels * channels, T(0));
    kern::matmul_nt(u.value.data(), v.value.data(), nullptr, m.data(), channels, channels, rank);
    for (std::size_t c = 0; c < channels; ++c) m[c * channels + c] = T(0);
    return m;
  }
};

template <class T>
ResidualParams<T> init_residual(std::size_t channels, std::size_t input_len, std::size_t horizon,
                                std::size_t hidden, std::size_t rank, T scale,
                                std::uint64_t seed) {
  if (channels < 2) {
    throw std::invalid_argument("init_residual: cross-variable mixing needs at least 2 channels");
  }
  if (hidden < 1 || rank < 1) {
    throw std::invalid_argument("init_residual: hidden and rank must be >= 1");
  }
  ResidualParams<T> p;
  p.channels = channels;
  p.input_len = input_len;
  p.horizon = horizon;
  p.hidden = hidden;
  p.rank = rank;
  p.scale = scale;
  p.enc_w.allocate("residual.enc.w", {hidden, input_len});
  p.enc_b.allocate("residual.enc.b", {hidden});
  p.u.allocate("residual.u", {channels, rank});
  p.v.allocate("residual.v", {channels, rank});
  p.dec_w.allocate("residual.dec.w", {horizon, hidden});
  p.dec_b.allocate("residual.dec.b", {horizon});

  std::mt19937_64 rng(mix_seed(seed, 0x7e51d));
  auto fill_uniform = [&rng](std::vector<T>& dst, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& x : dst) x = static_cast<T>(dist(rng));
  };
  fill_uniform(p.enc_w.value, input_len);
  fill_uniform(p.enc_b.value, input_len);
  fill_uniform(p.u.value, rank);
  fill_uniform(p.v.value, rank);
  // dec_w / dec_b stay exactly zero
  return p;
}

template <class T>
struct ResidualCache {
  std::size_t channels = 0;
  std::size_t batch = 0;
  std::vector<T> x;      // (C*B) x L input rows
  std::vector<T> enc;    // (C*B) x d_h encoded rows, also viewed as C x (B*d_h)
  std::vector<T> mixed;  // (C*B) x d_h mixed rows
  std::vector<T> m;      // C x C masked mixing matrix
};

// R = scale * decoder( M_masked * encoder(X) ), per channel. The encoded
// planes form a C x (B*d_h) matrix, so channel mixing is one matrix product.
template <class T>
void forward_residual(const ResidualParams<T>& params, const SeqBatch<T>& x,
                      ResidualCache<T>& cache, SeqBatch<T>& r_out) {
  if (x.channels != params.channels) {
    throw std::invalid_argument("forward_residual: expected " + std::to_string(params.channels) +
                                " channels, got " + std::to_string(x.channels));
  }
  if (x.len != params.input_len) {
    throw std::invalid_argument("forward_residual: input length mismatch");
  }
  const std::size_t C = params.channels;
  const std::size_t B = x.batch;
  const std::size_t rows = C * B;
  const std::size_t dh = params.hidden;
  const std::size_t H = params.horizon;

  cache.channels = C;
  cache.batch = B;
  cache.x = x.data;
  cache.enc.assign(rows * dh, T(0));
  cache.mixed.assign(rows * dh, T(0));
  cache.m = params.mixing_matrix();

  kern::matmul_nt(cache.x.data(), params.enc_w.value.data(), params.enc_b.value.data(),
                  cache.enc.data(), rows, dh, params.input_len);
  kern::matmul_nn(cache.m.data(), cache.enc.data(), cache.mixed.data(), C, B * dh, C);

  r_out.channels = C;
  r_out.batch = B;
  r_out.len = H;
  r_out.data.assign(rows * H, T(0));
  kern::matmul_nt(cache.mixed.data(), params.dec_w.value.data(), params.dec_b.value.data(),
                  r_out.data.data(), rows, H, dh);
  if (params.scale != T(1)) kern::scale_inplace(r_out.data.data(), params.scale, rows * H);
}

// Gradients for encoder, U, V and decoder from d(loss)/dR. The masked
// diagonal is a constant, so no gradient flows through it; the backbone input
// receives no gradient (it is frozen whenever the adapter trains).
template <class T>
void backward_residual(ResidualParams<T>& params, const ResidualCache<T>& cache,
                       const SeqBatch<T>& dr) {
  const std::size_t C = params.channels;
  const std::size_t B = cache.batch;
  const std::size_t rows = C * B;
  const std::size_t dh = params.hidden;
  const std::size_t H = params.horizon;
  if (dr.channels != C || dr.batch != B || dr.len != H) {
    throw std::invalid_argument("backward_residual: gradient shape does not match cached forward");
  }
  if (cache.enc.size() != rows * dh) {
    throw std::invalid_argument("backward_residual: stale cache");
  }

  // d(decoder output) = scale * dR
  std::vector<T> ddec(dr.data);
  if (params.scale != T(1)) kern::scale_inplace(ddec.data(), params.scale, rows * H);

  kern::matmul_tn_acc(ddec.data(), cache.mixed.data(), params.dec_w.grad.data(), H, dh, rows);
  kern::colsum_acc(ddec.data(), params.dec_b.grad.data(), rows, H);

  std::vector<T> dmixed(rows * dh, T(0));
  kern::matmul_nn(ddec.data(), params.dec_w.value.data(), dmixed.data(), rows, dh, H);

  // mixed = M * enc over C x (B*dh):  dM = dmixed * enc^T,  denc = M^T * dmixed
  std::vector<T> dm(C * C, T(0));
  kern::matmul_nt(dmixed.data(), cache.enc.data(), nullptr, dm.data(), C, C, B * dh);
  for (std::size_t c = 0; c < C; ++c) dm[c * C + c] = T(0);

  kern::matmul_nn_acc(dm.data(), params.v.value.data(), params.u.grad.data(), C, params.rank, C);
  kern::matmul_tn_acc(dm.data(), params.u.value.data(), params.v.grad.data(), C, params.rank, C);

  std::vector<T> denc(rows * dh, T(0));
  kern::matmul_tn_acc(cache.m.data(), dmixed.data(), denc.data(), C, B * dh, C);

  kern::matmul_tn_acc(denc.data(), cache.x.data(), params.enc_w.grad.data(), dh,
                      params.input_len, rows);
  kern::colsum_acc(denc.data(), params.enc_b.grad.data(), rows, dh);
}

}  // namespace stair
