#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stair/residual.hpp"
#include "test_util.hpp"

using namespace stair;
using testutil::random_batch;

namespace {

// Numeric row rank via modified Gram-Schmidt.
std::size_t numeric_rank(std::vector<double> m, std::size_t rows, std::size_t cols, double tol) {
  std::size_t rank = 0;
  std::vector<std::vector<double>> basis;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> v(m.begin() + r * cols, m.begin() + (r + 1) * cols);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += v[j] * b[j];
      for (std::size_t j = 0; j < cols; ++j) v[j] -= dot * b[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > tol) {
      for (auto& x : v) x /= norm;
      basis.push_back(std::move(v));
      ++rank;
    }
  }
  return rank;
}

}  // namespace

TEST_CASE("zero-initialized decoder gives an exactly zero residual") {
  auto params = init_residual<float>(5, 24, 12, 8, 3, 1.0f, 7);
  auto x = random_batch<float>(5, 4, 24, 8, -3.0, 3.0);
  ResidualCache<float> cache;
  SeqBatch<float> r;
  forward_residual(params, x, cache, r);
  for (float v : r.data) CHECK(v == 0.0f);
}

TEST_CASE("parameter counting and linear growth in C") {
  auto p = init_residual<float>(7, 96, 720, 32, 32, 1.0f, 1);
  CHECK(p.parameter_count() == 96 * 32 + 32 + 2 * 7 * 32 + 32 * 720 + 720);
  // mixing parameters grow linearly: 2*C*r
  auto p2 = init_residual<float>(14, 96, 720, 32, 32, 1.0f, 1);
  CHECK((p2.u.size() + p2.v.size()) == 2 * (p.u.size() + p.v.size()));
  CHECK(p2.u.size() + p2.v.size() == 2 * 14 * 32);
}

TEST_CASE("init determinism and validation") {
  auto a = init_residual<double>(4, 16, 8, 6, 2, 1.0, 99);
  auto b = init_residual<double>(4, 16, 8, 6, 2, 1.0, 99);
  CHECK(a.u.value == b.u.value);
  CHECK(a.v.value == b.v.value);
  CHECK(a.enc_w.value == b.enc_w.value);
  CHECK_THROWS_AS(init_residual<double>(1, 16, 8, 6, 2, 1.0, 99), std::invalid_argument);
  CHECK_THROWS_AS(init_residual<double>(4, 16, 8, 0, 2, 1.0, 99), std::invalid_argument);
}

TEST_CASE("diagonal removal: residual of channel c ignores channel c's input") {
  auto params = init_residual<float>(4, 16, 8, 6, 3, 1.0f, 11);
  // give the decoder real values so the residual is nonzero
  auto dec = testutil::random_vec<float>(params.dec_w.size(), 12, -0.5, 0.5);
  params.dec_w.value = dec;

  auto x = random_batch<float>(4, 3, 16, 13);
  ResidualCache<float> cache;
  SeqBatch<float> r0, r1;
  forward_residual(params, x, cache, r0);
  for (std::size_t c = 0; c < 4; ++c) {
    auto xp = x;
    auto noise = testutil::random_vec<float>(3 * 16, 50 + c, -2.0, 2.0);
    std::copy(noise.begin(), noise.end(), xp.plane(c));
    forward_residual(params, xp, cache, r1);
    // channel c's residual is bitwise unchanged; some other channel moved
    CHECK(std::equal(r0.plane(c), r0.plane(c) + 3 * 8, r1.plane(c)));
    bool others_moved = false;
    for (std::size_t j = 0; j < 4 && !others_moved; ++j) {
      if (j == c) continue;
      others_moved = !std::equal(r0.plane(j), r0.plane(j) + 3 * 8, r1.plane(j));
    }
    CHECK(others_moved);
  }
}

TEST_CASE("two-channel hand case: swap mixing routes the other channel through") {
  // encoder = identity (d_h = L), decoder = identity (H = d_h), M = [[0,1],[1,0]]
  const std::size_t L = 6;
  auto params = init_residual<double>(2, L, L, L, 2, 1.0, 17);
  std::fill(params.enc_w.value.begin(), params.enc_w.value.end(), 0.0);
  std::fill(params.enc_b.value.begin(), params.enc_b.value.end(), 0.0);
  std::fill(params.dec_w.value.begin(), params.dec_w.value.end(), 0.0);
  std::fill(params.dec_b.value.begin(), params.dec_b.value.end(), 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    params.enc_w.value[i * L + i] = 1.0;
    params.dec_w.value[i * L + i] = 1.0;
  }
  // U = I2, V = [[0,1],[1,0]] -> U V^T = [[0,1],[1,0]], diagonal already zero
  params.u.value = {1.0, 0.0, 0.0, 1.0};
  params.v.value = {0.0, 1.0, 1.0, 0.0};

  auto x = random_batch<double>(2, 3, L, 18);
  ResidualCache<double> cache;
  SeqBatch<double> r;
  forward_residual(params, x, cache, r);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      CHECK(r.at(0, b, t) == doctest::Approx(x.at(1, b, t)).epsilon(1e-12));
      CHECK(r.at(1, b, t) == doctest::Approx(x.at(0, b, t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixing matrix is U V^T with a zero diagonal, rank at most r") {
  const std::size_t C = 6, r = 2;
  auto params = init_residual<double>(C, 8, 4, 3, r, 1.0, 23);
  auto m = params.mixing_matrix();
  for (std::size_t c = 0; c < C; ++c) CHECK(m[c * C + c] == 0.0);

  // the low-rank relation matrix itself has rank <= r
  std::vector<double> uvt(C * C, 0.0);
  kern::matmul_nt(params.u.value.data(), params.v.value.data(), nullptr, uvt.data(), C, C, r);
  CHECK(numeric_rank(uvt, C, C, 1e-6) <= r);
}

TEST_CASE("backward: zero upstream gradient leaves all gradients zero") {
  auto params = init_residual<double>(3, 8, 4, 3, 2, 1.0, 29);
  auto x = random_batch<double>(3, 2, 8, 30);
  ResidualCache<double> cache;
  SeqBatch<double> r;
  forward_residual(params, x, cache, r);
  SeqBatch<double> dr(3, 2, 4);  // zeros
  params.zero_grad();
  backward_residual(params, cache, dr);
  for (const auto* blk : params.blocks()) {
    for (double g : blk->grad) CHECK(g == 0.0);
  }
}

TEST_CASE("scale multiplies the residual and its gradient") {
  auto base = init_residual<double>(3, 8, 4, 3, 2, 1.0, 31);
  auto dec = testutil::random_vec<double>(base.dec_w.size(), 32, -0.5, 0.5);
  base.dec_w.value = dec;
  auto scaled = base;
  scaled.scale = 2.5;

  auto x = random_batch<double>(3, 2, 8, 33);
  ResidualCache<double> c1, c2;
  SeqBatch<double> r1, r2;
  forward_residual(base, x, c1, r1);
  forward_residual(scaled, x, c2, r2);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(r2.data[i] == doctest::Approx(2.5 * r1.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("shape validation") {
  auto params = init_residual<float>(3, 8, 4, 3, 2, 1.0f, 37);
  auto bad_channels = random_batch<float>(4, 2, 8, 38);
  ResidualCache<float> cache;
  SeqBatch<float> r;
  CHECK_THROWS_AS(forward_residual(params, bad_channels, cache, r), std::invalid_argument);
  auto bad_len = random_batch<float>(3, 2, 9, 38);
  CHECK_THROWS_AS(forward_residual(params, bad_len, cache, r), std::invalid_argument);
}
