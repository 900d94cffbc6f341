#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stair/norm.hpp"
#include "test_util.hpp"

using namespace stair;
using testutil::random_batch;

namespace {

template <class T>
SeqBatch<T> single_channel(std::vector<T> vals) {
  SeqBatch<T> x(1, 1, vals.size());
  x.data = std::move(vals);
  return x;
}

}  // namespace

TEST_CASE("instance stats: hand arithmetic on [1,2,3]") {
  auto x = single_channel<double>({1.0, 2.0, 3.0});
  auto st = fit_instance_stats(x, 1.0, NormMode::Full);
  CHECK(st.mu[0] == doctest::Approx(2.0).epsilon(1e-12));
  // population std sqrt(2/3), epsilon inside the variance shifts it slightly
  CHECK(st.sigma[0] == doctest::Approx(0.816497).epsilon(1e-4));
}

TEST_CASE("instance stats: constant window floors sigma") {
  auto x = single_channel<double>({5.0, 5.0, 5.0, 5.0});
  auto st = fit_instance_stats(x, 1.0, NormMode::Full);
  CHECK(st.mu[0] == doctest::Approx(5.0));
  CHECK(st.sigma[0] == doctest::Approx(std::sqrt(kVarEpsilon)).epsilon(1e-12));
  CHECK(st.sigma[0] > 0.0);
  auto xn = normalize(x, st);
  for (double v : xn.data) CHECK(std::fabs(v) < 1e-9);
}

TEST_CASE("instance stats are per-instance") {
  SeqBatch<double> x(1, 2, 3);
  x.at(0, 0, 0) = 1.0; x.at(0, 0, 1) = 2.0; x.at(0, 0, 2) = 3.0;
  x.at(0, 1, 0) = 10.0; x.at(0, 1, 1) = 20.0; x.at(0, 1, 2) = 30.0;
  auto st = fit_instance_stats(x, 1.0, NormMode::Full);
  CHECK(st.mu[st.idx(0, 0)] == doctest::Approx(2.0));
  CHECK(st.mu[st.idx(0, 1)] == doctest::Approx(20.0));
}

TEST_CASE("normalize: alpha=0 and mode=none are exact identities") {
  auto x = random_batch<float>(3, 2, 16, 7, -4.0, 4.0);
  for (auto mode : {NormMode::Full, NormMode::MeanOnly, NormMode::StdOnly}) {
    auto st = fit_instance_stats(x, 0.0, mode);
    auto xn = normalize(x, st);
    CHECK(xn.data == x.data);
    auto xd = denormalize(xn, st);
    CHECK(xd.data == x.data);
  }
  auto st = fit_instance_stats(x, 0.99, NormMode::None);
  CHECK(normalize(x, st).data == x.data);
}

TEST_CASE("normalize: alpha=1 z-scores the window") {
  auto x = single_channel<double>({1.0, 2.0, 3.0});
  auto st = fit_instance_stats(x, 1.0, NormMode::Full);
  auto xn = normalize(x, st);
  CHECK(xn.data[0] == doctest::Approx(-1.224745).epsilon(1e-4));
  CHECK(xn.data[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(xn.data[2] == doctest::Approx(1.224745).epsilon(1e-4));
}

TEST_CASE("normalize: alpha=0.5 partial removal, sigma^alpha = exp(alpha ln sigma)") {
  auto x = single_channel<double>({1.0, 2.0, 3.0});
  auto st = fit_instance_stats(x, 0.5, NormMode::Full);
  auto xn = normalize(x, st);
  // (x - 0.5*2) / sigma^0.5
  CHECK(xn.data[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(xn.data[1] == doctest::Approx(1.106682).epsilon(1e-4));
  CHECK(xn.data[2] == doctest::Approx(2.213364).epsilon(1e-4));
}

TEST_CASE("denormalize maps zero to the removed mean at alpha=1") {
  auto x = single_channel<double>({1.0, 2.0, 3.0});
  auto st = fit_instance_stats(x, 1.0, NormMode::Full);
  SeqBatch<double> zeros(1, 1, 3);
  auto y = denormalize(zeros, st);
  for (double v : y.data) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("round trip: denormalize(normalize(x)) == x for every mode and alpha") {
  int trial = 0;
  for (auto mode : {NormMode::Full, NormMode::MeanOnly, NormMode::StdOnly, NormMode::None}) {
    for (double alpha : {0.0, 0.5, 0.95, 0.99, 1.0}) {
      auto xf = random_batch<float>(5, 4, 24, 100 + trial, -3.0, 3.0);
      auto stf = fit_instance_stats(xf, alpha, mode);
      auto back_f = denormalize(normalize(xf, stf), stf);
      double scale = 0.0;
      for (float v : xf.data) scale = std::max(scale, static_cast<double>(std::fabs(v)));
      CHECK(testutil::max_abs_diff(back_f.data, xf.data) < 1e-6 * std::max(1.0, scale));

      auto xd = random_batch<double>(5, 4, 24, 200 + trial, -3.0, 3.0);
      auto std_ = fit_instance_stats(xd, alpha, mode);
      auto back_d = denormalize(normalize(xd, std_), std_);
      CHECK(testutil::max_abs_diff(back_d.data, xd.data) < 1e-12);
      ++trial;
    }
  }
}

TEST_CASE("distance to input is continuous in alpha and zero at alpha=0") {
  auto x = random_batch<double>(2, 2, 32, 42, -2.0, 2.0);
  auto dist = [&](double alpha) {
    auto st = fit_instance_stats(x, alpha, NormMode::Full);
    auto xn = normalize(x, st);
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d += std::fabs(xn.data[i] - x.data[i]);
    return d;
  };
  CHECK(dist(0.0) == 0.0);
  double prev = 0.0;
  for (double alpha = 0.0; alpha <= 1.0; alpha += 1.0 / 128.0) {
    const double d = dist(alpha);
    CHECK(std::fabs(d - prev) < 1.0);  // no jumps on a fine grid
    prev = d;
  }
}

TEST_CASE("statistics depend only on the input window") {
  auto x = random_batch<double>(3, 2, 16, 9);
  auto st1 = fit_instance_stats(x, 0.99, NormMode::Full);
  auto st2 = fit_instance_stats(x, 0.99, NormMode::Full);
  CHECK(st1.mu == st2.mu);
  CHECK(st1.sigma == st2.sigma);
  // targets never enter the fit: there is no target argument to alter
}

TEST_CASE("mean_only keeps scale, std_only keeps level") {
  auto x = single_channel<double>({2.0, 4.0, 6.0});
  auto st_m = fit_instance_stats(x, 1.0, NormMode::MeanOnly);
  CHECK(st_m.sigma_alpha[0] == 1.0);
  auto xm = normalize(x, st_m);
  CHECK(xm.data[0] == doctest::Approx(-2.0));
  CHECK(xm.data[2] == doctest::Approx(2.0));

  auto st_s = fit_instance_stats(x, 1.0, NormMode::StdOnly);
  CHECK(st_s.shift[0] == 0.0);
  auto xs = normalize(x, st_s);
  // scaled but not centered: mean stays positive
  CHECK(xs.data[0] > 0.0);
}

TEST_CASE("norm mode string round trip") {
  for (auto m : {NormMode::Full, NormMode::MeanOnly, NormMode::StdOnly, NormMode::None}) {
    CHECK(norm_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS(norm_mode_from_string("bogus"));
}
