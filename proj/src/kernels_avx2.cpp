// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma on x86-64 only; the
// dispatcher in kernels.cpp falls back to the scalar reference elsewhere.
//
// Per-element results depend only on the reduction length, never on how many
// rows a call covers, so batched and per-channel invocations agree bitwise.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace stair::kern::avx2 {

namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  lo = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, lo);
  lo = _mm_add_ss(lo, sh);
  return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  lo = _mm_add_sd(lo, sh);
  return _mm_cvtsd_f64(lo);
}

inline float dot_tail(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline double dot_tail(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Four accumulator chains to cover the FMA latency; the reduction structure
// depends only on k, keeping per-element results call-shape independent.
inline float dot(const float* a, const float* b, std::size_t k) {
  const std::size_t k4 = k & ~std::size_t(31);
  __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
  __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
  for (std::size_t p = 0; p < k4; p += 32) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p), _mm256_loadu_ps(b + p), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p + 8), _mm256_loadu_ps(b + p + 8), acc1);
    acc2 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p + 16), _mm256_loadu_ps(b + p + 16), acc2);
    acc3 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p + 24), _mm256_loadu_ps(b + p + 24), acc3);
  }
  const std::size_t kv = k & ~std::size_t(7);
  for (std::size_t p = k4; p < kv; p += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + p), _mm256_loadu_ps(b + p), acc0);
  }
  acc0 = _mm256_add_ps(_mm256_add_ps(acc0, acc1), _mm256_add_ps(acc2, acc3));
  return hsum(acc0) + dot_tail(a + kv, b + kv, k - kv);
}

inline double dot(const double* a, const double* b, std::size_t k) {
  const std::size_t k4 = k & ~std::size_t(15);
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k4; p += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p + 4), _mm256_loadu_pd(b + p + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p + 8), _mm256_loadu_pd(b + p + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p + 12), _mm256_loadu_pd(b + p + 12), acc3);
  }
  const std::size_t kv = k & ~std::size_t(3);
  for (std::size_t p = k4; p < kv; p += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc0);
  }
  acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
  return hsum(acc0) + dot_tail(a + kv, b + kv, k - kv);
}

}  // namespace

void matmul_nt(const float* a, const float* b, const float* bias, float* c,
               std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    float* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const float d = dot(ai, b + j * k, k);
      ci[j] = bias ? d + bias[j] : d;
    }
  }
}

void matmul_nt(const double* a, const double* b, const double* bias, double* c,
               std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dot(ai, b + j * k, k);
      ci[j] = bias ? d + bias[j] : d;
    }
  }
}

namespace {

// ci (length n) += s * br (length n)
inline void row_axpy(float* ci, float s, const float* br, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(7);
  const __m256 vs = _mm256_set1_ps(s);
  for (std::size_t j = 0; j < nv; j += 8) {
    __m256 cv = _mm256_loadu_ps(ci + j);
    cv = _mm256_fmadd_ps(vs, _mm256_loadu_ps(br + j), cv);
    _mm256_storeu_ps(ci + j, cv);
  }
  for (std::size_t j = nv; j < n; ++j) ci[j] += s * br[j];
}

inline void row_axpy(double* ci, double s, const double* br, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  const __m256d vs = _mm256_set1_pd(s);
  for (std::size_t j = 0; j < nv; j += 4) {
    __m256d cv = _mm256_loadu_pd(ci + j);
    cv = _mm256_fmadd_pd(vs, _mm256_loadu_pd(br + j), cv);
    _mm256_storeu_pd(ci + j, cv);
  }
  for (std::size_t j = nv; j < n; ++j) ci[j] += s * br[j];
}

// ci[j] += sum_p s[p*s_stride] * b[p*n + j]. Register-blocked over j so each
// output element carries an in-register chain over p; the chain order depends
// only on p, never on the tile split.
inline void mix_rows(float* ci, const float* b, std::size_t n, std::size_t k,
                     const float* s, std::size_t s_stride) {
  std::size_t j = 0;
  for (; j + 64 <= n; j += 64) {
    float* cj = ci + j;
    __m256 c0 = _mm256_loadu_ps(cj), c1 = _mm256_loadu_ps(cj + 8);
    __m256 c2 = _mm256_loadu_ps(cj + 16), c3 = _mm256_loadu_ps(cj + 24);
    __m256 c4 = _mm256_loadu_ps(cj + 32), c5 = _mm256_loadu_ps(cj + 40);
    __m256 c6 = _mm256_loadu_ps(cj + 48), c7 = _mm256_loadu_ps(cj + 56);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 vs = _mm256_set1_ps(s[p * s_stride]);
      const float* bp = b + p * n + j;
      c0 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp), c0);
      c1 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp + 8), c1);
      c2 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp + 16), c2);
      c3 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp + 24), c3);
      c4 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp + 32), c4);
      c5 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp + 40), c5);
      c6 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp + 48), c6);
      c7 = _mm256_fmadd_ps(vs, _mm256_loadu_ps(bp + 56), c7);
    }
    _mm256_storeu_ps(cj, c0);
    _mm256_storeu_ps(cj + 8, c1);
    _mm256_storeu_ps(cj + 16, c2);
    _mm256_storeu_ps(cj + 24, c3);
    _mm256_storeu_ps(cj + 32, c4);
    _mm256_storeu_ps(cj + 40, c5);
    _mm256_storeu_ps(cj + 48, c6);
    _mm256_storeu_ps(cj + 56, c7);
  }
  for (; j + 8 <= n; j += 8) {
    __m256 c0 = _mm256_loadu_ps(ci + j);
    for (std::size_t p = 0; p < k; ++p) {
      c0 = _mm256_fmadd_ps(_mm256_set1_ps(s[p * s_stride]), _mm256_loadu_ps(b + p * n + j), c0);
    }
    _mm256_storeu_ps(ci + j, c0);
  }
  for (; j < n; ++j) {
    float acc = ci[j];
    for (std::size_t p = 0; p < k; ++p) acc += s[p * s_stride] * b[p * n + j];
    ci[j] = acc;
  }
}

inline void mix_rows(double* ci, const double* b, std::size_t n, std::size_t k,
                     const double* s, std::size_t s_stride) {
  std::size_t j = 0;
  for (; j + 32 <= n; j += 32) {
    double* cj = ci + j;
    __m256d c0 = _mm256_loadu_pd(cj), c1 = _mm256_loadu_pd(cj + 4);
    __m256d c2 = _mm256_loadu_pd(cj + 8), c3 = _mm256_loadu_pd(cj + 12);
    __m256d c4 = _mm256_loadu_pd(cj + 16), c5 = _mm256_loadu_pd(cj + 20);
    __m256d c6 = _mm256_loadu_pd(cj + 24), c7 = _mm256_loadu_pd(cj + 28);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d vs = _mm256_set1_pd(s[p * s_stride]);
      const double* bp = b + p * n + j;
      c0 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp), c0);
      c1 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp + 4), c1);
      c2 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp + 8), c2);
      c3 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp + 12), c3);
      c4 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp + 16), c4);
      c5 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp + 20), c5);
      c6 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp + 24), c6);
      c7 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(bp + 28), c7);
    }
    _mm256_storeu_pd(cj, c0);
    _mm256_storeu_pd(cj + 4, c1);
    _mm256_storeu_pd(cj + 8, c2);
    _mm256_storeu_pd(cj + 12, c3);
    _mm256_storeu_pd(cj + 16, c4);
    _mm256_storeu_pd(cj + 20, c5);
    _mm256_storeu_pd(cj + 24, c6);
    _mm256_storeu_pd(cj + 28, c7);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d c0 = _mm256_loadu_pd(ci + j);
    for (std::size_t p = 0; p < k; ++p) {
      c0 = _mm256_fmadd_pd(_mm256_set1_pd(s[p * s_stride]), _mm256_loadu_pd(b + p * n + j), c0);
    }
    _mm256_storeu_pd(ci + j, c0);
  }
  for (; j < n; ++j) {
    double acc = ci[j];
    for (std::size_t p = 0; p < k; ++p) acc += s[p * s_stride] * b[p * n + j];
    ci[j] = acc;
  }
}

template <class T>
void matmul_nn_impl(const T* a, const T* b, T* c,
                    std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
    }
    mix_rows(ci, b, n, k, a + i * k, 1);
  }
}

template <class T>
void matmul_tn_acc_impl(const T* a, const T* b, T* c,
                        std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    mix_rows(c + i * n, b, n, k, a + i, m);
  }
}

}  // namespace

void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  matmul_nn_impl(a, b, c, m, n, k, accumulate);
}

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  matmul_nn_impl(a, b, c, m, n, k, accumulate);
}

void matmul_tn_acc(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  matmul_tn_acc_impl(a, b, c, m, n, k);
}

void matmul_tn_acc(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  matmul_tn_acc_impl(a, b, c, m, n, k);
}

void colsum_acc(const float* a, float* out, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) row_axpy(out, 1.0f, a + r * n, n);
}

void colsum_acc(const double* a, double* out, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) row_axpy(out, 1.0, a + r * n, n);
}

void affine(float* dst, const float* src, float a, float b, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(7);
  const __m256 va = _mm256_set1_ps(a);
  const __m256 vb = _mm256_set1_ps(b);
  for (std::size_t i = 0; i < nv; i += 8) {
    _mm256_storeu_ps(dst + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(src + i), vb));
  }
  for (std::size_t i = nv; i < n; ++i) dst[i] = a * src[i] + b;
}

void affine(double* dst, const double* src, double a, double b, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  for (std::size_t i = 0; i < nv; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(src + i), vb));
  }
  for (std::size_t i = nv; i < n; ++i) dst[i] = a * src[i] + b;
}

void add_inplace(float* y, const float* x, std::size_t n) { row_axpy(y, 1.0f, x, n); }
void add_inplace(double* y, const double* x, std::size_t n) { row_axpy(y, 1.0, x, n); }
void axpy(float* y, float a, const float* x, std::size_t n) { row_axpy(y, a, x, n); }
void axpy(double* y, double a, const double* x, std::size_t n) { row_axpy(y, a, x, n); }

void mul_inplace(float* y, const float* x, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(7);
  for (std::size_t i = 0; i < nv; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(y + i), _mm256_loadu_ps(x + i)));
  }
  for (std::size_t i = nv; i < n; ++i) y[i] *= x[i];
}

void mul_inplace(double* y, const double* x, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  for (std::size_t i = 0; i < nv; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (std::size_t i = nv; i < n; ++i) y[i] *= x[i];
}

void scale_inplace(float* x, float a, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(7);
  const __m256 va = _mm256_set1_ps(a);
  for (std::size_t i = 0; i < nv; i += 8) {
    _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  }
  for (std::size_t i = nv; i < n; ++i) x[i] *= a;
}

void scale_inplace(double* x, double a, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  const __m256d va = _mm256_set1_pd(a);
  for (std::size_t i = 0; i < nv; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (std::size_t i = nv; i < n; ++i) x[i] *= a;
}

double sum(const float* x, std::size_t n) {
  // Widen to double lanes so float and double reductions share behavior.
  const std::size_t nv = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nv; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm_loadu_ps(x + i)));
  }
  double s = hsum(acc);
  for (std::size_t i = nv; i < n; ++i) s += static_cast<double>(x[i]);
  return s;
}

double sum(const double* x, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nv; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (std::size_t i = nv; i < n; ++i) s += x[i];
  return s;
}

double sumsq(const float* x, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nv; i += 4) {
    const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (std::size_t i = nv; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    s += v * v;
  }
  return s;
}

double sumsq(const double* x, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nv; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (std::size_t i = nv; i < n; ++i) s += x[i] * x[i];
  return s;
}

namespace {

template <class T>
void mean_var_impl(const T* x, std::size_t n, double& mean, double& var) {
  mean = n ? sum(x, n) / static_cast<double>(n) : 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x[i]) - mean;
    acc += d * d;
  }
  var = n ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace

void mean_var(const float* x, std::size_t n, double& mean, double& var) {
  mean_var_impl(x, n, mean, var);
}

void mean_var(const double* x, std::size_t n, double& mean, double& var) {
  mean_var_impl(x, n, mean, var);
}

void relu(float* dst, const float* src, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(7);
  const __m256 z = _mm256_setzero_ps();
  for (std::size_t i = 0; i < nv; i += 8) {
    _mm256_storeu_ps(dst + i, _mm256_max_ps(z, _mm256_loadu_ps(src + i)));
  }
  for (std::size_t i = nv; i < n; ++i) dst[i] = src[i] > 0.0f ? src[i] : 0.0f;
}

void relu(double* dst, const double* src, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  const __m256d z = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nv; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_max_pd(z, _mm256_loadu_pd(src + i)));
  }
  for (std::size_t i = nv; i < n; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void relu_backward(float* dx, const float* dy, const float* pre, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(7);
  const __m256 z = _mm256_setzero_ps();
  for (std::size_t i = 0; i < nv; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(pre + i), z, _CMP_GT_OQ);
    _mm256_storeu_ps(dx + i, _mm256_and_ps(mask, _mm256_loadu_ps(dy + i)));
  }
  for (std::size_t i = nv; i < n; ++i) dx[i] = pre[i] > 0.0f ? dy[i] : 0.0f;
}

void relu_backward(double* dx, const double* dy, const double* pre, std::size_t n) {
  const std::size_t nv = n & ~std::size_t(3);
  const __m256d z = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nv; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), z, _CMP_GT_OQ);
    _mm256_storeu_pd(dx + i, _mm256_and_pd(mask, _mm256_loadu_pd(dy + i)));
  }
  for (std::size_t i = nv; i < n; ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
}

void adam_update(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps,
                 float bc1, float bc2, float wd) {
  const std::size_t nv = n & ~std::size_t(7);
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vo1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 vo2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vbc1 = _mm256_set1_ps(bc1);
  const __m256 vbc2 = _mm256_set1_ps(bc2);
  const __m256 vdecay = _mm256_set1_ps(1.0f - lr * wd);
  for (std::size_t i = 0; i < nv; i += 8) {
    const __m256 gi = _mm256_loadu_ps(g + i);
    __m256 mi = _mm256_fmadd_ps(vb1, _mm256_loadu_ps(m + i), _mm256_mul_ps(vo1, gi));
    __m256 vi = _mm256_fmadd_ps(vb2, _mm256_loadu_ps(v + i),
                                _mm256_mul_ps(vo2, _mm256_mul_ps(gi, gi)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_mul_ps(mi, vbc1);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vi, vbc2)), veps);
    __m256 pi = _mm256_loadu_ps(p + i);
    pi = _mm256_sub_ps(pi, _mm256_div_ps(_mm256_mul_ps(vlr, mhat), denom));
    _mm256_storeu_ps(p + i, _mm256_mul_ps(pi, vdecay));
  }
  const float decay = 1.0f - lr * wd;
  for (std::size_t i = nv; i < n; ++i) {
    const float gi = g[i];
    m[i] = beta1 * m[i] + (1.0f - beta1) * gi;
    v[i] = beta2 * v[i] + (1.0f - beta2) * gi * gi;
    p[i] = (p[i] - lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps)) * decay;
  }
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2, double wd) {
  const std::size_t nv = n & ~std::size_t(3);
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vo1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vo2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vbc1 = _mm256_set1_pd(bc1);
  const __m256d vbc2 = _mm256_set1_pd(bc2);
  const __m256d vdecay = _mm256_set1_pd(1.0 - lr * wd);
  for (std::size_t i = 0; i < nv; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    __m256d mi = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + i), _mm256_mul_pd(vo1, gi));
    __m256d vi = _mm256_fmadd_pd(vb2, _mm256_loadu_pd(v + i),
                                 _mm256_mul_pd(vo2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_mul_pd(mi, vbc1);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vbc2)), veps);
    __m256d pi = _mm256_loadu_pd(p + i);
    pi = _mm256_sub_pd(pi, _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom));
    _mm256_storeu_pd(p + i, _mm256_mul_pd(pi, vdecay));
  }
  const double decay = 1.0 - lr * wd;
  for (std::size_t i = nv; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
    v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
    p[i] = (p[i] - lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps)) * decay;
  }
}

}  // namespace stair::kern::avx2

#endif  // __AVX2__ && __FMA__
