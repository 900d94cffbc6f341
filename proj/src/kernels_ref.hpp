#pragma once

#include <cmath>
#include <cstddef>

// Scalar reference kernels. These define the semantics; the AVX2 variants in
// kernels_avx2.cpp must agree with them to within rounding.

namespace stair::kern::ref {

template <class T>
void matmul_nt(const T* a, const T* b, const T* bias, T* c,
               std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = bias ? acc + bias[j] : acc;
    }
  }
}

template <class T>
void matmul_nn(const T* a, const T* b, T* c,
               std::size_t m, std::size_t n, std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
    }
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = ai[p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += s * bp[j];
    }
  }
}

template <class T>
void matmul_tn_acc(const T* a, const T* b, T* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  // c[i,j] += sum_r a[r,i] * b[r,j]; r-loop kept innermost-ordered per row of c.
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::size_t r = 0; r < k; ++r) {
      const T s = a[r * m + i];
      const T* br = b + r * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += s * br[j];
    }
  }
}

template <class T>
void colsum_acc(const T* a, T* out, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) {
    const T* ar = a + r * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += ar[j];
  }
}

template <class T>
void affine(T* dst, const T* src, T a, T b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a * src[i] + b;
}

template <class T>
void add_inplace(T* y, const T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

template <class T>
void axpy(T* y, T a, const T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T>
void mul_inplace(T* y, const T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

template <class T>
void scale_inplace(T* x, T a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

template <class T>
double sum(const T* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
  return acc;
}

template <class T>
double sumsq(const T* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    acc += v * v;
  }
  return acc;
}

template <class T>
void mean_var(const T* x, std::size_t n, double& mean, double& var) {
  mean = n ? sum(x, n) / static_cast<double>(n) : 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x[i]) - mean;
    acc += d * d;
  }
  var = n ? acc / static_cast<double>(n) : 0.0;
}

template <class T>
void relu(T* dst, const T* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
}

template <class T>
void relu_backward(T* dx, const T* dy, const T* pre, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = pre[i] > T(0) ? dy[i] : T(0);
}

template <class T>
void adam_update(T* p, const T* g, T* m, T* v, std::size_t n,
                 T lr, T beta1, T beta2, T eps, T bc1, T bc2, T wd) {
  const T one_m_b1 = T(1) - beta1;
  const T one_m_b2 = T(1) - beta2;
  const T decay = T(1) - lr * wd;
  for (std::size_t i = 0; i < n; ++i) {
    const T gi = g[i];
    m[i] = beta1 * m[i] + one_m_b1 * gi;
    v[i] = beta2 * v[i] + one_m_b2 * gi * gi;
    const T mhat = m[i] * bc1;
    const T vhat = v[i] * bc2;
    p[i] = (p[i] - lr * mhat / (std::sqrt(vhat) + eps)) * decay;
  }
}

}  // namespace stair::kern::ref
