#include "stair/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "kernels_ref.hpp"

#ifdef STAIR_WITH_AVX2
#include "kernels_avx2.hpp"
#endif

namespace stair::kern {

namespace {

bool detect_avx2() {
#if defined(STAIR_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

// STAIR_FORCE_ISA=scalar pins the reference kernels (debugging, and checking
// the path non-x86 builds take).
Isa initial_isa() {
  if (const char* env = std::getenv("STAIR_FORCE_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  }
  return detect_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa> g_isa{initial_isa()};

inline bool use_avx2() { return g_isa.load(std::memory_order_relaxed) == Isa::Avx2; }

}  // namespace

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

bool avx2_available() { return detect_avx2(); }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !detect_avx2()) {
    throw std::runtime_error("force_isa: AVX2 not available in this build/CPU");
  }
  g_isa.store(isa, std::memory_order_relaxed);
}

std::string isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

#ifdef STAIR_WITH_AVX2
#define STAIR_DISPATCH(fn, ...)          \
  do {                                   \
    if (use_avx2()) {                    \
      avx2::fn(__VA_ARGS__);             \
      return;                            \
    }                                    \
    ref::fn(__VA_ARGS__);                \
  } while (0)
#define STAIR_DISPATCH_RET(fn, ...)                      \
  do {                                                   \
    if (use_avx2()) return avx2::fn(__VA_ARGS__);        \
    return ref::fn(__VA_ARGS__);                         \
  } while (0)
#else
#define STAIR_DISPATCH(fn, ...) \
  do {                          \
    ref::fn(__VA_ARGS__);       \
    return;                     \
  } while (0)
#define STAIR_DISPATCH_RET(fn, ...) return ref::fn(__VA_ARGS__)
#endif

void matmul_nt(const float* a, const float* b, const float* bias, float* c,
               std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_nt, a, b, bias, c, m, n, k);
}
void matmul_nt(const double* a, const double* b, const double* bias, double* c,
               std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_nt, a, b, bias, c, m, n, k);
}

void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_nn, a, b, c, m, n, k, false);
}
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_nn, a, b, c, m, n, k, false);
}
void matmul_nn_acc(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_nn, a, b, c, m, n, k, true);
}
void matmul_nn_acc(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_nn, a, b, c, m, n, k, true);
}

void matmul_tn_acc(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_tn_acc, a, b, c, m, n, k);
}
void matmul_tn_acc(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  STAIR_DISPATCH(matmul_tn_acc, a, b, c, m, n, k);
}

void colsum_acc(const float* a, float* out, std::size_t m, std::size_t n) {
  STAIR_DISPATCH(colsum_acc, a, out, m, n);
}
void colsum_acc(const double* a, double* out, std::size_t m, std::size_t n) {
  STAIR_DISPATCH(colsum_acc, a, out, m, n);
}

void affine(float* dst, const float* src, float a, float b, std::size_t n) {
  STAIR_DISPATCH(affine, dst, src, a, b, n);
}
void affine(double* dst, const double* src, double a, double b, std::size_t n) {
  STAIR_DISPATCH(affine, dst, src, a, b, n);
}

void add_inplace(float* y, const float* x, std::size_t n) {
  STAIR_DISPATCH(add_inplace, y, x, n);
}
void add_inplace(double* y, const double* x, std::size_t n) {
  STAIR_DISPATCH(add_inplace, y, x, n);
}

void axpy(float* y, float a, const float* x, std::size_t n) {
  STAIR_DISPATCH(axpy, y, a, x, n);
}
void axpy(double* y, double a, const double* x, std::size_t n) {
  STAIR_DISPATCH(axpy, y, a, x, n);
}

void mul_inplace(float* y, const float* x, std::size_t n) {
  STAIR_DISPATCH(mul_inplace, y, x, n);
}
void mul_inplace(double* y, const double* x, std::size_t n) {
  STAIR_DISPATCH(mul_inplace, y, x, n);
}

void scale_inplace(float* x, float a, std::size_t n) {
  STAIR_DISPATCH(scale_inplace, x, a, n);
}
void scale_inplace(double* x, double a, std::size_t n) {
  STAIR_DISPATCH(scale_inplace, x, a, n);
}

double sum(const float* x, std::size_t n) { STAIR_DISPATCH_RET(sum, x, n); }
double sum(const double* x, std::size_t n) { STAIR_DISPATCH_RET(sum, x, n); }
double sumsq(const float* x, std::size_t n) { STAIR_DISPATCH_RET(sumsq, x, n); }
double sumsq(const double* x, std::size_t n) { STAIR_DISPATCH_RET(sumsq, x, n); }

void mean_var(const float* x, std::size_t n, double& mean, double& var) {
  STAIR_DISPATCH(mean_var, x, n, mean, var);
}
void mean_var(const double* x, std::size_t n, double& mean, double& var) {
  STAIR_DISPATCH(mean_var, x, n, mean, var);
}

void relu(float* dst, const float* src, std::size_t n) {
  STAIR_DISPATCH(relu, dst, src, n);
}
void relu(double* dst, const double* src, std::size_t n) {
  STAIR_DISPATCH(relu, dst, src, n);
}

void relu_backward(float* dx, const float* dy, const float* pre, std::size_t n) {
  STAIR_DISPATCH(relu_backward, dx, dy, pre, n);
}
void relu_backward(double* dx, const double* dy, const double* pre, std::size_t n) {
  STAIR_DISPATCH(relu_backward, dx, dy, pre, n);
}

void adam_update(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps,
                 float bc1, float bc2, float wd) {
  STAIR_DISPATCH(adam_update, p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2, wd);
}
void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2, double wd) {
  STAIR_DISPATCH(adam_update, p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2, wd);
}

}  // namespace stair::kern
