#pragma once

#include <cstddef>
#include <string>

// Low-level numeric kernels used by the forecasting models. Every routine has
// a scalar reference implementation and, on x86-64 with AVX2+FMA, a vectorized
// variant selected once at startup. Both variants compute each output element
// from the same reduction order, so results do not depend on how callers
// partition work across rows.
//
// Matrix arguments are dense row-major with no padding.

namespace stair::kern {

enum class Isa { Scalar, Avx2 };

// ISA selected for all kernel calls. Auto-detected on first use.
Isa active_isa();

// Override the dispatch (tests and benchmarks). Throws if the requested ISA
// is not available on this machine/build.
void force_isa(Isa isa);

bool avx2_available();
std::string isa_name(Isa isa);

// C (m x n) = A (m x k) * B^T, where B is n x k. bias (length n) may be null.
void matmul_nt(const float* a, const float* b, const float* bias, float* c,
               std::size_t m, std::size_t n, std::size_t k);
void matmul_nt(const double* a, const double* b, const double* bias, double* c,
               std::size_t m, std::size_t n, std::size_t k);

// C (m x n) = A (m x k) * B (k x n).
void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t n, std::size_t k);
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t n, std::size_t k);

// C (m x n) += A (m x k) * B (k x n).
void matmul_nn_acc(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t n, std::size_t k);
void matmul_nn_acc(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t n, std::size_t k);

// C (m x n) += A^T * B, where A is k x m and B is k x n.
void matmul_tn_acc(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t n, std::size_t k);
void matmul_tn_acc(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t n, std::size_t k);

// out (length n) += column sums of A (m x n).
void colsum_acc(const float* a, float* out, std::size_t m, std::size_t n);
void colsum_acc(const double* a, double* out, std::size_t m, std::size_t n);

// dst = a * src + b, elementwise.
void affine(float* dst, const float* src, float a, float b, std::size_t n);
void affine(double* dst, const double* src, double a, double b, std::size_t n);

// y += x
void add_inplace(float* y, const float* x, std::size_t n);
void add_inplace(double* y, const double* x, std::size_t n);

// y += a * x
void axpy(float* y, float a, const float* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);

// y *= x, elementwise
void mul_inplace(float* y, const float* x, std::size_t n);
void mul_inplace(double* y, const double* x, std::size_t n);

void scale_inplace(float* x, float a, std::size_t n);
void scale_inplace(double* x, double a, std::size_t n);

// Reductions accumulate in double regardless of element type.
double sum(const float* x, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const float* x, std::size_t n);
double sumsq(const double* x, std::size_t n);

// Population mean/variance of x, accumulated in double (two passes).
void mean_var(const float* x, std::size_t n, double& mean, double& var);
void mean_var(const double* x, std::size_t n, double& mean, double& var);

void relu(float* dst, const float* src, std::size_t n);
void relu(double* dst, const double* src, std::size_t n);

// dx = dy where pre > 0, else 0.
void relu_backward(float* dx, const float* dy, const float* pre, std::size_t n);
void relu_backward(double* dx, const double* dy, const double* pre, std::size_t n);

// One Adam step with precomputed bias corrections bc1 = 1/(1-beta1^t),
// bc2 = 1/(1-beta2^t), followed by decoupled weight decay p *= (1 - lr*wd).
void adam_update(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps,
                 float bc1, float bc2, float wd);
void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2, double wd);

}  // namespace stair::kern
