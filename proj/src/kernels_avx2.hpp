#pragma once

#include <cstddef>

// Declarations for the AVX2 translation unit. Only meaningful when the build
// defines STAIR_WITH_AVX2 (x86-64 with -mavx2 -mfma available).

namespace stair::kern::avx2 {

void matmul_nt(const float* a, const float* b, const float* bias, float* c,
               std::size_t m, std::size_t n, std::size_t k);
void matmul_nt(const double* a, const double* b, const double* bias, double* c,
               std::size_t m, std::size_t n, std::size_t k);

void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t n, std::size_t k, bool accumulate);
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t n, std::size_t k, bool accumulate);

void matmul_tn_acc(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t n, std::size_t k);
void matmul_tn_acc(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t n, std::size_t k);

void colsum_acc(const float* a, float* out, std::size_t m, std::size_t n);
void colsum_acc(const double* a, double* out, std::size_t m, std::size_t n);

void affine(float* dst, const float* src, float a, float b, std::size_t n);
void affine(double* dst, const double* src, double a, double b, std::size_t n);

void add_inplace(float* y, const float* x, std::size_t n);
void add_inplace(double* y, const double* x, std::size_t n);

void axpy(float* y, float a, const float* x, std::size_t n);
void axpy(double* y, double a, const double* x, std::size_t n);

void mul_inplace(float* y, const float* x, std::size_t n);
void mul_inplace(double* y, const double* x, std::size_t n);

void scale_inplace(float* x, float a, std::size_t n);
void scale_inplace(double* x, double a, std::size_t n);

double sum(const float* x, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const float* x, std::size_t n);
double sumsq(const double* x, std::size_t n);

void mean_var(const float* x, std::size_t n, double& mean, double& var);
void mean_var(const double* x, std::size_t n, double& mean, double& var);

void relu(float* dst, const float* src, std::size_t n);
void relu(double* dst, const double* src, std::size_t n);

void relu_backward(float* dx, const float* dy, const float* pre, std::size_t n);
void relu_backward(double* dx, const double* dy, const double* pre, std::size_t n);

void adam_update(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps,
                 float bc1, float bc2, float wd);
void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double bc1, double bc2, double wd);

}  // namespace stair::kern::avx2
