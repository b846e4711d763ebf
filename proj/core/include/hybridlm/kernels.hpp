#pragma once

#include <cstddef>

namespace hybridlm::kern {

// Raw float32 kernels. Tape ops and inference share these, so forward
// results are bit-identical no matter who calls.

// c[m x n] (+)= a[m x k] * b[k x n]
void matmul(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
// c[m x n] (+)= a[m x k] * b[n x k]^T
void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);
// c[k x n] (+)= a[m x k]^T * b[m x n]
void matmul_tn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate);

// In-place softmax over row[0..limit); entries at [limit..n) are set to 0.
void softmax_row(float* row, int limit, int n);

// Exact-erf GELU: x * Phi(x).
float gelu_scalar(float x);
void gelu(const float* x, float* y, size_t n);
// dx += dy * gelu'(x)
void gelu_backward(const float* x, const float* dy, float* dx, size_t n);

// y = (x - mean) / sqrt(var + eps) * gain + bias, one row of width n.
// Saves mean and reciprocal std for the backward pass.
void layer_norm_row(const float* x, const float* gain, const float* bias, float* y, int n, float eps,
                    float* save_mean, float* save_rstd);
// Accumulates dx, dgain, dbias for one row.
void layer_norm_row_backward(const float* x, const float* gain, const float* dy, float mean, float rstd,
                             float* dx, float* dgain, float* dbias, int n);

}  // namespace hybridlm::kern
