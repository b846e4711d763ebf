#include "hybridlm/kernels.hpp"

#include <cmath>
#include <cstring>

namespace hybridlm::kern {

void matmul(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(float) * static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<size_t>(i) * k;
        float* crow = c + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const float av = arow[kk];
            if (av == 0.0f) continue;
            const float* brow = b + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<size_t>(i) * k;
        float* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* brow = b + static_cast<size_t>(j) * k;
            float acc = 0.0f;
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            if (accumulate) crow[j] += acc; else crow[j] = acc;
        }
    }
}

void matmul_tn(const float* a, const float* b, float* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(float) * static_cast<size_t>(k) * n);
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<size_t>(i) * k;
        const float* brow = b + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const float av = arow[kk];
            if (av == 0.0f) continue;
            float* crow = c + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void softmax_row(float* row, int limit, int n) {
    float maxv = row[0];
    for (int j = 1; j < limit; ++j) maxv = row[j] > maxv ? row[j] : maxv;
    float sum = 0.0f;
    for (int j = 0; j < limit; ++j) {
        row[j] = std::exp(row[j] - maxv);
        sum += row[j];
    }
    const float inv = 1.0f / sum;
    for (int j = 0; j < limit; ++j) row[j] *= inv;
    for (int j = limit; j < n; ++j) row[j] = 0.0f;
}

float gelu_scalar(float x) {
    // Phi(x) = 0.5 * (1 + erf(x / sqrt(2)))
    return x * 0.5f * (1.0f + std::erf(x * 0.70710678118654752440f));
}

void gelu(const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

void gelu_backward(const float* x, const float* dy, float* dx, size_t n) {
    constexpr float inv_sqrt2 = 0.70710678118654752440f;
    constexpr float inv_sqrt2pi = 0.39894228040143267794f;
    for (size_t i = 0; i < n; ++i) {
        const float xi = x[i];
        const float phi = 0.5f * (1.0f + std::erf(xi * inv_sqrt2));
        const float pdf = inv_sqrt2pi * std::exp(-0.5f * xi * xi);
        dx[i] += dy[i] * (phi + xi * pdf);
    }
}

void layer_norm_row(const float* x, const float* gain, const float* bias, float* y, int n, float eps,
                    float* save_mean, float* save_rstd) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x[j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
        const double d = x[j] - mean;
        var += d * d;
    }
    var /= n;
    const float m = static_cast<float>(mean);
    const float rstd = static_cast<float>(1.0 / std::sqrt(var + eps));
    for (int j = 0; j < n; ++j) y[j] = (x[j] - m) * rstd * gain[j] + bias[j];
    *save_mean = m;
    *save_rstd = rstd;
}

void layer_norm_row_backward(const float* x, const float* gain, const float* dy, float mean, float rstd,
                             float* dx, float* dgain, float* dbias, int n) {
    // xhat = (x - mean) * rstd; dxhat = dy * gain
    // dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (int j = 0; j < n; ++j) {
        const float xhat = (x[j] - mean) * rstd;
        const float dxhat = dy[j] * gain[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += static_cast<double>(dxhat) * xhat;
    }
    const float mean_dxhat = static_cast<float>(sum_dxhat / n);
    const float mean_dxhat_xhat = static_cast<float>(sum_dxhat_xhat / n);
    for (int j = 0; j < n; ++j) {
        const float xhat = (x[j] - mean) * rstd;
        const float dxhat = dy[j] * gain[j];
        dx[j] += rstd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
        dgain[j] += dy[j] * xhat;
        dbias[j] += dy[j];
    }
}

}  // namespace hybridlm::kern
