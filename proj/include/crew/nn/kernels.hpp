#pragma once

// OpenMP-parallel compute kernels used by the training path. Every kernel has
// a serial counterpart in reference.hpp that the tests compare against.

namespace crew::nn::kernels {

enum class Trans { No, Yes };

// C = alpha * op(A) * op(B) + beta * C, all row-major; op(A) is M x K and
// op(B) is K x N.
template <typename T>
void gemm(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, const T* b, T beta, T* c);

// Input (channels, batch, h, w) -> columns ((c * k + ky) * k + kx, (n * oh + oy) * ow + ox).
// No padding; oh = (h - k) / stride + 1.
template <typename T>
void im2col(const T* in, int channels, int batch, int h, int w, int k, int stride, T* col);

// Adjoint of im2col: accumulates column gradients into `in_grad` (not cleared).
template <typename T>
void col2im(const T* col, int channels, int batch, int h, int w, int k, int stride, T* in_grad);

// Per-channel normalization over `count` contiguous values per channel.
// Writes normalized values to xhat (skipped when null), output to y, and per-channel mean/inv_std.
template <typename T>
void batchnorm_forward(const T* x, int channels, int count, const T* gamma, const T* beta, T eps, T* xhat,
                       T* y, T* mean, T* inv_std);

// Normalization with fixed statistics (evaluation mode).
template <typename T>
void batchnorm_inference(const T* x, int channels, int count, const T* gamma, const T* beta, const T* mean,
                         const T* var, T eps, T* y);

// Gradients for batch-statistics normalization. dgamma/dbeta are accumulated.
template <typename T>
void batchnorm_backward(const T* dy, const T* xhat, const T* gamma, const T* inv_std, int channels, int count,
                        T* dx, T* dgamma, T* dbeta);

template <typename T>
void relu_forward(const T* x, T* y, long n);

// dx = dy where y > 0, else 0.
template <typename T>
void relu_backward(const T* y, const T* dy, T* dx, long n);

// y[c * count + i] += bias[c]
template <typename T>
void add_channel_bias(T* y, const T* bias, int channels, int count);

// dbias[c] += sum_i dy[c * count + i]
template <typename T>
void channel_bias_grad(const T* dy, int channels, int count, T* dbias);

}  // namespace crew::nn::kernels
