#pragma once

// Serial, straightforward implementations kept as the ground truth for the
// parallel kernels and for the layer-level tests.

namespace crew::nn::reference {

// Row-major, no transposes: C = A (m x k) * B (k x n).
template <typename T>
void matmul(int m, int n, int k, const T* a, const T* b, T* c);

// Direct convolution, no padding. in: (cin, batch, h, w); weight: (cout, cin, k, k);
// out: (cout, batch, oh, ow).
template <typename T>
void conv2d_forward(const T* in, int cin, int batch, int h, int w, const T* weight, const T* bias, int cout,
                    int k, int stride, T* out);

// Gradients of conv2d_forward; all outputs are overwritten. din may be null.
template <typename T>
void conv2d_backward(const T* in, int cin, int batch, int h, int w, const T* weight, int cout, int k, int stride,
                     const T* dout, T* din, T* dweight, T* dbias);

// Batch-statistics normalization, two-pass, per channel over `count` values.
template <typename T>
void batchnorm_forward(const T* x, int channels, int count, const T* gamma, const T* beta, T eps, T* y);

}  // namespace crew::nn::reference
