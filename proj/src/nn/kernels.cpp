#include "crew/nn/kernels.hpp"

#include <malloc.h>

#include <Eigen/Core>
#include <cmath>
#include <cstddef>

namespace crew::nn::kernels {

namespace {

// Activations are tens of megabytes and reallocated every step; keeping freed
// blocks in the heap avoids repeated page faults from mmap/munmap.
const bool kHeapTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

}  // namespace

template <typename T>
void gemm(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, const T* b, T beta, T* c) {
  MutMap<T> cm(c, m, n);
  if (beta == T(0)) {
    cm.setZero();
  } else if (beta != T(1)) {
    cm *= beta;
  }
  if (m == 0 || n == 0 || k == 0) return;
  const bool at = ta == Trans::Yes;
  const bool bt = tb == Trans::Yes;
  ConstMap<T> am(a, at ? k : m, at ? m : k);
  ConstMap<T> bm(b, bt ? n : k, bt ? k : n);
  if (!at && !bt) {
    cm.noalias() += alpha * am * bm;
  } else if (at && !bt) {
    cm.noalias() += alpha * am.transpose() * bm;
  } else if (!at && bt) {
    cm.noalias() += alpha * am * bm.transpose();
  } else {
    cm.noalias() += alpha * am.transpose() * bm.transpose();
  }
}

template <typename T>
void im2col(const T* in, int channels, int batch, int h, int w, int k, int stride, T* col) {
  const int oh = (h - k) / stride + 1;
  const int ow = (w - k) / stride + 1;
  const std::size_t cols = static_cast<std::size_t>(batch) * oh * ow;
  // Walks the input in order so each source row is read once while hot.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    T* rows = col + static_cast<std::size_t>(c) * k * k * cols;
    for (int n = 0; n < batch; ++n) {
      const T* plane = in + (static_cast<std::size_t>(c) * batch + n) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        const std::size_t pos = (static_cast<std::size_t>(n) * oh + oy) * ow;
        for (int ky = 0; ky < k; ++ky) {
          const T* src = plane + static_cast<std::size_t>(oy * stride + ky) * w;
          for (int kx = 0; kx < k; ++kx) {
            T* dst = rows + static_cast<std::size_t>(ky * k + kx) * cols + pos;
            const T* s = src + kx;
            for (int ox = 0; ox < ow; ++ox) dst[ox] = s[ox * stride];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int channels, int batch, int h, int w, int k, int stride, T* in_grad) {
  const int oh = (h - k) / stride + 1;
  const int ow = (w - k) / stride + 1;
  const std::size_t cols = static_cast<std::size_t>(batch) * oh * ow;
  // Rows of one channel write only that channel's planes.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * cols;
        for (int n = 0; n < batch; ++n) {
          T* plane = in_grad + (static_cast<std::size_t>(c) * batch + n) * h * w;
          for (int oy = 0; oy < oh; ++oy) {
            T* dst = plane + static_cast<std::size_t>(oy * stride + ky) * w + kx;
            for (int ox = 0; ox < ow; ++ox) dst[ox * stride] += *src++;
          }
        }
      }
    }
  }
}

template <typename T>
void batchnorm_forward(const T* x, int channels, int count, const T* gamma, const T* beta, T eps, T* xhat,
                       T* y, T* mean, T* inv_std) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * count;
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (int i = 0; i < count; ++i) s += xc[i];
    const double mu = s / count;
    double v = 0.0;
#pragma omp simd reduction(+ : v)
    for (int i = 0; i < count; ++i) {
      const double d = xc[i] - mu;
      v += d * d;
    }
    const double var = v / count;
    const T is = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    mean[c] = static_cast<T>(mu);
    inv_std[c] = is;
    T* hc = xhat == nullptr ? nullptr : xhat + static_cast<std::size_t>(c) * count;
    T* yc = y + static_cast<std::size_t>(c) * count;
    const T m = static_cast<T>(mu);
    const T g = gamma[c];
    const T b = beta[c];
    if (xhat == nullptr) {
#pragma omp simd
      for (int i = 0; i < count; ++i) yc[i] = g * ((xc[i] - m) * is) + b;
      continue;
    }
#pragma omp simd
    for (int i = 0; i < count; ++i) {
      hc[i] = (xc[i] - m) * is;
      yc[i] = g * hc[i] + b;
    }
  }
}

template <typename T>
void batchnorm_inference(const T* x, int channels, int count, const T* gamma, const T* beta, const T* mean,
                         const T* var, T eps, T* y) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T scale = gamma[c] / std::sqrt(var[c] + eps);
    const T shift = beta[c] - mean[c] * scale;
    const T* xc = x + static_cast<std::size_t>(c) * count;
    T* yc = y + static_cast<std::size_t>(c) * count;
#pragma omp simd
    for (int i = 0; i < count; ++i) yc[i] = xc[i] * scale + shift;
  }
}

template <typename T>
void batchnorm_backward(const T* dy, const T* xhat, const T* gamma, const T* inv_std, int channels, int count,
                        T* dx, T* dgamma, T* dbeta) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T* dyc = dy + static_cast<std::size_t>(c) * count;
    const T* hc = xhat + static_cast<std::size_t>(c) * count;
    double sdy = 0.0;
    double sdyh = 0.0;
#pragma omp simd reduction(+ : sdy, sdyh)
    for (int i = 0; i < count; ++i) {
      sdy += dyc[i];
      sdyh += static_cast<double>(dyc[i]) * hc[i];
    }
    dgamma[c] += static_cast<T>(sdyh);
    dbeta[c] += static_cast<T>(sdy);
    if (dx == nullptr) continue;
    const T k = gamma[c] * inv_std[c] / static_cast<T>(count);
    const T mdy = static_cast<T>(sdy);
    const T mdyh = static_cast<T>(sdyh);
    T* dxc = dx + static_cast<std::size_t>(c) * count;
#pragma omp simd
    for (int i = 0; i < count; ++i) dxc[i] = k * (static_cast<T>(count) * dyc[i] - mdy - hc[i] * mdyh);
  }
}

template <typename T>
void relu_forward(const T* x, T* y, long n) {
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* y, const T* dy, T* dx, long n) {
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void add_channel_bias(T* y, const T* bias, int channels, int count) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    T* yc = y + static_cast<std::size_t>(c) * count;
    const T b = bias[c];
#pragma omp simd
    for (int i = 0; i < count; ++i) yc[i] += b;
  }
}

template <typename T>
void channel_bias_grad(const T* dy, int channels, int count, T* dbias) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    const T* dyc = dy + static_cast<std::size_t>(c) * count;
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (int i = 0; i < count; ++i) s += dyc[i];
    dbias[c] += static_cast<T>(s);
  }
}

#define CREW_INSTANTIATE(T)                                                                                   \
  template void gemm<T>(Trans, Trans, int, int, int, T, const T*, const T*, T, T*);                           \
  template void im2col<T>(const T*, int, int, int, int, int, int, T*);                                        \
  template void col2im<T>(const T*, int, int, int, int, int, int, T*);                                        \
  template void batchnorm_forward<T>(const T*, int, int, const T*, const T*, T, T*, T*, T*, T*);              \
  template void batchnorm_inference<T>(const T*, int, int, const T*, const T*, const T*, const T*, T, T*);    \
  template void batchnorm_backward<T>(const T*, const T*, const T*, const T*, int, int, T*, T*, T*);          \
  template void relu_forward<T>(const T*, T*, long);                                                          \
  template void relu_backward<T>(const T*, const T*, T*, long);                                               \
  template void add_channel_bias<T>(T*, const T*, int, int);                                                  \
  template void channel_bias_grad<T>(const T*, int, int, T*);

CREW_INSTANTIATE(float)
CREW_INSTANTIATE(double)

#undef CREW_INSTANTIATE

}  // namespace crew::nn::kernels
