#include "crew/nn/reference.hpp"

#include <cmath>
#include <cstddef>

namespace crew::nn::reference {

template <typename T>
void matmul(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T s = 0;
      for (int p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

template <typename T>
void conv2d_forward(const T* in, int cin, int batch, int h, int w, const T* weight, const T* bias, int cout,
                    int k, int stride, T* out) {
  const int oh = (h - k) / stride + 1;
  const int ow = (w - k) / stride + 1;
  for (int co = 0; co < cout; ++co) {
    for (int n = 0; n < batch; ++n) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          T s = bias ? bias[co] : T(0);
          for (int ci = 0; ci < cin; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const T xv = in[((static_cast<std::size_t>(ci) * batch + n) * h + oy * stride + ky) * w +
                                ox * stride + kx];
                s += weight[((co * cin + ci) * k + ky) * k + kx] * xv;
              }
            }
          }
          out[((static_cast<std::size_t>(co) * batch + n) * oh + oy) * ow + ox] = s;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const T* in, int cin, int batch, int h, int w, const T* weight, int cout, int k, int stride,
                     const T* dout, T* din, T* dweight, T* dbias) {
  const int oh = (h - k) / stride + 1;
  const int ow = (w - k) / stride + 1;
  for (int i = 0; i < cout * cin * k * k; ++i) dweight[i] = 0;
  for (int i = 0; i < cout; ++i) dbias[i] = 0;
  if (din) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(cin) * batch * h * w; ++i) din[i] = 0;
  }
  for (int co = 0; co < cout; ++co) {
    for (int n = 0; n < batch; ++n) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const T g = dout[((static_cast<std::size_t>(co) * batch + n) * oh + oy) * ow + ox];
          dbias[co] += g;
          for (int ci = 0; ci < cin; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const std::size_t xi =
                    ((static_cast<std::size_t>(ci) * batch + n) * h + oy * stride + ky) * w + ox * stride + kx;
                const int wi = ((co * cin + ci) * k + ky) * k + kx;
                dweight[wi] += g * in[xi];
                if (din) din[xi] += g * weight[wi];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void batchnorm_forward(const T* x, int channels, int count, const T* gamma, const T* beta, T eps, T* y) {
  for (int c = 0; c < channels; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * count;
    double mu = 0.0;
    for (int i = 0; i < count; ++i) mu += xc[i];
    mu /= count;
    double var = 0.0;
    for (int i = 0; i < count; ++i) var += (xc[i] - mu) * (xc[i] - mu);
    var /= count;
    const double is = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < count; ++i) {
      y[static_cast<std::size_t>(c) * count + i] = static_cast<T>(gamma[c] * (xc[i] - mu) * is + beta[c]);
    }
  }
}

#define CREW_INSTANTIATE(T)                                                                                 \
  template void matmul<T>(int, int, int, const T*, const T*, T*);                                           \
  template void conv2d_forward<T>(const T*, int, int, int, int, const T*, const T*, int, int, int, T*);     \
  template void conv2d_backward<T>(const T*, int, int, int, int, const T*, int, int, int, const T*, T*, T*, \
                                   T*);                                                                     \
  template void batchnorm_forward<T>(const T*, int, int, const T*, const T*, T, T*);

CREW_INSTANTIATE(float)
CREW_INSTANTIATE(double)

#undef CREW_INSTANTIATE

}  // namespace crew::nn::reference
