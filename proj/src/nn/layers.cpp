#include "crew/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "crew/nn/kernels.hpp"

namespace crew::nn {

using kernels::Trans;

template <typename T>
void init_uniform(Param<T>& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (T& v : p.value) v = static_cast<T>(rng.uniform(-bound, bound));
}

// ---- Conv2d ----

template <typename T>
Conv2d<T>::Conv2d(int cin, int cout, int k, int stride, const std::string& name)
    : cin_(cin), cout_(cout), k_(k), stride_(stride) {
  weight.name = name + ".weight";
  bias.name = name + ".bias";
  weight.resize({cout, cin, k, k});
  bias.resize({cout});
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  init_uniform(weight, cin_ * k_ * k_, rng);
  init_uniform(bias, cin_ * k_ * k_, rng);
}

template <typename T>
FeatureMap<T> Conv2d<T>::forward(const FeatureMap<T>& x) {
  if (x.channels != cin_) throw std::invalid_argument("Conv2d: channel mismatch for " + weight.name);
  if (x.height < k_ || x.width < k_) throw std::invalid_argument("Conv2d: input smaller than kernel");
  in_n_ = x.batch;
  in_h_ = x.height;
  in_w_ = x.width;
  const int oh = out_size(x.height);
  const int ow = out_size(x.width);
  const int rows = cin_ * k_ * k_;
  const int cols = x.batch * oh * ow;
  col_.resize(static_cast<std::size_t>(rows) * cols);
  kernels::im2col(x.data.data(), cin_, x.batch, x.height, x.width, k_, stride_, col_.data());
  FeatureMap<T> y(cout_, x.batch, oh, ow);
  kernels::add_channel_bias(y.data.data(), bias.value.data(), cout_, cols);
  kernels::gemm(Trans::No, Trans::No, cout_, cols, rows, T(1), weight.value.data(), col_.data(), T(1),
                y.data.data());
  return y;
}

template <typename T>
FeatureMap<T> Conv2d<T>::backward(const FeatureMap<T>& dy, bool input_grad) {
  const int rows = cin_ * k_ * k_;
  const int cols = dy.batch * dy.height * dy.width;
  kernels::gemm(Trans::No, Trans::Yes, cout_, rows, cols, T(1), dy.data.data(), col_.data(), T(1),
                weight.grad.data());
  kernels::channel_bias_grad(dy.data.data(), cout_, cols, bias.grad.data());
  if (!input_grad) return {};
  dcol_.resize(static_cast<std::size_t>(rows) * cols);
  kernels::gemm(Trans::Yes, Trans::No, rows, cols, cout_, T(1), weight.value.data(), dy.data.data(), T(0),
                dcol_.data());
  FeatureMap<T> dx(cin_, in_n_, in_h_, in_w_);
  kernels::col2im(dcol_.data(), cin_, in_n_, in_h_, in_w_, k_, stride_, dx.data.data());
  return dx;
}

// ---- BatchNorm ----

template <typename T>
BatchNorm<T>::BatchNorm(int channels, const std::string& name, T momentum, T eps) : momentum_(momentum), eps_(eps) {
  gamma.name = name + ".gamma";
  beta.name = name + ".beta";
  gamma.resize({channels});
  beta.resize({channels});
  std::fill(gamma.value.begin(), gamma.value.end(), T(1));
  running_mean.assign(static_cast<std::size_t>(channels), T(0));
  running_var.assign(static_cast<std::size_t>(channels), T(1));
}

template <typename T>
FeatureMap<T> BatchNorm<T>::forward(const FeatureMap<T>& x, BnMode mode) {
  const int c = x.channels;
  const int count = static_cast<int>(x.plane());
  FeatureMap<T> y(c, x.batch, x.height, x.width);
  if (mode == BnMode::Eval) {
    kernels::batchnorm_inference(x.data.data(), c, count, gamma.value.data(), beta.value.data(),
                                 running_mean.data(), running_var.data(), eps_, y.data.data());
    return y;
  }
  if (count < 2) throw std::invalid_argument("BatchNorm: batch statistics need at least two values per channel");
  std::vector<T> mean(static_cast<std::size_t>(c));
  if (mode == BnMode::Frozen) {
    // No backward pass follows, so the cache is left untouched.
    std::vector<T> inv_std(static_cast<std::size_t>(c));
    kernels::batchnorm_forward(x.data.data(), c, count, gamma.value.data(), beta.value.data(), eps_,
                               static_cast<T*>(nullptr), y.data.data(), mean.data(), inv_std.data());
    return y;
  }
  n_ = x.batch;
  h_ = x.height;
  w_ = x.width;
  xhat_.resize(x.data.size());
  inv_std_.resize(static_cast<std::size_t>(c));
  kernels::batchnorm_forward(x.data.data(), c, count, gamma.value.data(), beta.value.data(), eps_, xhat_.data(),
                             y.data.data(), mean.data(), inv_std_.data());
  {
    const T unbias = static_cast<T>(count) / static_cast<T>(count - 1);
    for (int i = 0; i < c; ++i) {
      const T var = T(1) / (inv_std_[i] * inv_std_[i]) - eps_;
      running_mean[i] = (T(1) - momentum_) * running_mean[i] + momentum_ * mean[i];
      running_var[i] = (T(1) - momentum_) * running_var[i] + momentum_ * var * unbias;
    }
  }
  return y;
}

template <typename T>
FeatureMap<T> BatchNorm<T>::backward(const FeatureMap<T>& dy, bool input_grad) {
  const int c = dy.channels;
  const int count = static_cast<int>(dy.plane());
  FeatureMap<T> dx;
  if (input_grad) dx = FeatureMap<T>(c, n_, h_, w_);
  kernels::batchnorm_backward(dy.data.data(), xhat_.data(), gamma.value.data(), inv_std_.data(), c, count,
                              input_grad ? dx.data.data() : nullptr, gamma.grad.data(), beta.grad.data());
  return dx;
}

// ---- Linear ----

template <typename T>
Linear<T>::Linear(int in, int out, const std::string& name) : in_(in), out_(out) {
  weight.name = name + ".weight";
  bias.name = name + ".bias";
  weight.resize({out, in});
  bias.resize({out});
}

template <typename T>
void Linear<T>::init(Rng& rng) {
  init_uniform(weight, in_, rng);
  init_uniform(bias, in_, rng);
}

template <typename T>
Matrix<T> Linear<T>::forward(const Matrix<T>& x) {
  if (x.cols != in_) throw std::invalid_argument("Linear: input width mismatch for " + weight.name);
  x_ = x;
  Matrix<T> y(x.rows, out_);
  kernels::gemm(Trans::No, Trans::Yes, x.rows, out_, in_, T(1), x.data.data(), weight.value.data(), T(0),
                y.data.data());
  for (int r = 0; r < y.rows; ++r) {
    T* yr = y.row(r);
    for (int o = 0; o < out_; ++o) yr[o] += bias.value[o];
  }
  return y;
}

template <typename T>
Matrix<T> Linear<T>::backward(const Matrix<T>& dy) {
  kernels::gemm(Trans::Yes, Trans::No, out_, in_, dy.rows, T(1), dy.data.data(), x_.data.data(), T(1),
                weight.grad.data());
  for (int r = 0; r < dy.rows; ++r) {
    for (int o = 0; o < out_; ++o) bias.grad[o] += dy(r, o);
  }
  Matrix<T> dx(dy.rows, in_);
  kernels::gemm(Trans::No, Trans::No, dy.rows, in_, out_, T(1), dy.data.data(), weight.value.data(), T(0),
                dx.data.data());
  return dx;
}

// ---- Mlp ----

template <typename T>
Mlp<T>::Mlp(int in, const std::vector<int>& hidden, int out, const std::string& name) {
  int prev = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(prev, hidden[i], name + ".l" + std::to_string(i));
    prev = hidden[i];
  }
  layers_.emplace_back(prev, out, name + ".l" + std::to_string(hidden.size()));
}

template <typename T>
void Mlp<T>::init(Rng& rng) {
  for (auto& l : layers_) l.init(rng);
}

template <typename T>
Matrix<T> Mlp<T>::forward(const Matrix<T>& x) {
  act_.resize(layers_.size() - 1);
  Matrix<T> h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) {
      kernels::relu_forward(h.data.data(), h.data.data(), static_cast<long>(h.size()));
      act_[i] = h;
    }
  }
  return h;
}

template <typename T>
Matrix<T> Mlp<T>::backward(const Matrix<T>& dy) {
  Matrix<T> g = dy;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) {
      kernels::relu_backward(act_[i].data.data(), g.data.data(), g.data.data(), static_cast<long>(g.size()));
    }
    g = layers_[i].backward(g);
  }
  return g;
}

template <typename T>
std::vector<Param<T>*> Mlp<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_) {
    for (auto* p : l.params()) out.push_back(p);
  }
  return out;
}

// ---- Encoder ----

template <typename T>
Encoder<T>::Encoder(const EncoderSpec& spec, const std::string& name)
    : spec_(spec),
      c1_(spec.in_channels, spec.filters, spec.k1, spec.s1, name + ".conv1"),
      c2_(spec.filters, spec.filters, spec.k2, spec.s2, name + ".conv2"),
      c3_(spec.filters, spec.filters, spec.k3, spec.s3, name + ".conv3"),
      b1_(spec.filters, name + ".bn1"),
      b2_(spec.filters, name + ".bn2"),
      b3_(spec.filters, name + ".bn3") {
  int h = c3_.out_size(c2_.out_size(c1_.out_size(spec.height)));
  int w = c3_.out_size(c2_.out_size(c1_.out_size(spec.width)));
  if (h <= 0 || w <= 0) throw std::invalid_argument("Encoder: input too small for the conv stack");
  feature_dim_ = spec.filters * h * w;
}

template <typename T>
void Encoder<T>::init(Rng& rng) {
  c1_.init(rng);
  c2_.init(rng);
  c3_.init(rng);
}

template <typename T>
Matrix<T> Encoder<T>::forward(const FeatureMap<T>& x, BnMode mode) {
  if (x.height != spec_.height || x.width != spec_.width) {
    throw std::invalid_argument("Encoder: input resolution does not match the encoder spec");
  }
  auto stage = [&](Conv2d<T>& conv, BatchNorm<T>& bn, const FeatureMap<T>& in, FeatureMap<T>& act) {
    act = bn.forward(conv.forward(in), mode);
    kernels::relu_forward(act.data.data(), act.data.data(), static_cast<long>(act.data.size()));
  };
  stage(c1_, b1_, x, a1_);
  stage(c2_, b2_, a1_, a2_);
  stage(c3_, b3_, a2_, a3_);
  const int n = x.batch;
  const int hw = a3_.height * a3_.width;
  Matrix<T> f(n, feature_dim_);
  for (int c = 0; c < a3_.channels; ++c) {
    for (int b = 0; b < n; ++b) {
      const T* src = a3_.data.data() + (static_cast<std::size_t>(c) * n + b) * hw;
      T* dst = f.row(b) + static_cast<std::size_t>(c) * hw;
      for (int p = 0; p < hw; ++p) dst[p] = src[p];
    }
  }
  return f;
}

template <typename T>
void Encoder<T>::backward(const Matrix<T>& dfeat) {
  const int n = a3_.batch;
  const int hw = a3_.height * a3_.width;
  FeatureMap<T> g(a3_.channels, n, a3_.height, a3_.width);
  for (int c = 0; c < a3_.channels; ++c) {
    for (int b = 0; b < n; ++b) {
      const T* src = dfeat.row(b) + static_cast<std::size_t>(c) * hw;
      T* dst = g.data.data() + (static_cast<std::size_t>(c) * n + b) * hw;
      for (int p = 0; p < hw; ++p) dst[p] = src[p];
    }
  }
  auto stage_back = [](Conv2d<T>& conv, BatchNorm<T>& bn, const FeatureMap<T>& act, FeatureMap<T>& grad,
                       bool input_grad) {
    kernels::relu_backward(act.data.data(), grad.data.data(), grad.data.data(), static_cast<long>(grad.data.size()));
    return conv.backward(bn.backward(grad, true), input_grad);
  };
  FeatureMap<T> g2 = stage_back(c3_, b3_, a3_, g, true);
  FeatureMap<T> g1 = stage_back(c2_, b2_, a2_, g2, true);
  stage_back(c1_, b1_, a1_, g1, false);
}

template <typename T>
std::vector<Param<T>*> Encoder<T>::params() {
  return {&c1_.weight, &c1_.bias, &b1_.gamma, &b1_.beta, &c2_.weight, &c2_.bias,
          &b2_.gamma,  &b2_.beta, &c3_.weight, &c3_.bias, &b3_.gamma, &b3_.beta};
}

template <typename T>
std::vector<std::vector<T>*> Encoder<T>::buffers() {
  return {&b1_.running_mean, &b1_.running_var, &b2_.running_mean,
          &b2_.running_var,  &b3_.running_mean, &b3_.running_var};
}

template void init_uniform<float>(Param<float>&, int, Rng&);
template void init_uniform<double>(Param<double>&, int, Rng&);
template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Linear<float>;
template class Linear<double>;
template class Mlp<float>;
template class Mlp<double>;
template class Encoder<float>;
template class Encoder<double>;

}  // namespace crew::nn
