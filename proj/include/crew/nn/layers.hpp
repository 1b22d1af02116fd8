#pragma once

#include <string>
#include <vector>

#include "crew/common/rng.hpp"
#include "crew/nn/tensor.hpp"

namespace crew::nn {

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  void resize(std::vector<int> s) {
    shape = std::move(s);
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    value.assign(n, T(0));
    grad.assign(n, T(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

// Train: batch statistics, running statistics updated.
// Frozen: batch statistics, running statistics untouched, forward only (target networks).
// Eval: running statistics.
enum class BnMode { Train, Frozen, Eval };

// Fan-in scaled uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
void init_uniform(Param<T>& p, int fan_in, Rng& rng);

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int cin, int cout, int k, int stride, const std::string& name);

  void init(Rng& rng);
  FeatureMap<T> forward(const FeatureMap<T>& x);
  // Accumulates parameter gradients. Returns the input gradient when
  // `input_grad` is set, otherwise an empty map.
  FeatureMap<T> backward(const FeatureMap<T>& dy, bool input_grad);
  std::vector<Param<T>*> params() { return {&weight, &bias}; }
  int out_size(int in) const { return (in - k_) / stride_ + 1; }

  Param<T> weight;  // (cout, cin, k, k)
  Param<T> bias;    // (cout)

 private:
  int cin_ = 0, cout_ = 0, k_ = 1, stride_ = 1;
  int in_n_ = 0, in_h_ = 0, in_w_ = 0;
  std::vector<T> col_;
  std::vector<T> dcol_;
};

template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(int channels, const std::string& name, T momentum = T(0.1), T eps = T(1e-5));

  FeatureMap<T> forward(const FeatureMap<T>& x, BnMode mode);
  FeatureMap<T> backward(const FeatureMap<T>& dy, bool input_grad);
  std::vector<Param<T>*> params() { return {&gamma, &beta}; }
  std::vector<std::vector<T>*> buffers() { return {&running_mean, &running_var}; }

  Param<T> gamma;
  Param<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;

 private:
  T momentum_ = T(0.1);
  T eps_ = T(1e-5);
  std::vector<T> xhat_, inv_std_;
  int n_ = 0, h_ = 0, w_ = 0;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, const std::string& name);

  void init(Rng& rng);
  Matrix<T> forward(const Matrix<T>& x);
  Matrix<T> backward(const Matrix<T>& dy);
  std::vector<Param<T>*> params() { return {&weight, &bias}; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Param<T> weight;  // (out, in)
  Param<T> bias;    // (out)

 private:
  int in_ = 0, out_ = 0;
  Matrix<T> x_;
};

// Linear -> ReLU -> ... -> Linear.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(int in, const std::vector<int>& hidden, int out, const std::string& name);

  void init(Rng& rng);
  Matrix<T> forward(const Matrix<T>& x);
  // Returns the input gradient; accumulates parameter gradients.
  Matrix<T> backward(const Matrix<T>& dy);
  std::vector<Param<T>*> params();
  int in_features() const { return layers_.front().in_features(); }
  int out_features() const { return layers_.back().out_features(); }

 private:
  std::vector<Linear<T>> layers_;
  std::vector<Matrix<T>> act_;  // post-ReLU hidden activations
};

struct EncoderSpec {
  int in_channels = 3;
  int height = 100;
  int width = 100;
  int filters = 64;
  int k1 = 4, s1 = 4;
  int k2 = 3, s2 = 2;
  int k3 = 3, s3 = 2;
};

// Three conv -> BN -> ReLU stages, flattened per sample.
template <typename T>
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(const EncoderSpec& spec, const std::string& name = "enc");

  void init(Rng& rng);
  // Input (channels, batch, h, w); returns (batch, feature_dim).
  Matrix<T> forward(const FeatureMap<T>& x, BnMode mode);
  // Accumulates parameter gradients for the last forward.
  void backward(const Matrix<T>& dfeat);
  std::vector<Param<T>*> params();
  std::vector<std::vector<T>*> buffers();
  int feature_dim() const { return feature_dim_; }
  const EncoderSpec& spec() const { return spec_; }

 private:
  EncoderSpec spec_;
  Conv2d<T> c1_, c2_, c3_;
  BatchNorm<T> b1_, b2_, b3_;
  FeatureMap<T> a1_, a2_, a3_;
  int feature_dim_ = 0;
};

}  // namespace crew::nn
