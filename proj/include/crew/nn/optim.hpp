#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crew/nn/layers.hpp"

namespace crew::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.1;  // <= 0 disables clipping
};

// Global L2 norm over all gradients.
template <typename T>
double grad_norm(const std::vector<Param<T>*>& params) {
  double s = 0.0;
  for (const auto* p : params) {
    for (T g : p->grad) s += static_cast<double>(g) * g;
  }
  return std::sqrt(s);
}

// Rescales gradients so their global norm is at most max_norm. Returns the
// norm before clipping.
template <typename T>
double clip_grad_norm(const std::vector<Param<T>*>& params, double max_norm) {
  const double n = grad_norm(params);
  if (max_norm > 0.0 && n > max_norm) {
    const T scale = static_cast<T>(max_norm / (n + 1e-6));
    for (auto* p : params) {
      for (T& g : p->grad) g *= scale;
    }
  }
  return n;
}

template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Param<T>*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.size(), T(0));
      v_.emplace_back(p->value.size(), T(0));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  // Clips, then applies one update. Returns the pre-clip gradient norm.
  double step() {
    const double norm = clip_grad_norm(params_, cfg_.max_grad_norm);
    ++t_;
    const double bc1 = cfg_.beta1 > 0.0 ? 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)) : 1.0;
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(cfg_.beta1);
    const T b2 = static_cast<T>(cfg_.beta2);
    const T lr_t = static_cast<T>(cfg_.lr * std::sqrt(bc2) / bc1);
    const T eps = static_cast<T>(cfg_.eps * std::sqrt(bc2));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& val = params_[i]->value;
      const auto& g = params_[i]->grad;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < val.size(); ++j) {
        m[j] = b1 * m[j] + (T(1) - b1) * g[j];
        v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
        val[j] -= lr_t * m[j] / (std::sqrt(v[j]) + eps);
      }
    }
    return norm;
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::vector<std::vector<T>>& first_moments() { return m_; }
  std::vector<std::vector<T>>& second_moments() { return v_; }
  void set_steps(long t) { t_ = t; }

 private:
  std::vector<Param<T>*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<T>> m_, v_;
  long t_ = 0;
};

// target <- keep * target + (1 - keep) * online, parameters and buffers.
template <typename T>
void polyak_update(const std::vector<Param<T>*>& target, const std::vector<Param<T>*>& online, double keep) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak_update: parameter lists differ");
  const T k = static_cast<T>(keep);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& t = target[i]->value;
    const auto& o = online[i]->value;
    if (t.size() != o.size()) throw std::invalid_argument("polyak_update: shape mismatch for " + target[i]->name);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = k * t[j] + (T(1) - k) * o[j];
  }
}

template <typename T>
void polyak_update(const std::vector<std::vector<T>*>& target, const std::vector<std::vector<T>*>& online,
                   double keep) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak_update: buffer lists differ");
  const T k = static_cast<T>(keep);
  for (std::size_t i = 0; i < target.size(); ++i) {
    for (std::size_t j = 0; j < target[i]->size(); ++j) {
      (*target[i])[j] = k * (*target[i])[j] + (T(1) - k) * (*online[i])[j];
    }
  }
}

}  // namespace crew::nn
