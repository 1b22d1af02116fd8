#pragma once

#include <span>
#include <vector>

#include "crew/nn/layers.hpp"

namespace crew::learner {

using nn::BnMode;
using nn::Encoder;
using nn::FeatureMap;
using nn::Matrix;
using nn::Mlp;

// Every function below accumulates gradients into the parameters of the
// networks it differentiates; callers zero them first. Heads take the
// concatenation [features | action].

// Sum over heads of the mean squared error (head(f, a) - target)^2,
// backpropagated into the heads and the encoder. Writes the
// encoder output to *features when given.
template <typename T>
T value_regression(Encoder<T>& enc, std::span<Mlp<T>* const> heads, const FeatureMap<T>& obs,
                   const Matrix<T>& action, const std::vector<T>& target, BnMode mode, Matrix<T>* features);

// Deterministic tanh actor maximizing min over heads: loss = -mean min_k head_k(f, tanh(actor(f))).
// Gradients flow into the actor (and, as a side effect, the heads).
template <typename T>
T deterministic_actor_loss(Mlp<T>& actor, std::span<Mlp<T>* const> heads, const Matrix<T>& features);

// Greedy action of a tanh actor.
template <typename T>
Matrix<T> deterministic_action(Mlp<T>& actor, const Matrix<T>& features);

// One-step bootstrapped target r + gamma (1 - done) min_k head_k(f', tanh(actor(f'))).
template <typename T>
std::vector<T> ddpg_target(Encoder<T>& target_enc, Mlp<T>& target_actor, std::span<Mlp<T>* const> target_heads,
                           const FeatureMap<T>& next_obs, const std::vector<T>& reward, const std::vector<T>& done,
                           T gamma);

// Tanh-squashed Gaussian policy. The actor outputs [mu | raw]; the scale is
// max(softplus(raw), scale_lb).
template <typename T>
struct SquashedSample {
  Matrix<T> action;       // tanh(u)
  std::vector<T> log_prob;
  Matrix<T> u, mu, sigma, raw;
};

template <typename T>
SquashedSample<T> squashed_sample(Mlp<T>& actor, const Matrix<T>& features, const Matrix<T>& noise, T scale_lb);

// loss = mean(alpha * log_prob - min_k head_k(f, a)), reparameterized with fixed noise.
template <typename T>
T sac_actor_loss(Mlp<T>& actor, std::span<Mlp<T>* const> heads, const Matrix<T>& features, const Matrix<T>& noise,
                 T alpha, T scale_lb, std::vector<T>* log_prob);

// r + gamma (1 - done) (min_k head_k(f', a') - alpha log pi(a' | f')), a' ~ pi(f').
template <typename T>
std::vector<T> sac_target(Encoder<T>& target_enc, Mlp<T>& actor, std::span<Mlp<T>* const> target_heads,
                          const FeatureMap<T>& next_obs, const std::vector<T>& reward, const std::vector<T>& done,
                          T gamma, T alpha, const Matrix<T>& noise, T scale_lb);

// Temperature loss -log_alpha * mean(log_prob + target_entropy); returns the
// loss and writes d loss / d log_alpha.
template <typename T>
T alpha_loss(T log_alpha, const std::vector<T>& log_prob, T target_entropy, T* grad);

template <typename T>
T softplus(T x);

}  // namespace crew::learner
