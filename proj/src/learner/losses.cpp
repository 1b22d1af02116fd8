#include "crew/learner/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace crew::learner {

namespace {

template <typename T>
void check_rows(const char* what, int a, int b) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": batch size mismatch");
}

template <typename T>
Matrix<T> tanh_of(const Matrix<T>& x) {
  Matrix<T> y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = std::tanh(x.data[i]);
  return y;
}

// Per-row minimum over heads evaluated at [f | a]; argmin written to `which`.
template <typename T>
std::vector<T> min_heads(std::span<Mlp<T>* const> heads, const Matrix<T>& input, std::vector<int>* which) {
  std::vector<T> best(static_cast<std::size_t>(input.rows), std::numeric_limits<T>::infinity());
  if (which) which->assign(best.size(), 0);
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const Matrix<T> q = heads[k]->forward(input);
    for (int r = 0; r < input.rows; ++r) {
      if (q(r, 0) < best[static_cast<std::size_t>(r)]) {
        best[static_cast<std::size_t>(r)] = q(r, 0);
        if (which) (*which)[static_cast<std::size_t>(r)] = static_cast<int>(k);
      }
    }
  }
  return best;
}

// Backpropagates d loss / d min_k head_k into the action columns of the
// input, routing each row's gradient through its minimizing head. Every head
// must have been evaluated on `input` by min_heads (forward caches intact).
template <typename T>
Matrix<T> action_grad_through_min(std::span<Mlp<T>* const> heads, const std::vector<int>& which,
                                  const std::vector<T>& dmin, int feature_cols, int action_cols) {
  const int n = static_cast<int>(which.size());
  Matrix<T> da(n, action_cols);
  for (std::size_t k = 0; k < heads.size(); ++k) {
    Matrix<T> dq(n, 1);
    bool any = false;
    for (int r = 0; r < n; ++r) {
      if (which[static_cast<std::size_t>(r)] == static_cast<int>(k)) {
        dq(r, 0) = dmin[static_cast<std::size_t>(r)];
        any = true;
      }
    }
    if (!any) continue;
    const Matrix<T> dx = heads[k]->backward(dq);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < action_cols; ++c) da(r, c) += dx(r, feature_cols + c);
    }
  }
  return da;
}

}  // namespace

template <typename T>
T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <typename T>
T value_regression(Encoder<T>& enc, std::span<Mlp<T>* const> heads, const FeatureMap<T>& obs,
                   const Matrix<T>& action, const std::vector<T>& target, BnMode mode, Matrix<T>* features) {
  check_rows<T>("value_regression", obs.batch, action.rows);
  check_rows<T>("value_regression", obs.batch, static_cast<int>(target.size()));
  const Matrix<T> f = enc.forward(obs, mode);
  const Matrix<T> x = nn::hconcat(f, action);
  const int n = obs.batch;
  T loss = 0;
  Matrix<T> df(n, f.cols);
  for (Mlp<T>* head : heads) {
    const Matrix<T> q = head->forward(x);
    Matrix<T> dq(n, 1);
    for (int r = 0; r < n; ++r) {
      const T e = q(r, 0) - target[static_cast<std::size_t>(r)];
      loss += e * e / static_cast<T>(n);
      dq(r, 0) = T(2) * e / static_cast<T>(n);
    }
    const Matrix<T> dx = head->backward(dq);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < f.cols; ++c) df(r, c) += dx(r, c);
    }
  }
  enc.backward(df);
  if (features) *features = f;
  return loss;
}

template <typename T>
Matrix<T> deterministic_action(Mlp<T>& actor, const Matrix<T>& features) {
  return tanh_of(actor.forward(features));
}

template <typename T>
T deterministic_actor_loss(Mlp<T>& actor, std::span<Mlp<T>* const> heads, const Matrix<T>& features) {
  const int n = features.rows;
  const Matrix<T> a = deterministic_action(actor, features);
  std::vector<int> which;
  const std::vector<T> q = min_heads(heads, nn::hconcat(features, a), &which);
  T loss = 0;
  for (T v : q) loss -= v / static_cast<T>(n);
  const std::vector<T> dmin(static_cast<std::size_t>(n), T(-1) / static_cast<T>(n));
  Matrix<T> da = action_grad_through_min(heads, which, dmin, features.cols, a.cols);
  for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= T(1) - a.data[i] * a.data[i];
  actor.backward(da);
  return loss;
}

template <typename T>
std::vector<T> ddpg_target(Encoder<T>& target_enc, Mlp<T>& target_actor, std::span<Mlp<T>* const> target_heads,
                           const FeatureMap<T>& next_obs, const std::vector<T>& reward, const std::vector<T>& done,
                           T gamma) {
  check_rows<T>("ddpg_target", next_obs.batch, static_cast<int>(reward.size()));
  const Matrix<T> f = target_enc.forward(next_obs, BnMode::Frozen);
  const Matrix<T> a = deterministic_action(target_actor, f);
  const std::vector<T> q = min_heads(target_heads, nn::hconcat(f, a), nullptr);
  std::vector<T> y(reward.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = reward[i] + gamma * (T(1) - done[i]) * q[i];
  return y;
}

template <typename T>
SquashedSample<T> squashed_sample(Mlp<T>& actor, const Matrix<T>& features, const Matrix<T>& noise, T scale_lb) {
  const Matrix<T> out = actor.forward(features);
  const int n = out.rows;
  const int a = out.cols / 2;
  if (noise.rows != n || noise.cols != a) throw std::invalid_argument("squashed_sample: noise shape mismatch");
  SquashedSample<T> s;
  s.action = Matrix<T>(n, a);
  s.u = Matrix<T>(n, a);
  s.mu = Matrix<T>(n, a);
  s.sigma = Matrix<T>(n, a);
  s.raw = Matrix<T>(n, a);
  s.log_prob.assign(static_cast<std::size_t>(n), T(0));
  const T half_log_2pi = static_cast<T>(0.5 * std::log(2.0 * std::numbers::pi));
  const T log2 = static_cast<T>(std::numbers::ln2);
  for (int r = 0; r < n; ++r) {
    T lp = 0;
    for (int c = 0; c < a; ++c) {
      const T mu = out(r, c);
      const T raw = out(r, a + c);
      const T sigma = std::max(softplus(raw), scale_lb);
      const T xi = noise(r, c);
      const T u = mu + sigma * xi;
      s.mu(r, c) = mu;
      s.raw(r, c) = raw;
      s.sigma(r, c) = sigma;
      s.u(r, c) = u;
      s.action(r, c) = std::tanh(u);
      // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
      lp += -T(0.5) * xi * xi - std::log(sigma) - half_log_2pi - T(2) * (log2 - u - softplus(T(-2) * u));
    }
    s.log_prob[static_cast<std::size_t>(r)] = lp;
  }
  return s;
}

template <typename T>
T sac_actor_loss(Mlp<T>& actor, std::span<Mlp<T>* const> heads, const Matrix<T>& features, const Matrix<T>& noise,
                 T alpha, T scale_lb, std::vector<T>* log_prob) {
  const SquashedSample<T> s = squashed_sample(actor, features, noise, scale_lb);
  const int n = features.rows;
  const int a = s.action.cols;
  std::vector<int> which;
  const std::vector<T> q = min_heads(heads, nn::hconcat(features, s.action), &which);
  T loss = 0;
  for (int r = 0; r < n; ++r) {
    loss += (alpha * s.log_prob[static_cast<std::size_t>(r)] - q[static_cast<std::size_t>(r)]) / static_cast<T>(n);
  }
  const std::vector<T> dmin(static_cast<std::size_t>(n), T(-1) / static_cast<T>(n));
  const Matrix<T> dq_da = action_grad_through_min(heads, which, dmin, features.cols, a);
  Matrix<T> dout(n, 2 * a);
  const T w = alpha / static_cast<T>(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < a; ++c) {
      const T u = s.u(r, c);
      const T act = s.action(r, c);
      const T sigma = s.sigma(r, c);
      // d logp / du = 2 tanh(u); d logp / d sigma (direct) = -1 / sigma.
      const T dl_du = w * T(2) * std::tanh(u) + dq_da(r, c) * (T(1) - act * act);
      const T dl_dsigma = dl_du * noise(r, c) - w / sigma;
      const T raw = s.raw(r, c);
      const T dsigma_draw = softplus(raw) > scale_lb ? T(1) / (T(1) + std::exp(-raw)) : T(0);
      dout(r, c) = dl_du;
      dout(r, a + c) = dl_dsigma * dsigma_draw;
    }
  }
  actor.backward(dout);
  if (log_prob) *log_prob = s.log_prob;
  return loss;
}

template <typename T>
std::vector<T> sac_target(Encoder<T>& target_enc, Mlp<T>& actor, std::span<Mlp<T>* const> target_heads,
                          const FeatureMap<T>& next_obs, const std::vector<T>& reward, const std::vector<T>& done,
                          T gamma, T alpha, const Matrix<T>& noise, T scale_lb) {
  const Matrix<T> f = target_enc.forward(next_obs, BnMode::Frozen);
  const SquashedSample<T> s = squashed_sample(actor, f, noise, scale_lb);
  const std::vector<T> q = min_heads(target_heads, nn::hconcat(f, s.action), nullptr);
  std::vector<T> y(reward.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = reward[i] + gamma * (T(1) - done[i]) * (q[i] - alpha * s.log_prob[i]);
  }
  return y;
}

template <typename T>
T alpha_loss(T log_alpha, const std::vector<T>& log_prob, T target_entropy, T* grad) {
  T m = 0;
  for (T lp : log_prob) m += (lp + target_entropy) / static_cast<T>(log_prob.size());
  if (grad) *grad = -m;
  return -log_alpha * m;
}

#define CREW_INSTANTIATE(T)                                                                                       \
  template T softplus<T>(T);                                                                                      \
  template T value_regression<T>(Encoder<T>&, std::span<Mlp<T>* const>, const FeatureMap<T>&, const Matrix<T>&,   \
                                 const std::vector<T>&, BnMode, Matrix<T>*);                                      \
  template Matrix<T> deterministic_action<T>(Mlp<T>&, const Matrix<T>&);                                          \
  template T deterministic_actor_loss<T>(Mlp<T>&, std::span<Mlp<T>* const>, const Matrix<T>&);                    \
  template std::vector<T> ddpg_target<T>(Encoder<T>&, Mlp<T>&, std::span<Mlp<T>* const>, const FeatureMap<T>&,    \
                                         const std::vector<T>&, const std::vector<T>&, T);                        \
  template SquashedSample<T> squashed_sample<T>(Mlp<T>&, const Matrix<T>&, const Matrix<T>&, T);                  \
  template T sac_actor_loss<T>(Mlp<T>&, std::span<Mlp<T>* const>, const Matrix<T>&, const Matrix<T>&, T, T,       \
                               std::vector<T>*);                                                                  \
  template std::vector<T> sac_target<T>(Encoder<T>&, Mlp<T>&, std::span<Mlp<T>* const>, const FeatureMap<T>&,     \
                                        const std::vector<T>&, const std::vector<T>&, T, T, const Matrix<T>&, T); \
  template T alpha_loss<T>(T, const std::vector<T>&, T, T*);

CREW_INSTANTIATE(float)
CREW_INSTANTIATE(double)

#undef CREW_INSTANTIATE

}  // namespace crew::learner
