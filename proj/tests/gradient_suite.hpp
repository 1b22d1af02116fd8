#pragma once

#include <array>
#include <map>
#include <string>

#include "crew/learner/losses.hpp"
#include "gradcheck.hpp"

namespace crew::testing {

// Finite-difference checks of every learner loss on small double networks.
// Returns the relative error per loss term.
inline std::map<std::string, double> run_gradient_suite(std::uint64_t seed) {
  using namespace crew::nn;
  using namespace crew::learner;
  Rng rng(seed);
  EncoderSpec spec;
  spec.in_channels = 2;
  spec.height = 9;
  spec.width = 9;
  spec.filters = 3;
  spec.k1 = 3;
  spec.s1 = 2;
  spec.k2 = 2;
  spec.s2 = 1;
  spec.k3 = 2;
  spec.s3 = 1;
  const int n = 5;
  const int adim = 2;
  Encoder<double> enc(spec, "enc");
  enc.init(rng);
  const int f = enc.feature_dim();
  Mlp<double> h1(f + adim, {6, 5}, 1, "q1"), h2(f + adim, {6, 5}, 1, "q2");
  h1.init(rng);
  h2.init(rng);
  Mlp<double> actor(f, {6, 5}, adim, "actor");
  actor.init(rng);
  Mlp<double> sac_actor(f, {6, 5}, 2 * adim, "sac_actor");
  sac_actor.init(rng);

  FeatureMap<double> obs(spec.in_channels, n, spec.height, spec.width);
  for (auto& v : obs.data) v = rng.uniform(0, 1);
  Matrix<double> action(n, adim);
  for (auto& v : action.data) v = rng.uniform(-1, 1);
  std::vector<double> target(n);
  for (auto& v : target) v = rng.uniform(-1, 1);
  Matrix<double> features(n, f);
  for (auto& v : features.data) v = rng.uniform(0, 1);
  Matrix<double> noise(n, adim);
  for (auto& v : noise.data) v = rng.normal();

  auto params_of = [](std::initializer_list<std::vector<Param<double>*>> groups) {
    std::vector<Param<double>*> out;
    for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
    return out;
  };
  auto zero = [](const std::vector<Param<double>*>& ps) {
    for (auto* p : ps) p->zero_grad();
  };
  std::map<std::string, double> err;

  {  // H regression: one head, encoder and head parameters.
    std::array<Mlp<double>*, 1> heads{&h1};
    const auto ps = params_of({enc.params(), h1.params()});
    zero(ps);
    value_regression<double>(enc, heads, obs, action, target, BnMode::Train, nullptr);
    err["h_regression"] = fd_param_error(ps, [&] {
      return value_regression<double>(enc, heads, obs, action, target, BnMode::Train, nullptr);
    });
  }
  {  // TAMER actor: ascent on H(s, A(s)).
    std::array<Mlp<double>*, 1> heads{&h1};
    zero(actor.params());
    deterministic_actor_loss<double>(actor, heads, features);
    err["tamer_actor"] = fd_param_error(actor.params(), [&] {
      return deterministic_actor_loss<double>(actor, heads, features);
    });
  }
  std::array<Mlp<double>*, 2> twin{&h1, &h2};
  {  // DDPG critic: twin heads regress a bootstrapped target.
    std::vector<double> reward(n), done(n);
    for (int i = 0; i < n; ++i) {
      reward[i] = rng.uniform(-1, 1);
      done[i] = i == 0 ? 1.0 : 0.0;
    }
    Encoder<double> target_enc = enc;
    Mlp<double> target_actor = actor;
    Mlp<double> t1 = h1, t2 = h2;
    std::array<Mlp<double>*, 2> target_heads{&t1, &t2};
    const auto y = ddpg_target<double>(target_enc, target_actor, target_heads, obs, reward, done, 0.99);
    const auto ps = params_of({enc.params(), h1.params(), h2.params()});
    zero(ps);
    value_regression<double>(enc, twin, obs, action, y, BnMode::Train, nullptr);
    err["ddpg_critic"] =
        fd_param_error(ps, [&] { return value_regression<double>(enc, twin, obs, action, y, BnMode::Train, nullptr); });
  }
  {  // DDPG actor: ascent on min over twin heads.
    zero(actor.params());
    deterministic_actor_loss<double>(actor, twin, features);
    err["ddpg_actor"] =
        fd_param_error(actor.params(), [&] { return deterministic_actor_loss<double>(actor, twin, features); });
  }
  const double alpha = 0.1;
  const double lb = 1e-4;
  {  // SAC critic: twin heads regress the entropy-regularized target.
    std::vector<double> reward(n, 0.5), done(n, 0.0);
    Encoder<double> target_enc = enc;
    Mlp<double> t1 = h1, t2 = h2;
    std::array<Mlp<double>*, 2> target_heads{&t1, &t2};
    const auto y = sac_target<double>(target_enc, sac_actor, target_heads, obs, reward, done, 0.99, alpha, noise, lb);
    const auto ps = params_of({enc.params(), h1.params(), h2.params()});
    zero(ps);
    value_regression<double>(enc, twin, obs, action, y, BnMode::Train, nullptr);
    err["sac_critic"] =
        fd_param_error(ps, [&] { return value_regression<double>(enc, twin, obs, action, y, BnMode::Train, nullptr); });
  }
  {  // SAC actor: reparameterized alpha * log pi - min Q.
    zero(sac_actor.params());
    sac_actor_loss<double>(sac_actor, twin, features, noise, alpha, lb, nullptr);
    err["sac_actor"] = fd_param_error(sac_actor.params(), [&] {
      return sac_actor_loss<double>(sac_actor, twin, features, noise, alpha, lb, nullptr);
    });
  }
  {  // SAC temperature.
    std::vector<double> logp(n);
    for (auto& v : logp) v = rng.uniform(-3, 1);
    std::vector<double> log_alpha{std::log(alpha)};
    double g = 0.0;
    alpha_loss<double>(log_alpha[0], logp, -6.0, &g);
    err["sac_temperature"] = fd_relative_error({&log_alpha}, {{g}}, [&] {
      double unused = 0.0;
      return alpha_loss<double>(log_alpha[0], logp, -6.0, &unused);
    });
  }
  return err;
}

}  // namespace crew::testing
