#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "gradient_suite.hpp"

using namespace crew::nn;
using namespace crew::learner;

TEST_CASE("every loss gradient matches central differences") {
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto err = crew::testing::run_gradient_suite(seed);
    CHECK(err.size() == 7);
    for (const auto& [name, e] : err) {
      INFO(name << " seed " << seed << " relative error " << e);
      CHECK(e < 1e-4);
    }
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 60.0);
}

TEST_CASE("squashed gaussian log-probability matches the change-of-variables formula") {
  crew::Rng rng(4);
  Mlp<double> actor(3, {5}, 4, "a");
  actor.init(rng);
  Matrix<double> f(6, 3);
  for (auto& v : f.data) v = rng.uniform(-2, 2);
  Matrix<double> noise(6, 2);
  for (auto& v : noise.data) v = rng.normal();
  const auto s = squashed_sample<double>(actor, f, noise, 1e-4);
  const Matrix<double> out = actor.forward(f);
  for (int r = 0; r < 6; ++r) {
    long double lp = 0;
    for (int c = 0; c < 2; ++c) {
      const long double mu = out(r, c);
      const long double raw = out(r, 2 + c);
      const long double sigma = std::max(std::log1p(std::exp(raw)), 1e-4L);
      const long double u = mu + sigma * noise(r, c);
      const long double z = (u - mu) / sigma;
      lp += -0.5L * z * z - std::log(sigma) - 0.5L * std::log(2.0L * std::numbers::pi_v<long double>);
      const long double t = std::tanh(u);
      lp -= std::log(1.0L - t * t);
      CHECK(s.action(r, c) == doctest::Approx(static_cast<double>(t)).epsilon(1e-12));
    }
    CHECK(s.log_prob[r] == doctest::Approx(static_cast<double>(lp)).epsilon(1e-9));
  }
}

TEST_CASE("bootstrapped targets mask terminal transitions") {
  crew::Rng rng(8);
  EncoderSpec spec;
  spec.in_channels = 1;
  spec.height = 9;
  spec.width = 9;
  spec.filters = 2;
  spec.k1 = 3;
  spec.s1 = 2;
  spec.k2 = 2;
  spec.s2 = 1;
  spec.k3 = 2;
  spec.s3 = 1;
  Encoder<double> enc(spec);
  enc.init(rng);
  const int f = enc.feature_dim();
  Mlp<double> actor(f, {4}, 2, "a"), q1(f + 2, {4}, 1, "q1"), q2(f + 2, {4}, 1, "q2");
  actor.init(rng);
  q1.init(rng);
  q2.init(rng);
  FeatureMap<double> obs(1, 3, 9, 9);
  for (auto& v : obs.data) v = rng.uniform01();
  std::array<Mlp<double>*, 2> heads{&q1, &q2};
  const std::vector<double> r{0.5, -1.0, 2.0};
  const std::vector<double> done{1.0, 0.0, 0.0};
  const auto y = ddpg_target<double>(enc, actor, heads, obs, r, done, 0.99);
  CHECK(y[0] == 0.5);

  // Independent recomputation of the non-terminal rows.
  const Matrix<double> feat = enc.forward(obs, BnMode::Frozen);
  const Matrix<double> a = deterministic_action(actor, feat);
  const Matrix<double> x = hconcat(feat, a);
  const Matrix<double> v1 = q1.forward(x), v2 = q2.forward(x);
  for (int i = 1; i < 3; ++i) {
    CHECK(y[i] == doctest::Approx(r[i] + 0.99 * std::min(v1(i, 0), v2(i, 0))).epsilon(1e-12));
  }

  Mlp<double> sac_actor(f, {4}, 4, "s");
  sac_actor.init(rng);
  Matrix<double> noise(3, 2);
  for (auto& v : noise.data) v = rng.normal();
  const auto ys = sac_target<double>(enc, sac_actor, heads, obs, r, done, 0.99, 0.1, noise, 1e-4);
  CHECK(ys[0] == 0.5);
}

TEST_CASE("temperature loss pushes alpha toward the target entropy") {
  double g = 0.0;
  // log_prob above -target_entropy (low entropy): gradient negative, alpha grows.
  alpha_loss<double>(std::log(0.1), {8.0, 7.0}, -6.0, &g);
  CHECK(g < 0.0);
  alpha_loss<double>(std::log(0.1), {2.0, 3.0}, -6.0, &g);
  CHECK(g > 0.0);
}

TEST_CASE("an h regression already at its targets has zero gradient") {
  crew::Rng rng(9);
  EncoderSpec spec;
  spec.in_channels = 1;
  spec.height = 9;
  spec.width = 9;
  spec.filters = 2;
  spec.k1 = 3;
  spec.s1 = 2;
  spec.k2 = 2;
  spec.s2 = 1;
  spec.k3 = 2;
  spec.s3 = 1;
  Encoder<double> enc(spec);
  enc.init(rng);
  Mlp<double> h(enc.feature_dim() + 2, {4}, 1, "h");
  h.init(rng);
  FeatureMap<double> obs(1, 4, 9, 9);
  for (auto& v : obs.data) v = rng.uniform01();
  Matrix<double> action(4, 2);
  const Matrix<double> q = h.forward(hconcat(enc.forward(obs, BnMode::Train), action));
  std::vector<double> y(q.data.begin(), q.data.end());
  std::array<Mlp<double>*, 1> heads{&h};
  for (auto* p : h.params()) p->zero_grad();
  const double loss = value_regression<double>(enc, heads, obs, action, y, BnMode::Train, nullptr);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-15));
  for (auto* p : h.params()) {
    for (double g : p->grad) CHECK(std::abs(g) < 1e-12);
  }
}
