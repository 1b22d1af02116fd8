#include <doctest.h>

#include "crew/nn/optim.hpp"
#include "gradcheck.hpp"

using namespace crew::nn;
using crew::testing::fd_param_error;
using crew::testing::fd_relative_error;

namespace {

Matrix<double> random_matrix(crew::Rng& rng, int r, int c) {
  Matrix<double> m(r, c);
  for (auto& v : m.data) v = rng.uniform(-1, 1);
  return m;
}

double weighted_sum(const Matrix<double>& y, const Matrix<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * w.data[i];
  return s;
}

}  // namespace

TEST_CASE("mlp gradients match finite differences") {
  crew::Rng rng(10);
  Mlp<double> mlp(5, {8, 6}, 3, "m");
  mlp.init(rng);
  Matrix<double> x = random_matrix(rng, 4, 5);
  const Matrix<double> w = random_matrix(rng, 4, 3);
  for (auto* p : mlp.params()) p->zero_grad();
  mlp.forward(x);
  const Matrix<double> dx = mlp.backward(w);
  auto loss = [&] { return weighted_sum(mlp.forward(x), w); };
  CHECK(fd_param_error(mlp.params(), loss) < 1e-6);
  CHECK(fd_relative_error({&x.data}, {dx.data}, loss) < 1e-6);
}

TEST_CASE("encoder gradients match finite differences through batch norm") {
  crew::Rng rng(11);
  EncoderSpec spec;
  spec.in_channels = 2;
  spec.height = 14;
  spec.width = 13;
  spec.filters = 3;
  spec.k1 = 3;
  spec.s1 = 2;
  spec.k2 = 2;
  spec.s2 = 1;
  spec.k3 = 3;
  spec.s3 = 2;
  Encoder<double> enc(spec);
  enc.init(rng);
  FeatureMap<double> x(2, 3, 14, 13);
  for (auto& v : x.data) v = rng.uniform(0, 1);
  const Matrix<double> probe = enc.forward(x, BnMode::Frozen);
  const Matrix<double> w = random_matrix(rng, probe.rows, probe.cols);
  for (auto* p : enc.params()) p->zero_grad();
  enc.forward(x, BnMode::Train);
  enc.backward(w);
  // Train mode output depends on batch statistics only.
  auto loss = [&] { return weighted_sum(enc.forward(x, BnMode::Train), w); };
  CHECK(fd_param_error(enc.params(), loss) < 1e-4);
}

TEST_CASE("batch norm running statistics and eval mode") {
  BatchNorm<double> bn(1, "bn", 0.5);
  FeatureMap<double> x(1, 4, 1, 1);
  x.data = {1, 2, 3, 4};
  bn.forward(x, BnMode::Frozen);
  CHECK(bn.running_mean[0] == 0.0);
  bn.forward(x, BnMode::Train);
  CHECK(bn.running_mean[0] == doctest::Approx(1.25));
  CHECK(bn.running_var[0] == doctest::Approx(0.5 + 0.5 * (5.0 / 3.0)));
  const FeatureMap<double> y = bn.forward(x, BnMode::Eval);
  CHECK(y.data[0] == doctest::Approx((1 - 1.25) / std::sqrt(bn.running_var[0] + 1e-5)));
  FeatureMap<double> one(1, 1, 1, 1);
  CHECK_THROWS_AS(bn.forward(one, BnMode::Train), std::invalid_argument);
  CHECK_NOTHROW(bn.forward(one, BnMode::Eval));
}

TEST_CASE("gradient clipping and adam without momentum") {
  Param<double> p;
  p.resize({2});
  p.value = {1.0, -1.0};
  p.grad = {3.0, 4.0};
  std::vector<Param<double>*> ps{&p};
  CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(5.0));
  CHECK(grad_norm(ps) == doctest::Approx(1.0).epsilon(1e-5));

  Adam<double> opt(ps, AdamConfig{0.1, 0.0, 0.999, 1e-8, 0.0});
  p.grad = {2.0, -0.5};
  opt.step();
  // beta1 = 0: first step moves each weight by lr * sign(g).
  CHECK(p.value[0] == doctest::Approx(0.9));
  CHECK(p.value[1] == doctest::Approx(-0.9));
  CHECK(opt.steps() == 1);

  Param<double> q;
  q.resize({1});
  std::vector<Param<double>*> qs{&q};
  Adam<double> mom(qs, AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  q.grad = {1.0};
  mom.step();
  CHECK(q.value[0] == doctest::Approx(-0.1));
}

TEST_CASE("polyak update") {
  Param<float> t, o;
  t.resize({2});
  o.resize({2});
  t.value = {1.0f, 1.0f};
  o.value = {0.0f, 2.0f};
  polyak_update<float>({&t}, {&o}, 0.995);
  CHECK(t.value[0] == doctest::Approx(0.995));
  CHECK(t.value[1] == doctest::Approx(1.005));
  std::vector<float> bt{1.0f}, bo{3.0f};
  polyak_update<float>(std::vector<std::vector<float>*>{&bt}, std::vector<std::vector<float>*>{&bo}, 0.5);
  CHECK(bt[0] == doctest::Approx(2.0));
}
