// Times the parallel kernels against the serial reference implementations on
// the encoder's layer shapes. Usage: kernel_bench [batch] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "crew/common/rng.hpp"
#include "crew/nn/kernels.hpp"
#include "crew/nn/layers.hpp"
#include "crew/nn/reference.hpp"

using namespace crew::nn;

namespace {

template <typename F>
double seconds(int repeats, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

struct Shape {
  const char* name;
  int cin, h, w, cout, k, s;
};

}  // namespace

int main(int argc, char** argv) {
  const int batch = argc > 1 ? std::atoi(argv[1]) : 16;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  crew::Rng rng(1);
  std::printf("threads=%d batch=%d repeats=%d\n", omp_get_max_threads(), batch, repeats);
  std::printf("%-8s %12s %12s %8s %10s\n", "layer", "serial_ms", "parallel_ms", "speedup", "max_diff");
  const Shape shapes[] = {{"conv1", 9, 100, 100, 64, 4, 4}, {"conv2", 64, 25, 25, 64, 3, 2}, {"conv3", 64, 12, 12, 64, 3, 2}};
  for (const Shape& sh : shapes) {
    Conv2d<float> conv(sh.cin, sh.cout, sh.k, sh.s, sh.name);
    conv.init(rng);
    FeatureMap<float> x(sh.cin, batch, sh.h, sh.w);
    for (float& v : x.data) v = static_cast<float>(rng.uniform01());
    FeatureMap<float> y;
    const double par = seconds(repeats, [&] { y = conv.forward(x); });
    std::vector<float> ref(y.data.size());
    const double ser = seconds(repeats, [&] {
      reference::conv2d_forward(x.data.data(), sh.cin, batch, sh.h, sh.w, conv.weight.value.data(),
                                conv.bias.value.data(), sh.cout, sh.k, sh.s, ref.data());
    });
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) diff = std::max(diff, static_cast<double>(std::abs(ref[i] - y.data[i])));
    std::printf("%-8s %12.2f %12.2f %8.1f %10.2e\n", sh.name, ser * 1e3, par * 1e3, ser / par, diff);
  }

  const int c = 64, count = batch * 25 * 25;
  std::vector<float> xs(static_cast<std::size_t>(c) * count), ys(xs.size()), xhat(xs.size()), ref(xs.size());
  for (float& v : xs) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<float> gamma(c, 1.0f), beta(c, 0.0f), mean(c), inv_std(c);
  const double par = seconds(repeats, [&] {
    kernels::batchnorm_forward(xs.data(), c, count, gamma.data(), beta.data(), 1e-5f, xhat.data(), ys.data(),
                               mean.data(), inv_std.data());
  });
  const double ser = seconds(repeats, [&] {
    reference::batchnorm_forward(xs.data(), c, count, gamma.data(), beta.data(), 1e-5f, ref.data());
  });
  double diff = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) diff = std::max(diff, static_cast<double>(std::abs(ref[i] - ys[i])));
  std::printf("%-8s %12.2f %12.2f %8.1f %10.2e\n", "bn", ser * 1e3, par * 1e3, ser / par, diff);
  return 0;
}
