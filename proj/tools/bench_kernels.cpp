// Compares the lane-parallel batch-gradient kernel against the serial
// reference on a discriminator-sized network and reports agreement.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "lfgp/kernels.h"
#include "lfgp/ndgrad.h"
#include "lfgp/rng.h"

using namespace lfgp;
using namespace lfgp::nd;

int main() {
  MLPSpec spec;
  spec.input_dim = 22;
  spec.output_dim = 1;
  spec.hidden = {{64, Act::tanh}, {64, Act::tanh}};

  ParamStore ps(spec.param_count());
  Rng rng(7);
  init_mlp_params(ps, spec, 0, rng);

  const int batch = 256;
  std::vector<std::vector<double>> xs(batch);
  for (auto& x : xs) {
    x.resize(spec.input_dim);
    for (double& v : x) v = rng.normal();
  }
  auto build = [&](Tape& t, int i) {
    const int out = t.mlp(spec, 0, t.input(xs[i]));
    return t.mul(out, out);  // squared output as a stand-in loss
  };

  auto time_ms = [&](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t0)
        .count();
  };

  const int reps = 20;
  double serial_ms = 0, lane_ms = 0, loss_serial = 0, loss_lane = 0;
  std::vector<double> g_serial, g_lane;

  ps.zero_grad();
  serial_ms = time_ms([&] {
    for (int r = 0; r < reps; ++r) {
      ps.zero_grad();
      loss_serial = batch_grad_serial(ps, batch, build);
    }
  });
  g_serial = ps.grads;

  lane_ms = time_ms([&] {
    for (int r = 0; r < reps; ++r) {
      ps.zero_grad();
      loss_lane = batch_grad(ps, batch, build);
    }
  });
  g_lane = ps.grads;

  double max_rel = 0;
  for (std::size_t i = 0; i < g_serial.size(); ++i) {
    const double denom = std::max(std::abs(g_serial[i]), 1e-9);
    max_rel = std::max(max_rel, std::abs(g_serial[i] - g_lane[i]) / denom);
  }
  std::printf("batch=%d params=%d reps=%d\n", batch, ps.size(), reps);
  std::printf("serial reference : %8.2f ms total  %6.2f ms/call  loss=%.12f\n",
              serial_ms, serial_ms / reps, loss_serial);
  std::printf("lane-parallel    : %8.2f ms total  %6.2f ms/call  loss=%.12f\n",
              lane_ms, lane_ms / reps, loss_lane);
  std::printf("max relative gradient difference: %.3e\n", max_rel);
  return max_rel < 1e-9 ? 0 : 1;
}
