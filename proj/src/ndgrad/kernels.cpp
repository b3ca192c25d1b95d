#include "lfgp/kernels.h"

#include <array>
#include <exception>
#include <stdexcept>
#include <vector>

namespace lfgp::nd {

namespace {
constexpr int kLanes = 8;
}

double batch_grad(ParamStore& ps, int n, const SampleLoss& build) {
  if (n <= 0) throw std::invalid_argument("batch_grad: empty batch");
  const int p = ps.size();
  std::vector<std::vector<double>> lane_grads(kLanes, std::vector<double>(p, 0.0));
  std::array<double, kLanes> lane_loss{};
  // Exceptions must not escape the parallel region; the first one (in lane
  // order) is rethrown after it, before ps.grads is touched.
  std::array<std::exception_ptr, kLanes> lane_error{};

#ifdef LFGP_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int lane = 0; lane < kLanes; ++lane) {
    try {
      for (int i = lane; i < n; i += kLanes) {
        Tape tape(static_cast<const ParamStore&>(ps), &lane_grads[lane]);
        const int loss = build(tape, i);
        lane_loss[lane] += tape.scalar(loss);
        tape.backward(loss);
      }
    } catch (...) {
      lane_error[lane] = std::current_exception();
    }
  }
  for (int lane = 0; lane < kLanes; ++lane)
    if (lane_error[lane]) std::rethrow_exception(lane_error[lane]);

  double total = 0.0;
  const double inv = 1.0 / n;
  for (int lane = 0; lane < kLanes; ++lane) {
    total += lane_loss[lane];
    for (int k = 0; k < p; ++k) ps.grads[k] += inv * lane_grads[lane][k];
  }
  return total * inv;
}

double batch_grad_serial(ParamStore& ps, int n, const SampleLoss& build) {
  if (n <= 0) throw std::invalid_argument("batch_grad_serial: empty batch");
  const int p = ps.size();
  std::vector<double> acc(p, 0.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    Tape tape(static_cast<const ParamStore&>(ps), &acc);
    const int loss = build(tape, i);
    total += tape.scalar(loss);
    tape.backward(loss);
  }
  const double inv = 1.0 / n;
  for (int k = 0; k < p; ++k) ps.grads[k] += inv * acc[k];
  return total * inv;
}

}  // namespace lfgp::nd
