#pragma once
#include <functional>

#include "lfgp/ndgrad.h"

namespace lfgp::nd {

// Builds one sample's loss on the given tape and returns the loss node.
using SampleLoss = std::function<int(Tape&, int sample)>;

// Accumulates (1/n) * sum of per-sample parameter gradients into ps.grads and
// returns the mean loss. Samples are spread across eight fixed accumulation
// lanes (lane = sample % 8, ascending within a lane) that are reduced in lane
// order, so the result is identical for every OpenMP thread count, including
// a serial build. An exception thrown by `build` propagates (first lane wins)
// and leaves ps.grads untouched.
double batch_grad(ParamStore& ps, int n, const SampleLoss& build);

// Single-accumulator reference implementation processing samples in order.
double batch_grad_serial(ParamStore& ps, int n, const SampleLoss& build);

}  // namespace lfgp::nd
