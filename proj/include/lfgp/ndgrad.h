#pragma once
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lfgp/rng.h"

namespace lfgp::nd {

// Flat parameter storage shared by every learned component. A network's
// weights live in a contiguous slice; the optimizer state is carried along.
struct ParamStore {
  std::vector<double> values;
  std::vector<double> grads;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  long step_count = 0;

  ParamStore() = default;
  explicit ParamStore(int n) { resize(n); }
  void resize(int n) {
    values.assign(n, 0.0);
    grads.assign(n, 0.0);
    adam_m.assign(n, 0.0);
    adam_v.assign(n, 0.0);
  }
  int size() const { return static_cast<int>(values.size()); }
  void zero_grad() { grads.assign(grads.size(), 0.0); }
};

enum class Act { identity, relu, tanh };

// Fully-connected network shape; layer l maps width[l] -> width[l+1] through
// an affine map followed by the layer's activation (output layer identity).
struct MLPSpec {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<std::pair<int, Act>> hidden;

  int param_count() const;
};

// Overflow-safe softplus, shared by the tape op and scalar code paths so
// both produce bit-identical values.
inline double softplus_val(double v) {
  return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

// Initializes one affine block (row-major W at w_off, zeroed bias at b_off
// unless b_off < 0): zero-mean normals with He gain for relu and Xavier gain
// otherwise. fan_in overrides the gain's input width when the block is one
// column-slice of a logically wider layer (default: in_dim).
void init_affine(ParamStore& ps, int w_off, int b_off, int in_dim, int out_dim,
                 Act act, Rng& rng, int fan_in = -1);

// Parameter layout per layer: row-major W (out x in), then b (out).
// Initialization: He for relu layers, Xavier for tanh/identity.
void init_mlp_params(ParamStore& ps, const MLPSpec& spec, int offset, Rng& rng);

// Reverse-mode differentiation over a dynamically recorded tape of vector
// ops. Values are computed eagerly at record time. backward() walks the tape
// in reverse and *emits further tape ops* for every propagated cotangent, so
// a second backward over the extended tape differentiates through the first
// one (needed for input-gradient penalties).
class Tape {
 public:
  // Reads parameters from ps.values; parameter gradients accumulate into
  // ps.grads (or into *sink when given, used by the batch kernels).
  explicit Tape(ParamStore& ps) : ps_(&ps), sink_(&ps.grads) {}
  Tape(const ParamStore& ps, std::vector<double>* sink)
      : ps_(const_cast<ParamStore*>(&ps)), sink_(sink) {}

  int input(std::vector<double> x);               // differentiable leaf
  int constant(std::vector<double> x);            // non-differentiable leaf
  int affine(int w_off, int b_off, int in_dim, int out_dim, int x);
  int mlp(const MLPSpec& spec, int offset, int x);  // full forward pass
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  int add_scalar(int a, double c);
  int relu(int a);
  int tanh_(int a);
  int sigmoid(int a);
  int softplus(int a);
  int sqrt_(int a);  // derivative is 1/(2*sqrt): keep values away from 0
  int inv(int a);    // elementwise reciprocal
  int log_(int a);   // natural log; inputs must stay positive
  int broadcast(int a, int n);  // length-1 node -> n copies
  int sum(int a);               // -> length-1 node
  int dot(int a, int b);        // -> length-1 node

  const std::vector<double>& value(int node) const;
  double scalar(int node) const;  // value of a length-1 node

  // Accumulate d loss / d params into the gradient sink. loss must be a
  // length-1 node recorded on this tape.
  void backward(int loss);

  // Emit the reverse pass for d loss / d x without touching parameter
  // gradients; returns a node holding the input gradient (zeros if x does
  // not influence loss).
  int grad_of_input(int loss, int x);

 private:
  enum class OpKind {
    leaf, affine, matvec_t, add, sub, mul, scale, add_scalar,
    relu, tanh_, sigmoid, softplus, sqrt_, inv, log_, broadcast, sum, dot,
  };
  struct Op {
    OpKind kind;
    int out;
    int a = -1;
    int b = -1;
    int w_off = -1;   // affine/matvec_t weight slice
    int b_off = -1;   // affine bias slice (-1: no bias)
    int in_dim = 0;
    int out_dim = 0;
    double c = 0.0;
  };

  int matvec_t(int w_off, int in_dim, int out_dim, int u);
  int new_node(std::vector<double> v);
  void check_node(int node) const;
  // Shared reverse walk; into_params controls eager accumulation into the
  // sink; returns the cotangent node of want (or -1 if want < 0 / unreached).
  int backward_impl(int loss, bool into_params, int want);

  ParamStore* ps_;
  std::vector<double>* sink_;
  std::vector<std::vector<double>> vals_;
  std::vector<Op> ops_;
};

// Scales gradients so the global L2 norm is at most max_norm; returns the
// factor applied (1 when already within bounds).
double clip_grad_norm(ParamStore& ps, double max_norm);

// Adam with decoupled weight decay (values scaled by 1 - lr*weight_decay
// before the moment update). Throws on non-finite gradients without
// modifying any state.
void adam_step(ParamStore& ps, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8,
               double weight_decay = 0.0);

// Checkpoint format: two header lines ("lfgp-params 1", description), a line
// with the parameter count, then count little-endian 32-bit floats.
void save_params(const std::string& path, const std::string& description,
                 const ParamStore& ps);
// Restores values (optimizer state resets); throws if the description or
// count does not match.
void load_params(const std::string& path, const std::string& description,
                 ParamStore& ps);

}  // namespace lfgp::nd
