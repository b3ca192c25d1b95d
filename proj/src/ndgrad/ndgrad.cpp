#include "lfgp/ndgrad.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace lfgp::nd {

int MLPSpec::param_count() const {
  int count = 0;
  int in = input_dim;
  for (const auto& [width, act] : hidden) {
    (void)act;
    count += width * in + width;
    in = width;
  }
  count += output_dim * in + output_dim;
  return count;
}

void init_affine(ParamStore& ps, int w_off, int b_off, int in_dim, int out_dim,
                 Act act, Rng& rng, int fan_in) {
  if (fan_in < 0) fan_in = in_dim;
  if (w_off + out_dim * in_dim > ps.size() ||
      (b_off >= 0 && b_off + out_dim > ps.size()))
    throw std::invalid_argument("init_affine: slice exceeds store");
  const double gain = act == Act::relu ? std::sqrt(2.0 / fan_in)
                                       : std::sqrt(1.0 / fan_in);
  for (int i = 0; i < out_dim * in_dim; ++i)
    ps.values[w_off + i] = gain * rng.normal();
  if (b_off >= 0)
    for (int i = 0; i < out_dim; ++i) ps.values[b_off + i] = 0.0;
}

void init_mlp_params(ParamStore& ps, const MLPSpec& spec, int offset, Rng& rng) {
  if (offset + spec.param_count() > ps.size())
    throw std::invalid_argument("init_mlp_params: slice exceeds store");
  int in = spec.input_dim;
  int off = offset;
  auto layer = [&](int out, Act act) {
    init_affine(ps, off, off + out * in, in, out, act, rng);
    off += out * in + out;
    in = out;
  };
  for (const auto& [width, act] : spec.hidden) layer(width, act);
  layer(spec.output_dim, Act::identity);
}

int Tape::new_node(std::vector<double> v) {
  vals_.push_back(std::move(v));
  return static_cast<int>(vals_.size()) - 1;
}

void Tape::check_node(int node) const {
  if (node < 0 || node >= static_cast<int>(vals_.size()))
    throw std::logic_error("tape: unknown node (backward before forward?)");
}

const std::vector<double>& Tape::value(int node) const {
  check_node(node);
  return vals_[node];
}

double Tape::scalar(int node) const {
  const auto& v = value(node);
  if (v.size() != 1) throw std::logic_error("tape: node is not scalar");
  return v[0];
}

int Tape::input(std::vector<double> x) {
  const int out = new_node(std::move(x));
  ops_.push_back({OpKind::leaf, out});
  return out;
}

int Tape::constant(std::vector<double> x) {
  const int out = new_node(std::move(x));
  ops_.push_back({OpKind::leaf, out});
  return out;
}

int Tape::affine(int w_off, int b_off, int in_dim, int out_dim, int x) {
  check_node(x);
  if (static_cast<int>(vals_[x].size()) != in_dim)
    throw std::invalid_argument("affine: input length mismatch");
  const double* W = ps_->values.data() + w_off;
  std::vector<double> y(out_dim);
  for (int i = 0; i < out_dim; ++i) {
    double acc = b_off >= 0 ? ps_->values[b_off + i] : 0.0;
    const double* row = W + static_cast<std::size_t>(i) * in_dim;
    for (int j = 0; j < in_dim; ++j) acc += row[j] * vals_[x][j];
    y[i] = acc;
  }
  const int out = new_node(std::move(y));
  ops_.push_back({OpKind::affine, out, x, -1, w_off, b_off, in_dim, out_dim});
  return out;
}

int Tape::matvec_t(int w_off, int in_dim, int out_dim, int u) {
  check_node(u);
  if (static_cast<int>(vals_[u].size()) != out_dim)
    throw std::invalid_argument("matvec_t: input length mismatch");
  const double* W = ps_->values.data() + w_off;
  std::vector<double> z(in_dim, 0.0);
  for (int i = 0; i < out_dim; ++i) {
    const double* row = W + static_cast<std::size_t>(i) * in_dim;
    for (int j = 0; j < in_dim; ++j) z[j] += row[j] * vals_[u][i];
  }
  const int out = new_node(std::move(z));
  ops_.push_back({OpKind::matvec_t, out, u, -1, w_off, -1, in_dim, out_dim});
  return out;
}

int Tape::mlp(const MLPSpec& spec, int offset, int x) {
  check_node(x);
  if (static_cast<int>(vals_[x].size()) != spec.input_dim)
    throw std::invalid_argument("mlp: input length mismatch");
  if (offset + spec.param_count() > ps_->size())
    throw std::invalid_argument("mlp: slice exceeds store");
  int in = spec.input_dim;
  int off = offset;
  int h = x;
  auto layer = [&](int width, Act act) {
    h = affine(off, off + width * in, in, width, h);
    off += width * in + width;
    in = width;
    if (act == Act::relu) h = relu(h);
    if (act == Act::tanh) h = tanh_(h);
  };
  for (const auto& [width, act] : spec.hidden) layer(width, act);
  layer(spec.output_dim, Act::identity);
  return h;
}

#define LFGP_BINOP(NAME, KIND, EXPR)                                       \
  int Tape::NAME(int a, int b) {                                           \
    check_node(a);                                                         \
    check_node(b);                                                         \
    if (vals_[a].size() != vals_[b].size())                                \
      throw std::invalid_argument(#NAME ": length mismatch");              \
    std::vector<double> y(vals_[a].size());                                \
    for (std::size_t i = 0; i < y.size(); ++i) {                           \
      const double av = vals_[a][i], bv = vals_[b][i];                     \
      y[i] = (EXPR);                                                       \
    }                                                                      \
    const int out = new_node(std::move(y));                                \
    ops_.push_back({OpKind::KIND, out, a, b});                             \
    return out;                                                            \
  }

LFGP_BINOP(add, add, av + bv)
LFGP_BINOP(sub, sub, av - bv)
LFGP_BINOP(mul, mul, av * bv)
#undef LFGP_BINOP

#define LFGP_UNOP(NAME, KIND, EXPR)                        \
  int Tape::NAME(int a) {                                  \
    check_node(a);                                         \
    std::vector<double> y(vals_[a].size());                \
    for (std::size_t i = 0; i < y.size(); ++i) {           \
      const double v = vals_[a][i];                        \
      y[i] = (EXPR);                                       \
    }                                                      \
    const int out = new_node(std::move(y));                \
    ops_.push_back({OpKind::KIND, out, a});                \
    return out;                                            \
  }

LFGP_UNOP(relu, relu, v > 0 ? v : 0.0)
LFGP_UNOP(tanh_, tanh_, std::tanh(v))
LFGP_UNOP(sigmoid, sigmoid, 1.0 / (1.0 + std::exp(-v)))
LFGP_UNOP(softplus, softplus, softplus_val(v))
LFGP_UNOP(sqrt_, sqrt_, std::sqrt(v))
LFGP_UNOP(inv, inv, 1.0 / v)
LFGP_UNOP(log_, log_, std::log(v))
#undef LFGP_UNOP

int Tape::scale(int a, double c) {
  check_node(a);
  std::vector<double> y(vals_[a].size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = c * vals_[a][i];
  const int out = new_node(std::move(y));
  Op op{OpKind::scale, out, a};
  op.c = c;
  ops_.push_back(op);
  return out;
}

int Tape::add_scalar(int a, double c) {
  check_node(a);
  std::vector<double> y(vals_[a].size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = vals_[a][i] + c;
  const int out = new_node(std::move(y));
  Op op{OpKind::add_scalar, out, a};
  op.c = c;
  ops_.push_back(op);
  return out;
}

int Tape::broadcast(int a, int n) {
  check_node(a);
  if (vals_[a].size() != 1)
    throw std::invalid_argument("broadcast: source must be length 1");
  const int out = new_node(std::vector<double>(n, vals_[a][0]));
  Op op{OpKind::broadcast, out, a};
  op.out_dim = n;
  ops_.push_back(op);
  return out;
}

int Tape::sum(int a) {
  check_node(a);
  double acc = 0;
  for (double v : vals_[a]) acc += v;
  const int out = new_node({acc});
  ops_.push_back({OpKind::sum, out, a});
  return out;
}

int Tape::dot(int a, int b) {
  check_node(a);
  check_node(b);
  if (vals_[a].size() != vals_[b].size())
    throw std::invalid_argument("dot: length mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < vals_[a].size(); ++i) acc += vals_[a][i] * vals_[b][i];
  const int out = new_node({acc});
  ops_.push_back({OpKind::dot, out, a, b});
  return out;
}

void Tape::backward(int loss) { backward_impl(loss, true, -1); }

int Tape::grad_of_input(int loss, int x) {
  check_node(x);
  const int g = backward_impl(loss, false, x);
  if (g >= 0) return g;
  return constant(std::vector<double>(vals_[x].size(), 0.0));
}

int Tape::backward_impl(int loss, bool into_params, int want) {
  check_node(loss);
  if (vals_[loss].size() != 1)
    throw std::logic_error("backward: loss must be a length-1 node");
  const int op_end = static_cast<int>(ops_.size());
  std::vector<int> cot(vals_.size(), -1);
  cot[loss] = constant({1.0});

  auto accumulate = [&](int node, int g) {
    cot[node] = cot[node] < 0 ? g : add(cot[node], g);
  };

  for (int k = op_end - 1; k >= 0; --k) {
    const Op op = ops_[k];  // copy: emission below may reallocate ops_
    if (op.out >= static_cast<int>(cot.size())) continue;
    const int u = cot[op.out];
    if (u < 0) continue;
    switch (op.kind) {
      case OpKind::leaf:
        break;
      case OpKind::affine: {
        if (into_params) {
          const auto& uv = vals_[u];
          const auto& xv = vals_[op.a];
          double* gw = sink_->data() + op.w_off;
          for (int i = 0; i < op.out_dim; ++i) {
            double* row = gw + static_cast<std::size_t>(i) * op.in_dim;
            for (int j = 0; j < op.in_dim; ++j) row[j] += uv[i] * xv[j];
          }
          if (op.b_off >= 0) {
            double* gb = sink_->data() + op.b_off;
            for (int i = 0; i < op.out_dim; ++i) gb[i] += uv[i];
          }
        }
        accumulate(op.a, matvec_t(op.w_off, op.in_dim, op.out_dim, u));
        break;
      }
      case OpKind::matvec_t: {
        // z = W^T u with W (out_dim x in_dim): dW_ij += u_i * zbar_j
        if (into_params) {
          const auto& uin = vals_[op.a];
          const auto& zb = vals_[u];
          double* gw = sink_->data() + op.w_off;
          for (int i = 0; i < op.out_dim; ++i) {
            double* row = gw + static_cast<std::size_t>(i) * op.in_dim;
            for (int j = 0; j < op.in_dim; ++j) row[j] += uin[i] * zb[j];
          }
        }
        accumulate(op.a, affine(op.w_off, -1, op.in_dim, op.out_dim, u));
        break;
      }
      case OpKind::add:
        accumulate(op.a, u);
        accumulate(op.b, u);
        break;
      case OpKind::sub:
        accumulate(op.a, u);
        accumulate(op.b, scale(u, -1.0));
        break;
      case OpKind::mul:
        accumulate(op.a, mul(u, op.b));
        accumulate(op.b, mul(u, op.a));
        break;
      case OpKind::scale:
        accumulate(op.a, scale(u, op.c));
        break;
      case OpKind::add_scalar:
        accumulate(op.a, u);
        break;
      case OpKind::relu: {
        // the active-set mask is locally constant, so it enters as data
        std::vector<double> mask(vals_[op.a].size());
        for (std::size_t i = 0; i < mask.size(); ++i)
          mask[i] = vals_[op.a][i] > 0 ? 1.0 : 0.0;
        accumulate(op.a, mul(u, constant(std::move(mask))));
        break;
      }
      case OpKind::tanh_: {
        const int one_minus_y2 = add_scalar(scale(mul(op.out, op.out), -1.0), 1.0);
        accumulate(op.a, mul(u, one_minus_y2));
        break;
      }
      case OpKind::sigmoid: {
        const int one_minus_s = add_scalar(scale(op.out, -1.0), 1.0);
        accumulate(op.a, mul(u, mul(op.out, one_minus_s)));
        break;
      }
      case OpKind::softplus:
        accumulate(op.a, mul(u, sigmoid(op.a)));
        break;
      case OpKind::sqrt_:
        // d sqrt(x)/dx = 1 / (2 sqrt(x)), reusing the forward value
        accumulate(op.a, scale(mul(u, inv(op.out)), 0.5));
        break;
      case OpKind::inv: {
        // d (1/x)/dx = -1/x^2 = -(out)^2
        accumulate(op.a, scale(mul(u, mul(op.out, op.out)), -1.0));
        break;
      }
      case OpKind::log_:
        accumulate(op.a, mul(u, inv(op.a)));
        break;
      case OpKind::broadcast:
        accumulate(op.a, sum(u));
        break;
      case OpKind::sum:
        accumulate(op.a, broadcast(u, static_cast<int>(vals_[op.a].size())));
        break;
      case OpKind::dot: {
        const int ub = broadcast(u, static_cast<int>(vals_[op.a].size()));
        accumulate(op.a, mul(ub, op.b));
        accumulate(op.b, mul(ub, op.a));
        break;
      }
    }
  }
  return want >= 0 ? cot[want] : -1;
}

double clip_grad_norm(ParamStore& ps, double max_norm) {
  double sq = 0;
  for (double g : ps.grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return 1.0;
  const double factor = max_norm / norm;
  for (double& g : ps.grads) g *= factor;
  return factor;
}

void adam_step(ParamStore& ps, double lr, double beta1, double beta2,
               double eps, double weight_decay) {
  for (double g : ps.grads)
    if (!std::isfinite(g))
      throw std::runtime_error("adam_step: non-finite gradient");
  if (weight_decay != 0.0) {
    const double keep = 1.0 - lr * weight_decay;
    for (double& v : ps.values) v *= keep;
  }
  ps.step_count += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(ps.step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(ps.step_count));
  for (std::size_t i = 0; i < ps.values.size(); ++i) {
    const double g = ps.grads[i];
    ps.adam_m[i] = beta1 * ps.adam_m[i] + (1.0 - beta1) * g;
    ps.adam_v[i] = beta2 * ps.adam_v[i] + (1.0 - beta2) * g * g;
    const double mhat = ps.adam_m[i] / bc1;
    const double vhat = ps.adam_v[i] / bc2;
    ps.values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void save_params(const std::string& path, const std::string& description,
                 const ParamStore& ps) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("save_params: cannot open " + path);
  std::fprintf(f, "lfgp-params 1\n%s\n%d\n", description.c_str(), ps.size());
  for (double v : ps.values) {
    const float x = static_cast<float>(v);
    std::fwrite(&x, sizeof x, 1, f);
  }
  std::fclose(f);
}

void load_params(const std::string& path, const std::string& description,
                 ParamStore& ps) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("load_params: cannot open " + path);
  char magic[64] = {0}, desc[512] = {0}, countline[64] = {0};
  auto line = [&](char* buf, int n) {
    if (!std::fgets(buf, n, f)) {
      std::fclose(f);
      throw std::runtime_error("load_params: truncated header in " + path);
    }
    buf[std::strcspn(buf, "\n")] = 0;
  };
  line(magic, sizeof magic);
  line(desc, sizeof desc);
  line(countline, sizeof countline);
  if (std::string(magic) != "lfgp-params 1") {
    std::fclose(f);
    throw std::runtime_error("load_params: bad magic in " + path);
  }
  if (std::string(desc) != description) {
    std::fclose(f);
    throw std::runtime_error("load_params: description mismatch in " + path +
                             " (found '" + desc + "')");
  }
  const int count = std::atoi(countline);
  if (count != ps.size()) {
    std::fclose(f);
    throw std::runtime_error("load_params: parameter count mismatch in " + path);
  }
  for (int i = 0; i < count; ++i) {
    float x = 0;
    if (std::fread(&x, sizeof x, 1, f) != 1) {
      std::fclose(f);
      throw std::runtime_error("load_params: truncated payload in " + path);
    }
    ps.values[i] = static_cast<double>(x);
  }
  std::fclose(f);
  ps.adam_m.assign(ps.values.size(), 0.0);
  ps.adam_v.assign(ps.values.size(), 0.0);
  ps.grads.assign(ps.values.size(), 0.0);
  ps.step_count = 0;
}

}  // namespace lfgp::nd
