#include "lfgp/intentions.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "lfgp/kernels.h"

namespace lfgp::intent {
namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kLn2Pi = 1.8378770664093453;

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ",";
    out += n;
  }
  return out;
}

std::string layer_string(const std::vector<std::pair<int, nd::Act>>& layers) {
  std::string out;
  for (const auto& [width, act] : layers) {
    if (!out.empty()) out += ",";
    out += std::to_string(width);
    out += act == nd::Act::relu ? "relu"
         : act == nd::Act::tanh ? "tanh"
                                : "linear";
  }
  return out.empty() ? "none" : out;
}

// Reserves one affine block (row-major W, then bias when present) at the
// running offset. The stored activation is what the chain walker applies
// after the block.
template <class B>
B reserve_block(int& off, int in, int out, bool bias, nd::Act act) {
  B b{off, bias ? off + out * in : -1, in, out, act};
  off += out * in + (bias ? out : 0);
  return b;
}

template <class B>
void init_block(nd::ParamStore& ps, const B& b, Rng& rng, int fan_in = -1) {
  nd::init_affine(ps, b.w_off, b.b_off, b.in, b.out, b.act, rng, fan_in);
}

// Tape-free affine matching Tape::affine's accumulation order exactly.
template <class B>
std::vector<double> forward_block(const std::vector<double>& vals, const B& b,
                                  int base, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(b.out));
  const double* W = vals.data() + base + b.w_off;
  for (int i = 0; i < b.out; ++i) {
    double acc = b.b_off >= 0 ? vals[static_cast<std::size_t>(base + b.b_off + i)] : 0.0;
    const double* row = W + static_cast<std::size_t>(i) * b.in;
    for (int j = 0; j < b.in; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

void apply_act_val(nd::Act act, std::vector<double>& x) {
  if (act == nd::Act::relu)
    for (double& v : x) v = v > 0 ? v : 0.0;
  else if (act == nd::Act::tanh)
    for (double& v : x) v = std::tanh(v);
}

int apply_act_node(nd::Tape& tape, nd::Act act, int node) {
  if (act == nd::Act::relu) return tape.relu(node);
  if (act == nd::Act::tanh) return tape.tanh_(node);
  return node;
}

template <class B>
int emit_block(nd::Tape& tape, const B& b, int base, int x) {
  return tape.affine(base + b.w_off, b.b_off >= 0 ? base + b.b_off : -1, b.in,
                     b.out, x);
}

}  // namespace

// ---------------------------------------------------------------------------
// IntentionPolicy
// ---------------------------------------------------------------------------

IntentionPolicy::IntentionPolicy(
    int obs_dim, int act_dim, std::vector<std::string> task_names,
    const std::vector<std::pair<int, nd::Act>>& trunk,
    const std::vector<std::pair<int, nd::Act>>& head, Rng& rng)
    : obs_dim_(obs_dim), act_dim_(act_dim), task_names_(std::move(task_names)) {
  if (obs_dim_ <= 0 || act_dim_ <= 0)
    throw std::invalid_argument("IntentionPolicy: dimensions must be positive");
  if (task_names_.empty())
    throw std::invalid_argument("IntentionPolicy: need at least one task");

  int off = 0;
  int width = obs_dim_;
  for (const auto& [w, act] : trunk) {
    trunk_.push_back(reserve_block<Block>(off, width, w, true, act));
    width = w;
  }
  for (std::size_t t = 0; t < task_names_.size(); ++t) {
    Head h;
    int in = width;
    for (const auto& [w, act] : head) {
      h.hidden.push_back(reserve_block<Block>(off, in, w, true, act));
      in = w;
    }
    h.mean = reserve_block<Block>(off, in, act_dim_, true, nd::Act::identity);
    h.pre_var = reserve_block<Block>(off, in, act_dim_, true, nd::Act::identity);
    heads_.push_back(std::move(h));
  }
  params_.resize(off);
  for (const auto& b : trunk_) init_block(params_, b, rng);
  for (const auto& h : heads_) {
    for (const auto& b : h.hidden) init_block(params_, b, rng);
    init_block(params_, h.mean, rng);
    init_block(params_, h.pre_var, rng);
  }
}

GaussianStats IntentionPolicy::head_stats(int task,
                                          const std::vector<double>& s) const {
  if (task < 0 || task >= num_tasks())
    throw std::invalid_argument("head_stats: task out of range");
  if (static_cast<int>(s.size()) != obs_dim_)
    throw std::invalid_argument("head_stats: observation length mismatch");
  std::vector<double> h = s;
  for (const auto& b : trunk_) {
    h = forward_block(params_.values, b, 0, h);
    apply_act_val(b.act, h);
  }
  const Head& head = heads_[static_cast<std::size_t>(task)];
  for (const auto& b : head.hidden) {
    h = forward_block(params_.values, b, 0, h);
    apply_act_val(b.act, h);
  }
  GaussianStats st;
  st.mean = forward_block(params_.values, head.mean, 0, h);
  st.variance = forward_block(params_.values, head.pre_var, 0, h);
  for (double& v : st.variance) v = nd::softplus_val(v) + kVarianceFloor;
  return st;
}

int IntentionPolicy::emit_trunk(nd::Tape& tape, int s_node) const {
  int h = s_node;
  for (const auto& b : trunk_)
    h = apply_act_node(tape, b.act, emit_block(tape, b, 0, h));
  return h;
}

std::pair<int, int> IntentionPolicy::emit_head(nd::Tape& tape, int task,
                                               int trunk_node) const {
  if (task < 0 || task >= num_tasks())
    throw std::invalid_argument("emit_head: task out of range");
  const Head& head = heads_[static_cast<std::size_t>(task)];
  int h = trunk_node;
  for (const auto& b : head.hidden)
    h = apply_act_node(tape, b.act, emit_block(tape, b, 0, h));
  return {emit_block(tape, head.mean, 0, h), emit_block(tape, head.pre_var, 0, h)};
}

std::string IntentionPolicy::description() const {
  std::string trunk_desc, head_desc;
  {
    std::vector<std::pair<int, nd::Act>> t, h;
    for (const auto& b : trunk_) t.push_back({b.out, b.act});
    for (const auto& b : heads_[0].hidden) h.push_back({b.out, b.act});
    trunk_desc = layer_string(t);
    head_desc = layer_string(h);
  }
  return "intention-policy obs=" + std::to_string(obs_dim_) +
         " act=" + std::to_string(act_dim_) + " tasks=" + join_names(task_names_) +
         " trunk=" + trunk_desc + " head=" + head_desc;
}

void IntentionPolicy::save(const std::string& path) const {
  nd::save_params(path, description(), params_);
}

void IntentionPolicy::load(const std::string& path) {
  nd::load_params(path, description(), params_);
}

ActionSample sample_action(const IntentionPolicy& policy, int task,
                           const std::vector<double>& s, bool stochastic,
                           Rng& rng) {
  const GaussianStats st = policy.head_stats(task, s);
  const int d = policy.act_dim();
  ActionSample out;
  out.action.resize(static_cast<std::size_t>(d));
  if (!stochastic) {
    for (int i = 0; i < d; ++i) out.action[static_cast<std::size_t>(i)] = std::tanh(st.mean[static_cast<std::size_t>(i)]);
    return out;
  }
  // The accumulation orders below mirror the training-graph emission in
  // pi_update term for term, so replaying the same normal draws reproduces
  // the tape's log-prob bit for bit.
  double gauss_const = 0.0, sum_log_var = 0.0, sum_raw_sp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double eps = rng.normal();
    const double var = st.variance[static_cast<std::size_t>(i)];
    const double raw = st.mean[static_cast<std::size_t>(i)] + std::sqrt(var) * eps;
    out.action[static_cast<std::size_t>(i)] = std::tanh(raw);
    gauss_const += -0.5 * eps * eps;
    sum_log_var += std::log(var);
    sum_raw_sp += raw + nd::softplus_val(-2.0 * raw);
  }
  gauss_const += -0.5 * d * kLn2Pi;
  // log N(raw; mean, var) - sum_i log(1 - tanh^2(raw_i)), with the squash
  // correction in its overflow-safe form 2(ln 2 - raw - softplus(-2 raw)).
  out.log_prob = (sum_log_var * -0.5 + gauss_const) +
                 (sum_raw_sp * 2.0 + -2.0 * d * kLn2);
  out.has_log_prob = true;
  return out;
}

// ---------------------------------------------------------------------------
// QBank
// ---------------------------------------------------------------------------

QBank::QBank(int obs_dim, int act_dim, std::vector<std::string> task_names,
             const std::vector<std::pair<int, nd::Act>>& trunk,
             const std::vector<std::pair<int, nd::Act>>& head, Rng& rng)
    : obs_dim_(obs_dim), act_dim_(act_dim), task_names_(std::move(task_names)) {
  if (obs_dim_ <= 0 || act_dim_ <= 0)
    throw std::invalid_argument("QBank: dimensions must be positive");
  if (task_names_.empty())
    throw std::invalid_argument("QBank: need at least one task");
  if (trunk.empty())
    throw std::invalid_argument("QBank: need at least one trunk layer");

  int off = 0;
  for (Net& net : nets_) {
    const auto& [w0, act0] = trunk.front();
    net.first_obs = reserve_block<Block>(off, obs_dim_, w0, true, act0);
    net.first_act = reserve_block<Block>(off, act_dim_, w0, false, act0);
    int width = w0;
    for (std::size_t l = 1; l < trunk.size(); ++l) {
      net.trunk.push_back(
          reserve_block<Block>(off, width, trunk[l].first, true, trunk[l].second));
      width = trunk[l].first;
    }
    for (std::size_t t = 0; t < task_names_.size(); ++t) {
      Net::Head h;
      int in = width;
      for (const auto& [w, act] : head) {
        h.hidden.push_back(reserve_block<Block>(off, in, w, true, act));
        in = w;
      }
      h.out = reserve_block<Block>(off, in, 1, true, nd::Act::identity);
      net.heads.push_back(std::move(h));
    }
  }
  params_.resize(off);
  for (const Net& net : nets_) {
    // Both halves of the split first layer take the gain of the full
    // (obs + act)-wide layer they jointly form.
    init_block(params_, net.first_obs, rng, obs_dim_ + act_dim_);
    init_block(params_, net.first_act, rng, obs_dim_ + act_dim_);
    for (const auto& b : net.trunk) init_block(params_, b, rng);
    for (const auto& h : net.heads) {
      for (const auto& b : h.hidden) init_block(params_, b, rng);
      init_block(params_, h.out, rng);
    }
  }
  targets_ = params_.values;
}

void QBank::set_target_values(std::vector<double> v) {
  if (v.size() != targets_.size())
    throw std::invalid_argument("set_target_values: size mismatch");
  targets_ = std::move(v);
}

double QBank::forward_from(const std::vector<double>& values, int net_idx,
                           int task, const std::vector<double>& s,
                           const std::vector<double>& a) const {
  const Net& net = nets_[net_idx];
  std::vector<double> h = forward_block(values, net.first_obs, 0, s);
  const std::vector<double> ha = forward_block(values, net.first_act, 0, a);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += ha[i];
  apply_act_val(net.first_obs.act, h);
  for (const auto& b : net.trunk) {
    h = forward_block(values, b, 0, h);
    apply_act_val(b.act, h);
  }
  const Net::Head& head = net.heads[static_cast<std::size_t>(task)];
  for (const auto& b : head.hidden) {
    h = forward_block(values, b, 0, h);
    apply_act_val(b.act, h);
  }
  return forward_block(values, head.out, 0, h)[0];
}

double QBank::q_value(int net, int task, const std::vector<double>& s,
                      const std::vector<double>& a, bool use_target) const {
  if (net < 0 || net > 1) throw std::invalid_argument("q_value: net must be 0 or 1");
  if (task < 0 || task >= num_tasks())
    throw std::invalid_argument("q_value: task out of range");
  if (static_cast<int>(s.size()) != obs_dim_ ||
      static_cast<int>(a.size()) != act_dim_)
    throw std::invalid_argument("q_value: input length mismatch");
  return forward_from(use_target ? targets_ : params_.values, net, task, s, a);
}

int QBank::emit_q(nd::Tape& tape, int net_idx, int task, int s_node, int a_node,
                  int base) const {
  if (net_idx < 0 || net_idx > 1)
    throw std::invalid_argument("emit_q: net must be 0 or 1");
  if (task < 0 || task >= num_tasks())
    throw std::invalid_argument("emit_q: task out of range");
  const Net& net = nets_[net_idx];
  int h = tape.add(emit_block(tape, net.first_obs, base, s_node),
                   emit_block(tape, net.first_act, base, a_node));
  h = apply_act_node(tape, net.first_obs.act, h);
  for (const auto& b : net.trunk)
    h = apply_act_node(tape, b.act, emit_block(tape, b, base, h));
  const Net::Head& head = net.heads[static_cast<std::size_t>(task)];
  for (const auto& b : head.hidden)
    h = apply_act_node(tape, b.act, emit_block(tape, b, base, h));
  return emit_block(tape, head.out, base, h);
}

std::string QBank::description() const {
  std::vector<std::pair<int, nd::Act>> t, h;
  t.push_back({nets_[0].first_obs.out, nets_[0].first_obs.act});
  for (const auto& b : nets_[0].trunk) t.push_back({b.out, b.act});
  for (const auto& b : nets_[0].heads[0].hidden) h.push_back({b.out, b.act});
  return "q-bank obs=" + std::to_string(obs_dim_) +
         " act=" + std::to_string(act_dim_) + " tasks=" + join_names(task_names_) +
         " trunk=" + layer_string(t) + " head=" + layer_string(h);
}

void QBank::save(const std::string& path) const {
  nd::ParamStore both(params_.size() * 2);
  std::copy(params_.values.begin(), params_.values.end(), both.values.begin());
  std::copy(targets_.begin(), targets_.end(),
            both.values.begin() + params_.size());
  nd::save_params(path, description(), both);
}

void QBank::load(const std::string& path) {
  nd::ParamStore both(params_.size() * 2);
  nd::load_params(path, description(), both);
  std::copy(both.values.begin(), both.values.begin() + params_.size(),
            params_.values.begin());
  std::copy(both.values.begin() + params_.size(), both.values.end(),
            targets_.begin());
}

void polyak_update(QBank& qbank, double tau) {
  const auto& online = qbank.params().values;
  std::vector<double> trail = qbank.target_values();
  for (std::size_t i = 0; i < trail.size(); ++i)
    trail[i] = (1.0 - tau) * trail[i] + tau * online[i];
  qbank.set_target_values(std::move(trail));
}

// ---------------------------------------------------------------------------
// TemperatureSet
// ---------------------------------------------------------------------------

TemperatureSet::TemperatureSet(std::vector<std::string> task_names, int act_dim,
                               double init_alpha)
    : task_names_(std::move(task_names)),
      target_entropy_(-static_cast<double>(act_dim)) {
  if (task_names_.empty())
    throw std::invalid_argument("TemperatureSet: need at least one task");
  if (init_alpha <= 0)
    throw std::invalid_argument("TemperatureSet: initial alpha must be positive");
  params_.resize(static_cast<int>(task_names_.size()));
  for (double& v : params_.values) v = std::log(init_alpha);
}

double TemperatureSet::alpha(int task) const {
  if (task < 0 || task >= num_tasks())
    throw std::invalid_argument("alpha: task out of range");
  return std::exp(params_.values[static_cast<std::size_t>(task)]);
}

std::string TemperatureSet::description() const {
  return "temperatures tasks=" + join_names(task_names_) +
         " target-entropy=" + std::to_string(target_entropy_);
}

void TemperatureSet::save(const std::string& path) const {
  nd::save_params(path, description(), params_);
}

void TemperatureSet::load(const std::string& path) {
  nd::load_params(path, description(), params_);
}

void alpha_update(TemperatureSet& temps,
                  const std::vector<double>& mean_log_prob, double lr) {
  if (static_cast<int>(mean_log_prob.size()) != temps.num_tasks())
    throw std::invalid_argument("alpha_update: one mean log-prob per task");
  auto& ps = temps.params();
  ps.zero_grad();
  for (int t = 0; t < temps.num_tasks(); ++t)
    ps.grads[static_cast<std::size_t>(t)] =
        -temps.alpha(t) *
        (mean_log_prob[static_cast<std::size_t>(t)] + temps.target_entropy());
  nd::adam_step(ps, lr);
}

// ---------------------------------------------------------------------------
// Joint updates
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> q_targets(const QBank& qbank,
                                           const IntentionPolicy& policy,
                                           const TemperatureSet& temps,
                                           const adv::DiscriminatorBank& bank,
                                           const Batch& batch, double gamma,
                                           Rng& rng) {
  const int n = static_cast<int>(batch.size());
  const int tasks = qbank.num_tasks();
  if (policy.num_tasks() != tasks || temps.num_tasks() != tasks ||
      bank.num_tasks() != tasks)
    throw std::invalid_argument("q_targets: task count mismatch");
  std::vector<std::vector<double>> y(
      static_cast<std::size_t>(tasks),
      std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    const buffers::Transition& tr = *batch[static_cast<std::size_t>(i)];
    for (int t = 0; t < tasks; ++t) {
      const double r = adv::airl_reward(bank, t, tr.s, tr.a);
      const ActionSample next =
          sample_action(policy, t, tr.s_next, /*stochastic=*/true, rng);
      const double q1 = qbank.q_value(0, t, tr.s_next, next.action, true);
      const double q2 = qbank.q_value(1, t, tr.s_next, next.action, true);
      const double target =
          r + gamma * (std::min(q1, q2) - temps.alpha(t) * next.log_prob);
      if (!std::isfinite(target))
        throw std::runtime_error(
            "q_targets: non-finite target for task " + std::to_string(t) +
            " sample " + std::to_string(i) +
            "; parameters have likely diverged");
      y[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = target;
    }
  }
  return y;
}

double q_update(QBank& qbank, const IntentionPolicy& policy,
                const TemperatureSet& temps,
                const adv::DiscriminatorBank& bank, const Batch& batch,
                const SacSettings& settings, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("q_update: empty batch");
  const int n = static_cast<int>(batch.size());
  const int tasks = qbank.num_tasks();
  const auto y = q_targets(qbank, policy, temps, bank, batch, settings.gamma, rng);

  auto& ps = qbank.params();
  ps.zero_grad();
  const double loss = nd::batch_grad(ps, n, [&](nd::Tape& tape, int i) {
    const buffers::Transition& tr = *batch[static_cast<std::size_t>(i)];
    const int s = tape.constant(tr.s);
    const int a = tape.constant(tr.a);
    int loss_node = -1;
    for (int net = 0; net < 2; ++net) {
      for (int t = 0; t < tasks; ++t) {
        const int q = qbank.emit_q(tape, net, t, s, a, 0);
        const int diff = tape.add_scalar(
            q, -y[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]);
        const int sq = tape.mul(diff, diff);
        loss_node = loss_node < 0 ? sq : tape.add(loss_node, sq);
      }
    }
    return loss_node;
  });
  nd::clip_grad_norm(ps, settings.max_grad_norm);
  nd::adam_step(ps, settings.q_lr, 0.9, 0.999, 1e-8, settings.weight_decay);
  return loss;
}

namespace {

PiResult pi_update_core(IntentionPolicy& policy, const QGraphFn& qgraph,
                        const TemperatureSet& temps, const Batch& batch,
                        const SacSettings& settings, Rng& rng,
                        const std::vector<double>& extra_values) {
  if (batch.empty()) throw std::invalid_argument("pi_update: empty batch");
  const int n = static_cast<int>(batch.size());
  const int tasks = policy.num_tasks();
  const int d = policy.act_dim();
  if (temps.num_tasks() != tasks)
    throw std::invalid_argument("pi_update: task count mismatch");

  // Normal draws are consumed serially up front so the parallel section
  // stays deterministic: samples outer, tasks inner, act dims innermost.
  std::vector<double> eps(static_cast<std::size_t>(n) * tasks * d);
  for (double& e : eps) e = rng.normal();

  const int policy_size = policy.params().size();
  nd::ParamStore combined(policy_size + static_cast<int>(extra_values.size()));
  std::copy(policy.params().values.begin(), policy.params().values.end(),
            combined.values.begin());
  std::copy(extra_values.begin(), extra_values.end(),
            combined.values.begin() + policy_size);

  std::vector<double> alphas(static_cast<std::size_t>(tasks));
  for (int t = 0; t < tasks; ++t) alphas[static_cast<std::size_t>(t)] = temps.alpha(t);

  std::vector<double> lp_vals(static_cast<std::size_t>(tasks) * n);
  const double loss =
      nd::batch_grad(combined, n, [&](nd::Tape& tape, int i) {
        const buffers::Transition& tr = *batch[static_cast<std::size_t>(i)];
        const int s = tape.constant(tr.s);
        const int trunk = policy.emit_trunk(tape, s);
        int loss_node = tape.constant({0.0});
        for (int t = 0; t < tasks; ++t) {
          const auto [mu, pre_var] = policy.emit_head(tape, t, trunk);
          const int var = tape.add_scalar(tape.softplus(pre_var), kVarianceFloor);
          const std::size_t e_off =
              (static_cast<std::size_t>(i) * tasks + t) * d;
          std::vector<double> e(eps.begin() + e_off, eps.begin() + e_off + d);
          double gauss_const = 0.0;
          for (double v : e) gauss_const += -0.5 * v * v;
          gauss_const += -0.5 * d * kLn2Pi;
          const int raw =
              tape.add(mu, tape.mul(tape.sqrt_(var), tape.constant(std::move(e))));
          const int act = tape.tanh_(raw);
          // log-prob: Gaussian density in raw space minus the tanh
          // change-of-variables term 2(ln 2 - raw - softplus(-2 raw)) per dim.
          const int sp = tape.softplus(tape.scale(raw, -2.0));
          const int lp = tape.add(
              tape.add_scalar(tape.scale(tape.sum(tape.log_(var)), -0.5),
                              gauss_const),
              tape.add_scalar(tape.scale(tape.sum(tape.add(raw, sp)), 2.0),
                              -2.0 * d * kLn2));
          lp_vals[static_cast<std::size_t>(t) * n + i] = tape.scalar(lp);
          const int q = qgraph(tape, t, tr.s, act);
          const int term =
              tape.sub(q, tape.scale(lp, alphas[static_cast<std::size_t>(t)]));
          loss_node = tape.sub(loss_node, term);
        }
        return loss_node;
      });

  auto& pp = policy.params();
  pp.zero_grad();
  std::copy(combined.grads.begin(), combined.grads.begin() + policy_size,
            pp.grads.begin());
  nd::clip_grad_norm(pp, settings.max_grad_norm);
  nd::adam_step(pp, settings.pi_lr, 0.9, 0.999, 1e-8, settings.weight_decay);

  PiResult out;
  out.loss = loss;
  out.mean_log_prob.resize(static_cast<std::size_t>(tasks));
  for (int t = 0; t < tasks; ++t) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      acc += lp_vals[static_cast<std::size_t>(t) * n + i];
    out.mean_log_prob[static_cast<std::size_t>(t)] = acc / n;
  }
  return out;
}

}  // namespace

PiResult pi_update(IntentionPolicy& policy, const QGraphFn& qgraph,
                   const TemperatureSet& temps, const Batch& batch,
                   const SacSettings& settings, Rng& rng) {
  return pi_update_core(policy, qgraph, temps, batch, settings, rng, {});
}

PiResult pi_update(IntentionPolicy& policy, const QBank& qbank,
                   const TemperatureSet& temps, const Batch& batch,
                   const SacSettings& settings, Rng& rng) {
  if (qbank.num_tasks() != policy.num_tasks())
    throw std::invalid_argument("pi_update: task count mismatch");
  const int base = policy.params().size();
  // The critics' parameters ride along in the combined store after the
  // policy slice; only the policy slice of the gradient is stepped, so the
  // critics stay frozen while the chain rule still flows through them.
  const QGraphFn frozen_min_q = [&qbank, base](nd::Tape& tape, int task,
                                               const std::vector<double>& s,
                                               int a_node) {
    const int s_node = tape.constant(s);
    const int q1 = qbank.emit_q(tape, 0, task, s_node, a_node, base);
    const int q2 = qbank.emit_q(tape, 1, task, s_node, a_node, base);
    // min(a, b) = a - relu(a - b)
    return tape.sub(q1, tape.relu(tape.sub(q1, q2)));
  };
  return pi_update_core(policy, frozen_min_q, temps, batch, settings, rng,
                        qbank.params().values);
}

}  // namespace lfgp::intent
