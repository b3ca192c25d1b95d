#include "lfgp/adversary.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lfgp/kernels.h"

namespace lfgp::adv {

RewardForm reward_form_from_name(const std::string& name) {
  if (name == "airl") return RewardForm::airl;
  if (name == "log-d" || name == "neg-log-one-minus-d")
    throw std::invalid_argument("reward form '" + name +
                                "' is recognized but not implemented; use "
                                "'airl'");
  throw std::invalid_argument("unknown reward form '" + name + "'");
}

namespace {

const char* act_name(nd::Act a) {
  switch (a) {
    case nd::Act::relu: return "relu";
    case nd::Act::tanh: return "tanh";
    default: return "identity";
  }
}

}  // namespace

DiscriminatorBank::DiscriminatorBank(
    int obs_dim, int act_dim, int num_tasks,
    const std::vector<std::pair<int, nd::Act>>& hidden, Rng& rng)
    : obs_dim_(obs_dim), act_dim_(act_dim) {
  if (obs_dim <= 0 || act_dim <= 0)
    throw std::invalid_argument("discriminator: dimensions must be positive");
  if (num_tasks <= 0)
    throw std::invalid_argument("discriminator: need at least one task");
  spec_.input_dim = obs_dim + act_dim;
  spec_.output_dim = num_tasks;
  spec_.hidden = hidden;
  params_.resize(spec_.param_count());
  nd::init_mlp_params(params_, spec_, 0, rng);
}

std::vector<double> DiscriminatorBank::logits(
    const std::vector<double>& s, const std::vector<double>& a) const {
  if (static_cast<int>(s.size()) != obs_dim_ ||
      static_cast<int>(a.size()) != act_dim_)
    throw std::invalid_argument("discriminator: input dimension mismatch");
  // Plain forward pass; this is the hot path behind every reward query.
  std::vector<double> cur(spec_.input_dim), next;
  std::copy(s.begin(), s.end(), cur.begin());
  std::copy(a.begin(), a.end(), cur.begin() + obs_dim_);
  int in = spec_.input_dim;
  int off = 0;
  auto layer = [&](int out_dim, nd::Act act) {
    next.assign(out_dim, 0.0);
    for (int i = 0; i < out_dim; ++i) {
      double acc = params_.values[off + out_dim * in + i];  // bias
      const double* row = params_.values.data() + off +
                          static_cast<std::size_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += row[j] * cur[j];
      next[i] = act == nd::Act::tanh ? std::tanh(acc)
                : act == nd::Act::relu ? (acc > 0 ? acc : 0.0)
                                       : acc;
    }
    off += out_dim * in + out_dim;
    in = out_dim;
    cur.swap(next);
  };
  for (const auto& [width, act] : spec_.hidden) layer(width, act);
  layer(spec_.output_dim, nd::Act::identity);
  return cur;
}

std::string DiscriminatorBank::description() const {
  std::ostringstream out;
  out << "discriminator obs=" << obs_dim_ << " act=" << act_dim_
      << " tasks=" << spec_.output_dim << " hidden=";
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    if (i) out << ",";
    out << spec_.hidden[i].first << act_name(spec_.hidden[i].second);
  }
  return out.str();
}

void DiscriminatorBank::save(const std::string& path) const {
  nd::save_params(path, description(), params_);
}

void DiscriminatorBank::load(const std::string& path) {
  nd::load_params(path, description(), params_);
}

double airl_reward(const DiscriminatorBank& bank, int task,
                   const std::vector<double>& s, const std::vector<double>& a) {
  if (task < 0 || task >= bank.num_tasks())
    throw std::invalid_argument("airl_reward: task index out of range");
  const double z = bank.logits(s, a)[task];
  return std::clamp(z, -kRewardClamp, kRewardClamp);
}

namespace {

// Concatenated (s, a) input for one stored transition.
std::vector<double> pair_input(const buffers::Transition& t) {
  std::vector<double> x;
  x.reserve(t.s.size() + t.a.size());
  x.insert(x.end(), t.s.begin(), t.s.end());
  x.insert(x.end(), t.a.begin(), t.a.end());
  return x;
}

void check_finite(const nd::Tape& tape, int node, const char* which, int task,
                  int sample) {
  for (double v : tape.value(node))
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "discriminator_loss: non-finite logit (" << v << ") on " << which
          << " sample " << sample;
      if (task >= 0) msg << " for task " << task;
      msg << "; parameters have likely diverged";
      throw std::runtime_error(msg.str());
    }
}

}  // namespace

double discriminator_loss(DiscriminatorBank& bank, const Batch& policy_batch,
                          const std::vector<Batch>& expert_batches,
                          double gp_lambda,
                          const std::vector<double>& interp_coeffs,
                          bool accumulate_grads) {
  const int n = static_cast<int>(policy_batch.size());
  const int tasks = bank.num_tasks();
  if (n == 0)
    throw std::invalid_argument("discriminator_loss: empty policy batch");
  if (static_cast<int>(expert_batches.size()) != tasks)
    throw std::invalid_argument(
        "discriminator_loss: need one expert batch per task");
  for (const auto& batch : expert_batches)
    if (static_cast<int>(batch.size()) != n)
      throw std::invalid_argument(
          "discriminator_loss: expert batches must match the policy batch "
          "size");
  if (static_cast<int>(interp_coeffs.size()) != tasks * n)
    throw std::invalid_argument(
        "discriminator_loss: need one interpolation coefficient per task and "
        "pair");

  const nd::MLPSpec& spec = bank.spec();

  // Basis vectors that pick one task's logit out of the shared output.
  std::vector<std::vector<double>> pick(tasks,
                                        std::vector<double>(tasks, 0.0));
  for (int t = 0; t < tasks; ++t) pick[t][t] = 1.0;

  // One sample contributes every task's three terms, so the batch mean of
  // this builder is exactly the documented joint loss.
  auto build = [&](nd::Tape& tape, int i) {
    const std::vector<double> xp = pair_input(*policy_batch[i]);
    const int zp = tape.mlp(spec, 0, tape.constant(xp));
    check_finite(tape, zp, "policy", -1, i);
    // sum_T -log(1 - D_T) = sum_T softplus(logit_T) over the shared batch
    int loss = tape.sum(tape.softplus(zp));
    for (int t = 0; t < tasks; ++t) {
      const std::vector<double> xe = pair_input(*expert_batches[t][i]);
      const int ze = tape.mlp(spec, 0, tape.constant(xe));
      check_finite(tape, ze, "expert", t, i);
      // -log D_T = softplus(-logit_T)
      const int ze_t = tape.dot(ze, tape.constant(pick[t]));
      loss = tape.add(loss, tape.softplus(tape.scale(ze_t, -1.0)));
      if (gp_lambda != 0.0) {
        const double c = interp_coeffs[static_cast<std::size_t>(t) * n + i];
        std::vector<double> xm(xp.size());
        for (std::size_t k = 0; k < xm.size(); ++k)
          xm[k] = c * xe[k] + (1.0 - c) * xp[k];
        const int x = tape.input(std::move(xm));
        const int zh = tape.mlp(spec, 0, x);
        check_finite(tape, zh, "interpolated", t, i);
        const int d = tape.sigmoid(tape.dot(zh, tape.constant(pick[t])));
        const int g = tape.grad_of_input(d, x);
        const int norm =
            tape.sqrt_(tape.add_scalar(tape.dot(g, g), kGradNormFloor));
        const int excess = tape.add_scalar(norm, -1.0);
        loss = tape.add(loss, tape.scale(tape.mul(excess, excess), gp_lambda));
      }
    }
    return loss;
  };

  if (accumulate_grads) return nd::batch_grad(bank.params(), n, build);

  // Value-only pass: same lane-ordered reduction as the gradient path so both
  // report bit-identical losses.
  constexpr int kLanes = 8;
  double lane_loss[kLanes] = {0};
  std::vector<double> unused_sink;
  for (int lane = 0; lane < kLanes; ++lane)
    for (int i = lane; i < n; i += kLanes) {
      nd::Tape tape(static_cast<const nd::ParamStore&>(bank.params()),
                    &unused_sink);
      lane_loss[lane] += tape.scalar(build(tape, i));
    }
  double total = 0.0;
  for (int lane = 0; lane < kLanes; ++lane) total += lane_loss[lane];
  return total / n;
}

double discriminator_loss(const DiscriminatorBank& bank,
                          const Batch& policy_batch,
                          const std::vector<Batch>& expert_batches,
                          double gp_lambda, Rng& rng) {
  std::vector<double> coeffs(expert_batches.size() * policy_batch.size());
  for (double& c : coeffs) c = rng.uniform01();
  return discriminator_loss(const_cast<DiscriminatorBank&>(bank), policy_batch,
                            expert_batches, gp_lambda, coeffs,
                            /*accumulate_grads=*/false);
}

double discriminator_update(DiscriminatorBank& bank, const Batch& policy_batch,
                            const std::vector<Batch>& expert_batches,
                            const DiscriminatorSettings& settings, Rng& rng) {
  std::vector<double> coeffs(expert_batches.size() * policy_batch.size());
  for (double& c : coeffs) c = rng.uniform01();
  bank.params().zero_grad();
  const double loss =
      discriminator_loss(bank, policy_batch, expert_batches,
                         settings.gp_lambda, coeffs, /*accumulate_grads=*/true);
  nd::adam_step(bank.params(), settings.lr, 0.9, 0.999, 1e-8,
                settings.weight_decay);
  return loss;
}

}  // namespace lfgp::adv
