#pragma once
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lfgp/adversary.h"
#include "lfgp/buffers.h"
#include "lfgp/ndgrad.h"
#include "lfgp/rng.h"

// Multitask soft actor-critic: one Gaussian-tanh policy head and one pair of
// Q heads per task, each family on its own shared trunk, with per-task
// learned temperatures. All tasks train from the same off-policy batch; each
// task's reward comes from its discriminator logit.
namespace lfgp::intent {

using Batch = adv::Batch;  // non-owning views into a replay/demo buffer

// Training recipe defaults. Target entropy is a rule, not a field: it is
// always -(action dim), fixed when a TemperatureSet is constructed.
struct SacSettings {
  std::vector<std::pair<int, nd::Act>> trunk{{256, nd::Act::relu},
                                             {256, nd::Act::relu}};
  std::vector<std::pair<int, nd::Act>> head{{256, nd::Act::relu},
                                            {256, nd::Act::relu}};
  double gamma = 0.99;
  double q_lr = 3e-4;
  double pi_lr = 1e-5;
  double alpha_lr = 3e-4;
  double init_alpha = 1e-2;
  double weight_decay = 1e-2;   // applied to policy and Q updates, not alpha
  double polyak = 1e-4;         // target <- (1 - tau) target + tau online
  double max_grad_norm = 10.0;  // clip on policy and Q gradients
};

// Floor added to softplus(pre-variance) so the variance never underflows.
inline constexpr double kVarianceFloor = 1e-7;

struct GaussianStats {
  std::vector<double> mean;      // pre-squash mean
  std::vector<double> variance;  // softplus(pre-variance) + floor
};

struct ActionSample {
  std::vector<double> action;  // tanh-squashed, each component in [-1, 1]
  double log_prob = 0.0;       // meaningful only when has_log_prob
  bool has_log_prob = false;
};

// ---------------------------------------------------------------------------
// Policy: shared trunk + per-task heads emitting Gaussian mean/pre-variance.
// ---------------------------------------------------------------------------

// Parameter layout: trunk affine layers in order, then for each task (in
// task_names order) the head's hidden layers followed by two output affines
// (mean, then pre-variance), each mapping the head width to act_dim.
class IntentionPolicy {
 public:
  IntentionPolicy(int obs_dim, int act_dim, std::vector<std::string> task_names,
                  const std::vector<std::pair<int, nd::Act>>& trunk,
                  const std::vector<std::pair<int, nd::Act>>& head, Rng& rng);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int num_tasks() const { return static_cast<int>(task_names_.size()); }
  const std::vector<std::string>& task_names() const { return task_names_; }

  nd::ParamStore& params() { return params_; }
  const nd::ParamStore& params() const { return params_; }

  // Tape-free forward returning the task head's Gaussian parameters.
  GaussianStats head_stats(int task, const std::vector<double>& s) const;

  // Training-graph emission. Offsets are relative to this policy's layout,
  // which must sit at the start of the tape's bound store. emit_trunk runs
  // the shared layers once; emit_head returns (mean, pre-variance) nodes.
  int emit_trunk(nd::Tape& tape, int s_node) const;
  std::pair<int, int> emit_head(nd::Tape& tape, int task, int trunk_node) const;

  // Checkpoint header string: dims, ordered task names, layer shapes.
  std::string description() const;
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  struct Block {
    int w_off, b_off, in, out;
    nd::Act act;
  };
  struct Head {
    std::vector<Block> hidden;
    Block mean, pre_var;
  };

  int obs_dim_, act_dim_;
  std::vector<std::string> task_names_;
  std::vector<Block> trunk_;
  std::vector<Head> heads_;
  nd::ParamStore params_;
};

// Draws an action for one task. Stochastic: tanh of a reparameterized
// Gaussian sample (consumes act_dim normal draws from rng) with the
// change-of-variables log-density. Deterministic: tanh(mean), no log-prob.
ActionSample sample_action(const IntentionPolicy& policy, int task,
                           const std::vector<double>& s, bool stochastic,
                           Rng& rng);

// ---------------------------------------------------------------------------
// Q bank: two independent critics (clipped double Q), each a shared trunk +
// per-task scalar heads, plus a polyak-trailed target copy of both.
// ---------------------------------------------------------------------------

// Parameter layout, repeated for net 0 then net 1: the first layer is split
// into an observation block (with bias) and an action block (no bias) whose
// outputs are added, so graphs can feed the action as a differentiable node;
// then the remaining trunk layers, then per-task head hidden layers and a
// scalar output affine. Targets start equal to the online parameters.
class QBank {
 public:
  QBank(int obs_dim, int act_dim, std::vector<std::string> task_names,
        const std::vector<std::pair<int, nd::Act>>& trunk,
        const std::vector<std::pair<int, nd::Act>>& head, Rng& rng);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int num_tasks() const { return static_cast<int>(task_names_.size()); }
  const std::vector<std::string>& task_names() const { return task_names_; }

  nd::ParamStore& params() { return params_; }
  const nd::ParamStore& params() const { return params_; }
  const std::vector<double>& target_values() const { return targets_; }
  // Replaces the target parameters (snapshot restore, fault injection).
  void set_target_values(std::vector<double> v);

  double polyak = 1e-4;  // default trail coefficient for harness loops

  // Tape-free forward for one critic; use_target reads the trailed copy.
  double q_value(int net, int task, const std::vector<double>& s,
                 const std::vector<double>& a, bool use_target) const;

  // Emits critic `net`'s value for `task` with the action as a graph node.
  // `base` shifts every parameter offset: 0 when the tape is bound to this
  // bank's own store, or the policy size when bound to a combined store.
  int emit_q(nd::Tape& tape, int net, int task, int s_node, int a_node,
             int base) const;

  std::string description() const;
  void save(const std::string& path) const;  // online and target values
  void load(const std::string& path);

 private:
  struct Block {
    int w_off, b_off, in, out;
    nd::Act act;
  };
  struct Net {
    Block first_obs, first_act;  // split first layer, outputs added
    std::vector<Block> trunk;    // remaining shared layers
    struct Head {
      std::vector<Block> hidden;
      Block out;
    };
    std::vector<Head> heads;
  };

  double forward_from(const std::vector<double>& values, int net, int task,
                      const std::vector<double>& s,
                      const std::vector<double>& a) const;

  int obs_dim_, act_dim_;
  std::vector<std::string> task_names_;
  Net nets_[2];
  nd::ParamStore params_;
  std::vector<double> targets_;
};

// target <- (1 - tau) * target + tau * online, elementwise.
void polyak_update(QBank& qbank, double tau);

// ---------------------------------------------------------------------------
// Temperatures: one learned log-alpha per task.
// ---------------------------------------------------------------------------

class TemperatureSet {
 public:
  TemperatureSet(std::vector<std::string> task_names, int act_dim,
                 double init_alpha);

  int num_tasks() const { return static_cast<int>(task_names_.size()); }
  const std::vector<std::string>& task_names() const { return task_names_; }
  double alpha(int task) const;
  double target_entropy() const { return target_entropy_; }  // -(action dim)

  nd::ParamStore& params() { return params_; }
  const nd::ParamStore& params() const { return params_; }

  std::string description() const;
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  std::vector<std::string> task_names_;
  double target_entropy_;
  nd::ParamStore params_;  // one log-alpha per task
};

// One Adam step on each log-alpha toward matching the target entropy:
// gradient -alpha * (mean log-prob + target entropy). Entropy above target
// lowers alpha; below target raises it. Positivity holds by construction.
void alpha_update(TemperatureSet& temps,
                  const std::vector<double>& mean_log_prob, double lr);

// ---------------------------------------------------------------------------
// Joint updates over all tasks on one shared batch.
// ---------------------------------------------------------------------------

// Bootstrap targets y[task][i] = r + gamma * (min of the two target critics
// at (s', a') - alpha * log pi(a'|s')), with a' drawn stochastically from the
// task's policy head and r the task's discriminator logit reward.
// Rng consumption order: samples in batch order, tasks in index order within
// a sample, act_dim normal draws per (sample, task) — so a test can replay
// the draws exactly. Throws std::runtime_error on a non-finite target,
// naming the task and sample.
std::vector<std::vector<double>> q_targets(const QBank& qbank,
                                           const IntentionPolicy& policy,
                                           const TemperatureSet& temps,
                                           const adv::DiscriminatorBank& bank,
                                           const Batch& batch, double gamma,
                                           Rng& rng);

// One clipped-double-Q regression step: both critics regress onto q_targets
// (mean over the batch, summed over tasks and over the two critics), with
// gradient clipping and decoupled weight decay. Returns the loss.
double q_update(QBank& qbank, const IntentionPolicy& policy,
                const TemperatureSet& temps,
                const adv::DiscriminatorBank& bank, const Batch& batch,
                const SacSettings& settings, Rng& rng);

// Emits a task's (scalar) value node for state s and action node a. The tape
// may be bound to a store holding policy parameters first; emitters that
// read other parameters must treat them as constants or know their base
// offset in that store.
using QGraphFn = std::function<int(nd::Tape& tape, int task,
                                   const std::vector<double>& s, int a_node)>;

struct PiResult {
  double loss = 0.0;
  std::vector<double> mean_log_prob;  // per task, for the temperature update
};

// One ascent step on sum_T E[Q_T(s, a~pi_T) - alpha_T log pi_T(a|s)] via the
// reparameterization trick (returned loss is the negated objective). Rng
// consumption: act_dim normal draws per (sample, task), samples outer, tasks
// inner, all drawn before the parallel section. The QBank overload freezes
// the online critics (no critic parameters move); the QGraphFn overload lets
// tests substitute synthetic value landscapes.
PiResult pi_update(IntentionPolicy& policy, const QGraphFn& qgraph,
                   const TemperatureSet& temps, const Batch& batch,
                   const SacSettings& settings, Rng& rng);
PiResult pi_update(IntentionPolicy& policy, const QBank& qbank,
                   const TemperatureSet& temps, const Batch& batch,
                   const SacSettings& settings, Rng& rng);

}  // namespace lfgp::intent
