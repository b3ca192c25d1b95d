#pragma once
#include <string>
#include <utility>
#include <vector>

#include "lfgp/buffers.h"
#include "lfgp/ndgrad.h"
#include "lfgp/rng.h"

namespace lfgp::adv {

// Reward shapes derivable from a discriminator. Only the difference-of-logs
// form is implemented; the enum exists so configs can name the choice and get
// a clear error for the others.
enum class RewardForm { airl };
RewardForm reward_form_from_name(const std::string& name);

// Rewards are clamped to this magnitude. A confident discriminator otherwise
// hands the value functions arbitrarily large bootstrap targets early in
// training, which is a known way for Q estimates to explode.
inline constexpr double kRewardClamp = 20.0;

// Keeps the norm's derivative finite when the input gradient vanishes; added
// under the square root inside the penalty.
inline constexpr double kGradNormFloor = 1e-12;

struct DiscriminatorSettings {
  std::vector<std::pair<int, nd::Act>> hidden = {{256, nd::Act::tanh},
                                                 {256, nd::Act::tanh}};
  double gp_lambda = 10.0;     // weight of the gradient penalty
  double lr = 3e-4;
  double weight_decay = 1e-2;
  RewardForm reward_form = RewardForm::airl;
};

// One network shared by every task: a trunk over the concatenated
// state-action vector with one output logit per task. Inputs are consumed in
// raw environment units (no normalization). Training has a single writer;
// logit/reward queries are read-only and safe against a non-training bank.
class DiscriminatorBank {
 public:
  DiscriminatorBank(int obs_dim, int act_dim, int num_tasks,
                    const std::vector<std::pair<int, nd::Act>>& hidden,
                    Rng& rng);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int num_tasks() const { return spec_.output_dim; }
  const nd::MLPSpec& spec() const { return spec_; }
  nd::ParamStore& params() { return params_; }
  const nd::ParamStore& params() const { return params_; }

  // All task logits for one state-action pair (tape-free forward).
  std::vector<double> logits(const std::vector<double>& s,
                             const std::vector<double>& a) const;

  // Identifies the architecture in checkpoints; load rejects a mismatch.
  std::string description() const;
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  int obs_dim_ = 0;
  int act_dim_ = 0;
  nd::MLPSpec spec_;
  nd::ParamStore params_;
};

// log D - log(1 - D) for D = sigmoid(logit): algebraically the logit itself,
// so it is returned directly, clamped to [-kRewardClamp, kRewardClamp].
double airl_reward(const DiscriminatorBank& bank, int task,
                   const std::vector<double>& s, const std::vector<double>& a);

using Batch = std::vector<const buffers::Transition*>;

// Joint discriminator loss over all tasks:
//
//   sum_T [ -E_B log(1 - D_T) - E_{E_T} log D_T
//           + gp_lambda * E_i (||grad_(s,a) D_T at x_i|| - 1)^2 ]
//
// where B is the shared policy batch, E_T the task's demonstration batch, and
// x_i interpolates the i-th demonstration and policy samples:
// x_i = c*e_i + (1-c)*p_i with one uniform coefficient c per (task, index)
// pair, supplied in interp_coeffs[task * batch + index]. Every task carries
// its own averaged penalty, matching the per-task update in the training
// loop. Expert batches must all have the policy batch's size.
//
// With accumulate_grads, mean parameter gradients are added to
// bank.params().grads (deterministically for any thread count). Throws
// std::runtime_error naming the batch, task, and sample when a logit is
// non-finite; std::invalid_argument on shape mismatches.
double discriminator_loss(DiscriminatorBank& bank, const Batch& policy_batch,
                          const std::vector<Batch>& expert_batches,
                          double gp_lambda,
                          const std::vector<double>& interp_coeffs,
                          bool accumulate_grads);

// Same loss with the interpolation coefficients drawn from rng (value only).
double discriminator_loss(const DiscriminatorBank& bank,
                          const Batch& policy_batch,
                          const std::vector<Batch>& expert_batches,
                          double gp_lambda, Rng& rng);

// One training step: draw coefficients, accumulate gradients, take a
// decoupled-weight-decay Adam step. Returns the loss before the step.
double discriminator_update(DiscriminatorBank& bank, const Batch& policy_batch,
                            const std::vector<Batch>& expert_batches,
                            const DiscriminatorSettings& settings, Rng& rng);

}  // namespace lfgp::adv
