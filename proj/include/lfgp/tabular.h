#pragma once
#include <array>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "lfgp/rng.h"

namespace lfgp::tabular {

// One buffered step. `next_a` is the action taken at the following step of
// the same episode (-1 at an episode end); the replay backup bootstraps from
// it, i.e. from the episode's own continuation.
struct Transition {
  int s;
  int a;
  int s2;
  bool terminal;
  int next_a;
};
using Buffer = std::vector<Transition>;

using RewardFn = std::function<double(int s, int a)>;

// AIRL reward of a perfect discriminator: +1 on expert pairs, -1 elsewhere.
class PerfectDiscriminatorReward {
 public:
  PerfectDiscriminatorReward(std::initializer_list<std::pair<int, int>> pairs);
  bool contains(int s, int a) const { return mask_ >> key(s, a) & 1; }
  double operator()(int s, int a) const { return contains(s, a) ? 1.0 : -1.0; }
  bool operator==(const PerfectDiscriminatorReward& o) const {
    return mask_ == o.mask_;
  }

 private:
  static int key(int s, int a) { return s * 8 + a; }
  uint64_t mask_ = 0;
};

PerfectDiscriminatorReward main_expert_pairs();      // 1-2-3-4-5 then loop
PerfectDiscriminatorReward go_right_expert_pairs();  // 1-2, 2-3, 3-4 only

// Sparse action-value table: entries exist only for visited pairs. Greedy
// action selection sees visited pairs only; bootstraps of unvisited pairs
// read 0.
class QTable {
 public:
  double alpha = 0.1;

  bool has(int s, int a) const { return q_.count(key(s, a)) != 0; }
  double value(int s, int a) const {
    auto it = q_.find(key(s, a));
    return it == q_.end() ? 0.0 : it->second;
  }
  // q += alpha * (target - q); creates the entry on first touch.
  // Returns the applied change.
  double update(int s, int a, double target) {
    double& v = q_[key(s, a)];
    const double d = alpha * (target - v);
    v += d;
    return d;
  }
  std::size_t size() const { return q_.size(); }

  // All visited maximisers at state s (ascending destination order);
  // empty if no pair at s has been visited.
  std::vector<int> visited_argmax(int s) const;

  bool operator==(const QTable& o) const { return q_ == o.q_; }

  // Largest absolute value difference over the union of both tables' entries
  // (missing entries read 0).
  double max_diff(const QTable& other) const;

 private:
  static int key(int s, int a) { return s * 8 + a; }
  std::unordered_map<int, double> q_;
};

// Append a scripted episode given as destination states from the start state.
// Validates legality (throws std::domain_error) and horizon.
void append_episode(Buffer& buf, const std::vector<int>& destinations);

// The three-episode deceptive discovery replay: jump into the loop first,
// then two partial explorations that return to the jump.
const std::array<std::vector<int>, 3>& deceptive_discovery_episodes();

// Replay backup over the whole buffer, in chronological order, in place,
// until the largest applied change in a sweep is below `tol`.
// The sweep order is part of the protocol: the fixed point of the in-place
// update depends on it, and the reference values assume chronological order.
// Throws std::runtime_error if `max_sweeps` is exhausted (the backup has no
// fixed point when the buffer links episodes into reward-inconsistent
// cycles; see train() for the capped variant used during learning runs).
struct ConvergeStats {
  long sweeps;
  double last_delta;
};
ConvergeStats converge(QTable& q, const Buffer& buf, const RewardFn& reward,
                       double tol = 1e-9, long max_sweeps = 1000000);

// Same backup with a hard sweep cap and no error: learning runs train tables
// a bounded amount per episode. Returns sweeps executed.
long train(QTable& q, const Buffer& buf, const RewardFn& reward,
           long sweep_cap, double tol = 1e-9);

// Exhaustive search over all legal action sequences from the start state.
struct BruteForceResult {
  double best_return;
  std::vector<int> best_sequence;
  int sequences_enumerated;
};
BruteForceResult brute_force_optimal(const RewardFn& reward);

// Greedy rollout from the start state: highest-valued visited pair, ties
// broken by lowest destination, unvisited states fall back to the lowest
// legal destination.
std::vector<int> greedy_path(const QTable& q);
double true_return(const std::vector<int>& destinations);

// epsilon-greedy behaviour: with probability eps a uniform legal action;
// otherwise a uniform choice among the visited maximisers (uniform legal if
// the state has no visited pair).
int behaviour_action(const QTable& q, int s, double eps, Rng& rng);

// epsilon-greedy behaviour where actions missing from the table are scored by
// the intention's own discriminator reward (+1/-1) instead of being skipped,
// so an intention reaches for untried actions its discriminator endorses.
int behaviour_action(const QTable& q, const RewardFn& reward, int s, double eps,
                     Rng& rng);

struct RunConfig {
  int episodes = 200;      // total, including the scripted seed episodes
  double eps = 0.1;
  long sweep_cap = 400;    // per-episode training sweeps
  double p_main = 0.5;     // scheduler: chance of the main intention per block
  int block_len = 1;       // scheduler switch period in steps (5 = per episode)
  double p_handcraft = 0.5;  // chance an episode follows the handcrafted sequence
  int handcraft_prefix = 3;  // handcrafted: aux leads this many steps, main finishes
  bool scripted_seed = true;
};

struct AilRunResult {
  QTable q;
  std::vector<int> greedy;
  double greedy_true_return;
};
// Single-task adversarial imitation: the main intention collects all data.
AilRunResult run_ail_tabular(uint64_t seed, const RunConfig& cfg);

struct LfgpRunResult {
  QTable main_q;
  std::vector<QTable> aux_q;
  std::vector<int> greedy;
  double greedy_true_return;
};
// Scheduled multitask run: every `block_len` steps the scheduler draws the
// data-collecting intention (main with probability p_main, otherwise uniform
// over auxiliaries); every task's table trains on the shared buffer with its
// own perfect-discriminator reward.
LfgpRunResult run_lfgp_tabular(uint64_t seed,
                               const PerfectDiscriminatorReward& main_expert,
                               const std::vector<PerfectDiscriminatorReward>& aux_experts,
                               const RunConfig& cfg);

}  // namespace lfgp::tabular
