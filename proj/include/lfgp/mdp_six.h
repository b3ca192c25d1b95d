#pragma once
#include <vector>

namespace lfgp::envs {

// Six-state MDP with a deceptive immediate reward. States are 1..6 and every
// action is identified by its destination state (all actions are
// state-conditional, 10 legal pairs in total). The start state is 1, the
// horizon is exactly 5 steps. True reward: +1 for the self-loop at state 5,
// -5 for jumping 1 -> 5 directly, 0 otherwise — so the greedy-looking jump
// into the rewarding loop yields a final return of -1 while the long way
// round (1-2-3-4-5 then loop) yields +1.
class SixStateMdp {
 public:
  static constexpr int kHorizon = 5;
  static constexpr int kInitState = 1;
  static constexpr int kNumStates = 6;

  // Legal destinations from a state, in ascending order.
  static const std::vector<int>& legal(int s);
  static bool is_legal(int s, int a);
  static double true_reward(int s, int a);

  int state() const { return state_; }
  int steps_taken() const { return t_; }
  bool done() const { return t_ >= kHorizon; }

  struct StepResult {
    int next;
    double reward;
    bool done;
  };
  // Throws std::domain_error on an illegal action.
  StepResult step(int a);
  void reset() {
    state_ = kInitState;
    t_ = 0;
  }

 private:
  int state_ = kInitState;
  int t_ = 0;
};

}  // namespace lfgp::envs
