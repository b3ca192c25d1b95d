#include "lfgp/mdp_six.h"

#include <stdexcept>
#include <string>

namespace lfgp::envs {

const std::vector<int>& SixStateMdp::legal(int s) {
  static const std::vector<int> table[7] = {
      {},     // unused (states are 1-based)
      {2, 5},  // s1: advance right or jump into the loop
      {3, 6},  // s2
      {4, 6},  // s3
      {5, 6},  // s4
      {5},     // s5: self-loop only
      {1},     // s6: back to start
  };
  if (s < 1 || s > kNumStates) throw std::domain_error("state out of range");
  return table[s];
}

bool SixStateMdp::is_legal(int s, int a) {
  if (s < 1 || s > kNumStates) return false;
  for (int d : legal(s))
    if (d == a) return true;
  return false;
}

double SixStateMdp::true_reward(int s, int a) {
  if (s == 5 && a == 5) return 1.0;
  if (s == 1 && a == 5) return -5.0;
  return 0.0;
}

SixStateMdp::StepResult SixStateMdp::step(int a) {
  if (done()) throw std::domain_error("episode already finished");
  if (!is_legal(state_, a))
    throw std::domain_error("illegal action " + std::to_string(a) +
                            " in state " + std::to_string(state_));
  const double r = true_reward(state_, a);
  state_ = a;
  ++t_;
  return {state_, r, done()};
}

}  // namespace lfgp::envs
