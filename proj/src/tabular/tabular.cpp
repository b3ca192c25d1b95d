#include "lfgp/tabular.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lfgp/mdp_six.h"

namespace lfgp::tabular {

using envs::SixStateMdp;

PerfectDiscriminatorReward::PerfectDiscriminatorReward(
    std::initializer_list<std::pair<int, int>> pairs) {
  for (const auto& [s, a] : pairs) mask_ |= uint64_t{1} << key(s, a);
}

PerfectDiscriminatorReward main_expert_pairs() {
  return {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 5}};
}

PerfectDiscriminatorReward go_right_expert_pairs() {
  return {{1, 2}, {2, 3}, {3, 4}};
}

double QTable::max_diff(const QTable& other) const {
  double d = 0.0;
  for (const auto& [k, v] : q_) {
    auto it = other.q_.find(k);
    d = std::max(d, std::abs(v - (it == other.q_.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, v] : other.q_)
    if (!q_.count(k)) d = std::max(d, std::abs(v));
  return d;
}

std::vector<int> QTable::visited_argmax(int s) const {
  std::vector<int> best;
  double best_v = 0.0;
  for (int a : SixStateMdp::legal(s)) {
    if (!has(s, a)) continue;
    const double v = value(s, a);
    if (best.empty() || v > best_v) {
      best = {a};
      best_v = v;
    } else if (v == best_v) {
      best.push_back(a);
    }
  }
  return best;
}

void append_episode(Buffer& buf, const std::vector<int>& destinations) {
  if (destinations.size() != SixStateMdp::kHorizon)
    throw std::domain_error("episode must be exactly horizon length");
  SixStateMdp env;
  const std::size_t start = buf.size();
  for (int a : destinations) {
    const int s = env.state();
    auto res = env.step(a);  // validates legality
    buf.push_back({s, a, res.next, res.done, -1});
  }
  for (std::size_t i = start; i + 1 < buf.size(); ++i)
    buf[i].next_a = buf[i + 1].a;
}

const std::array<std::vector<int>, 3>& deceptive_discovery_episodes() {
  static const std::array<std::vector<int>, 3> eps = {{
      {5, 5, 5, 5, 5},
      {2, 6, 1, 5, 5},
      {2, 3, 6, 1, 5},
  }};
  return eps;
}

namespace {
// One chronological in-place sweep. Convergence is measured as the table
// change across a whole sweep, not per update: self-loop rows keep a
// constant per-update delta at the fixed point (+0.1 three times, then the
// terminal row pulls back), but the net table change vanishes.
double sweep(QTable& q, const Buffer& buf, const RewardFn& reward) {
  const QTable before = q;
  for (const Transition& tr : buf) {
    const double boot = tr.terminal ? 0.0 : q.value(tr.s2, tr.next_a);
    const double target = reward(tr.s, tr.a) + boot;
    q.update(tr.s, tr.a, target);
  }
  return q.max_diff(before);
}
}  // namespace

ConvergeStats converge(QTable& q, const Buffer& buf, const RewardFn& reward,
                       double tol, long max_sweeps) {
  if (buf.empty()) throw std::domain_error("converge: empty buffer");
  for (long i = 1; i <= max_sweeps; ++i) {
    const double d = sweep(q, buf, reward);
    if (d < tol) return {i, d};
  }
  throw std::runtime_error("replay backup did not converge");
}

long train(QTable& q, const Buffer& buf, const RewardFn& reward,
           long sweep_cap, double tol) {
  for (long i = 1; i <= sweep_cap; ++i)
    if (sweep(q, buf, reward) < tol) return i;
  return sweep_cap;
}

namespace {
void enumerate(int s, int depth, double ret, std::vector<int>& seq,
               const RewardFn& reward, BruteForceResult& out) {
  if (depth == SixStateMdp::kHorizon) {
    ++out.sequences_enumerated;
    if (out.best_sequence.empty() || ret > out.best_return) {
      out.best_return = ret;
      out.best_sequence = seq;
    }
    return;
  }
  for (int a : SixStateMdp::legal(s)) {
    seq.push_back(a);
    enumerate(a, depth + 1, ret + reward(s, a), seq, reward, out);
    seq.pop_back();
  }
}
}  // namespace

BruteForceResult brute_force_optimal(const RewardFn& reward) {
  BruteForceResult out{0.0, {}, 0};
  std::vector<int> seq;
  enumerate(SixStateMdp::kInitState, 0, 0.0, seq, reward, out);
  return out;
}

std::vector<int> greedy_path(const QTable& q) {
  std::vector<int> seq;
  int s = SixStateMdp::kInitState;
  for (int t = 0; t < SixStateMdp::kHorizon; ++t) {
    const auto best = q.visited_argmax(s);
    const int a = best.empty() ? SixStateMdp::legal(s).front() : best.front();
    seq.push_back(a);
    s = a;
  }
  return seq;
}

double true_return(const std::vector<int>& destinations) {
  double r = 0.0;
  int s = SixStateMdp::kInitState;
  for (int a : destinations) {
    r += SixStateMdp::true_reward(s, a);
    s = a;
  }
  return r;
}

int behaviour_action(const QTable& q, int s, double eps, Rng& rng) {
  const auto& legal = SixStateMdp::legal(s);
  if (rng.bernoulli(eps))
    return legal[rng.uniform_int(static_cast<int>(legal.size()))];
  const auto best = q.visited_argmax(s);
  if (best.empty())
    return legal[rng.uniform_int(static_cast<int>(legal.size()))];
  return best[rng.uniform_int(static_cast<int>(best.size()))];
}

int behaviour_action(const QTable& q, const RewardFn& reward, int s, double eps,
                     Rng& rng) {
  const auto& legal = SixStateMdp::legal(s);
  if (rng.bernoulli(eps))
    return legal[rng.uniform_int(static_cast<int>(legal.size()))];
  std::vector<int> best;
  double top = 0;
  for (int a : legal) {
    const double v = q.has(s, a) ? q.value(s, a) : reward(s, a);
    if (best.empty() || v > top) {
      best.assign(1, a);
      top = v;
    } else if (v == top) {
      best.push_back(a);
    }
  }
  return best[rng.uniform_int(static_cast<int>(best.size()))];
}

namespace {
// Roll one episode, each block of cfg.block_len steps controlled by the
// intention the scheduler drew for it; tables index: 0 = main, 1.. = aux.
// When rewards is non-null each intention scores untried actions with its
// own discriminator reward; otherwise untried actions are not considered.
void collect_episode(std::vector<QTable>& tables,
                     const std::vector<RewardFn>* rewards, const RunConfig& cfg,
                     Rng& rng, Buffer& buf) {
  SixStateMdp env;
  const std::size_t start = buf.size();
  int active = 0;
  int hc_aux = 0;  // nonzero: this episode follows the handcrafted sequence
  if (tables.size() > 1 && cfg.p_handcraft > 0 && rng.bernoulli(cfg.p_handcraft))
    hc_aux = 1 + rng.uniform_int(static_cast<int>(tables.size()) - 1);
  for (int t = 0; t < SixStateMdp::kHorizon; ++t) {
    if (hc_aux != 0) {
      active = t < cfg.handcraft_prefix ? hc_aux : 0;
    } else if (t % cfg.block_len == 0) {
      if (tables.size() == 1 || rng.bernoulli(cfg.p_main))
        active = 0;
      else
        active = 1 + rng.uniform_int(static_cast<int>(tables.size()) - 1);
    }
    const int s = env.state();
    const int a =
        rewards ? behaviour_action(tables[active], (*rewards)[active], s, cfg.eps, rng)
                : behaviour_action(tables[active], s, cfg.eps, rng);
    auto res = env.step(a);
    buf.push_back({s, a, res.next, res.done, -1});
  }
  for (std::size_t i = start; i + 1 < buf.size(); ++i)
    buf[i].next_a = buf[i + 1].a;
}
}  // namespace

AilRunResult run_ail_tabular(uint64_t seed, const RunConfig& cfg) {
  Rng rng(seed);
  const auto main_r = main_expert_pairs();
  std::vector<QTable> tables(1);
  Buffer buf;
  int done = 0;
  if (cfg.scripted_seed) {
    for (const auto& ep : deceptive_discovery_episodes()) {
      append_episode(buf, ep);
      train(tables[0], buf, main_r, cfg.sweep_cap);
      ++done;
    }
  }
  for (; done < cfg.episodes; ++done) {
    collect_episode(tables, nullptr, cfg, rng, buf);
    train(tables[0], buf, main_r, cfg.sweep_cap);
  }
  AilRunResult out;
  out.greedy = greedy_path(tables[0]);
  out.greedy_true_return = true_return(out.greedy);
  out.q = std::move(tables[0]);
  return out;
}

LfgpRunResult run_lfgp_tabular(uint64_t seed,
                               const PerfectDiscriminatorReward& main_expert,
                               const std::vector<PerfectDiscriminatorReward>& aux_experts,
                               const RunConfig& cfg) {
  if (aux_experts.empty())
    throw std::domain_error("run_lfgp_tabular needs at least one auxiliary");
  Rng rng(seed);
  std::vector<RewardFn> rewards;
  rewards.emplace_back(main_expert);
  for (const auto& e : aux_experts) rewards.emplace_back(e);
  std::vector<QTable> tables(rewards.size());

  Buffer buf;
  int done = 0;
  auto train_all = [&] {
    for (std::size_t k = 0; k < tables.size(); ++k)
      train(tables[k], buf, rewards[k], cfg.sweep_cap);
  };
  if (cfg.scripted_seed) {
    for (const auto& ep : deceptive_discovery_episodes()) {
      append_episode(buf, ep);
      train_all();
      ++done;
    }
  }
  for (; done < cfg.episodes; ++done) {
    collect_episode(tables, &rewards, cfg, rng, buf);
    train_all();
  }

  LfgpRunResult out;
  out.greedy = greedy_path(tables[0]);
  out.greedy_true_return = true_return(out.greedy);
  out.main_q = std::move(tables[0]);
  out.aux_q.assign(tables.begin() + 1, tables.end());
  return out;
}

}  // namespace lfgp::tabular
