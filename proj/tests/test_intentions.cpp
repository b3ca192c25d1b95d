#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "lfgp/intentions.h"

using namespace lfgp;
using namespace lfgp::intent;

namespace {

std::vector<std::string> some_names(int k) {
  std::vector<std::string> n;
  for (int i = 0; i < k; ++i) n.push_back("task" + std::to_string(i));
  return n;
}

std::vector<buffers::Transition> random_transitions(int n, int obs, int act,
                                                    Rng& rng) {
  std::vector<buffers::Transition> v(static_cast<std::size_t>(n));
  for (auto& tr : v) {
    tr.s.resize(static_cast<std::size_t>(obs));
    tr.a.resize(static_cast<std::size_t>(act));
    tr.s_next.resize(static_cast<std::size_t>(obs));
    for (auto& x : tr.s) x = rng.uniform(-1, 1);
    for (auto& x : tr.a) x = rng.uniform(-1, 1);
    for (auto& x : tr.s_next) x = rng.uniform(-1, 1);
  }
  return v;
}

Batch batch_of(const std::vector<buffers::Transition>& v) {
  Batch b;
  for (const auto& t : v) b.push_back(&t);
  return b;
}

// Trunk-free discriminator whose logit for task t is exactly biases[t],
// independent of the input: weights zero, output bias set directly.
adv::DiscriminatorBank bias_bank(int obs, int act,
                                 const std::vector<double>& biases) {
  Rng rng(1);
  adv::DiscriminatorBank bank(obs, act, static_cast<int>(biases.size()), {},
                              rng);
  auto& v = bank.params().values;
  std::fill(v.begin(), v.end(), 0.0);
  const std::size_t w_count = biases.size() * static_cast<std::size_t>(obs + act);
  for (std::size_t t = 0; t < biases.size(); ++t) v[w_count + t] = biases[t];
  return bank;
}

const std::vector<std::pair<int, nd::Act>> kTinyTanh{{4, nd::Act::tanh}};
const std::vector<std::pair<int, nd::Act>> kNoHidden{};

}  // namespace

TEST_CASE("training defaults match the published recipe") {
  const SacSettings s;
  REQUIRE(s.trunk.size() == 2);
  CHECK(s.trunk[0].first == 256);
  CHECK(s.trunk[0].second == nd::Act::relu);
  CHECK(s.trunk[1].first == 256);
  CHECK(s.trunk[1].second == nd::Act::relu);
  REQUIRE(s.head.size() == 2);
  CHECK(s.head[0].first == 256);
  CHECK(s.head[0].second == nd::Act::relu);
  CHECK(s.gamma == 0.99);
  CHECK(s.q_lr == 3e-4);
  CHECK(s.pi_lr == 1e-5);
  CHECK(s.alpha_lr == 3e-4);
  CHECK(s.init_alpha == 1e-2);
  CHECK(s.weight_decay == 1e-2);
  CHECK(s.polyak == 1e-4);
  CHECK(s.max_grad_norm == 10.0);
  // the entropy target is the negated action dimension
  CHECK(TemperatureSet(some_names(2), 4, 1e-2).target_entropy() == -4.0);
  CHECK(TemperatureSet(some_names(2), 3, 1e-2).target_entropy() == -3.0);
  CHECK(TemperatureSet(some_names(1), 3, 1e-2).alpha(0) ==
        doctest::Approx(1e-2).epsilon(1e-12));
}

TEST_CASE("tape and scalar forwards agree exactly") {
  Rng rng(7);
  const auto names = some_names(3);

  IntentionPolicy policy(4, 2, names, {{5, nd::Act::relu}, {3, nd::Act::tanh}},
                         kTinyTanh, rng);
  QBank qbank(4, 2, names, {{5, nd::Act::relu}, {3, nd::Act::tanh}}, kTinyTanh,
              rng);
  const std::vector<double> s = {0.3, -1.1, 0.4, 2.0};
  const std::vector<double> a = {-0.2, 0.9};

  for (int t = 0; t < 3; ++t) {
    const GaussianStats st = policy.head_stats(t, s);
    nd::Tape tape(policy.params());
    const int trunk = policy.emit_trunk(tape, tape.constant(s));
    const auto [mu, pre_var] = policy.emit_head(tape, t, trunk);
    const int var = tape.add_scalar(tape.softplus(pre_var), kVarianceFloor);
    for (int i = 0; i < 2; ++i) {
      CHECK(tape.value(mu)[static_cast<std::size_t>(i)] ==
            st.mean[static_cast<std::size_t>(i)]);
      CHECK(tape.value(var)[static_cast<std::size_t>(i)] ==
            st.variance[static_cast<std::size_t>(i)]);
    }
    for (int net = 0; net < 2; ++net) {
      nd::Tape qt(qbank.params());
      const int q =
          qbank.emit_q(qt, net, t, qt.constant(s), qt.constant(a), 0);
      CHECK(qt.scalar(q) == qbank.q_value(net, t, s, a, false));
    }
  }
  // variance is strictly positive by construction
  const GaussianStats st = policy.head_stats(0, s);
  for (double v : st.variance) CHECK(v >= kVarianceFloor);
}

TEST_CASE("deterministic action at a zero head is the zero vector") {
  Rng rng(3);
  IntentionPolicy policy(2, 3, some_names(2), kTinyTanh, kNoHidden, rng);
  std::fill(policy.params().values.begin(), policy.params().values.end(), 0.0);
  const ActionSample out =
      sample_action(policy, 1, {0.7, -2.0}, /*stochastic=*/false, rng);
  CHECK_FALSE(out.has_log_prob);
  REQUIRE(out.action.size() == 3);
  for (double v : out.action) CHECK(v == 0.0);
  // and the zero head's variance is softplus(0) + floor
  const GaussianStats st = policy.head_stats(1, {0.7, -2.0});
  for (double v : st.variance)
    CHECK(v == doctest::Approx(std::log(2.0) + kVarianceFloor).epsilon(1e-12));
}

TEST_CASE("every sampled action stays inside the unit box") {
  Rng rng(11);
  IntentionPolicy policy(3, 2, some_names(2), kTinyTanh, kNoHidden, rng);
  int violations = 0;
  double lo = 1e300, hi = -1e300;
  std::vector<double> s(3);
  for (int i = 0; i < 1000000; ++i) {
    for (auto& x : s) x = rng.uniform(-5, 5);
    const ActionSample out = sample_action(policy, i & 1, s, true, rng);
    for (double v : out.action) {
      if (v < -1.0 || v > 1.0) ++violations;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  CHECK(violations == 0);
  CHECK(lo >= -1.0);
  CHECK(hi <= 1.0);
}

TEST_CASE("squashed log-density integrates to one and matches sampled log-probs") {
  Rng rng(19);
  IntentionPolicy policy(2, 1, some_names(1), {{6, nd::Act::tanh}},
                         {{4, nd::Act::tanh}}, rng);
  const std::vector<double> s = {0.3, -0.8};
  const GaussianStats st = policy.head_stats(0, s);
  const double mu = st.mean[0];
  const double var = st.variance[0];
  const double sd = std::sqrt(var);

  // density of tanh(N(mu, var)) by change of variables
  const auto density = [&](double a) {
    const double raw = std::atanh(a);
    const double z = (raw - mu) / sd;
    const double gauss =
        std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
    return gauss / (1.0 - a * a);
  };

  // composite Simpson over the open interval
  const int intervals = 4000;  // even
  const double a0 = -1.0 + 1e-9, a1 = 1.0 - 1e-9;
  const double h = (a1 - a0) / intervals;
  double integral = density(a0) + density(a1);
  for (int k = 1; k < intervals; ++k)
    integral += density(a0 + k * h) * (k % 2 ? 4.0 : 2.0);
  integral *= h / 3.0;
  CHECK(std::abs(integral - 1.0) < 1e-3);

  // sampled log-probs match the independent density formula pointwise
  for (int i = 0; i < 200; ++i) {
    const ActionSample out = sample_action(policy, 0, s, true, rng);
    REQUIRE(out.has_log_prob);
    const double ref = std::log(density(out.action[0]));
    CHECK(out.log_prob == doctest::Approx(ref).epsilon(1e-6));
  }

  // the overflow-safe squash correction equals the naive form where the
  // naive form keeps its precision (cancellation in 1 - tanh^2 destroys it
  // for large |raw|, which is why the stable form exists)
  for (const double raw : {-5.0, -1.0, -0.1, 0.0, 0.1, 1.0, 5.0}) {
    const double stable =
        2.0 * (std::log(2.0) - raw - nd::softplus_val(-2.0 * raw));
    const double naive = std::log(1.0 - std::tanh(raw) * std::tanh(raw));
    CHECK(stable == doctest::Approx(naive).epsilon(1e-9));
  }
  // far in the tails the correction approaches 2*(ln 2 - |raw|) and must
  // stay finite where the naive form has already lost its digits
  for (const double raw : {-15.0, 15.0, -40.0, 40.0}) {
    const double stable =
        2.0 * (std::log(2.0) - raw - nd::softplus_val(-2.0 * raw));
    CHECK(std::isfinite(stable));
    CHECK(stable ==
          doctest::Approx(2.0 * (std::log(2.0) - std::abs(raw))).epsilon(1e-12));
  }
}

TEST_CASE("policy-update log-probs replay the scalar sampler bit for bit") {
  Rng rng(23);
  IntentionPolicy policy(3, 2, some_names(2), kTinyTanh, kNoHidden, rng);
  TemperatureSet temps(some_names(2), 2, 1e-2);
  auto transitions = random_transitions(4, 3, 2, rng);
  const QGraphFn zero_q = [](nd::Tape& tape, int, const std::vector<double>&,
                             int) { return tape.constant({0.0}); };
  SacSettings st;
  st.pi_lr = 0.0;
  st.weight_decay = 0.0;

  const IntentionPolicy before = policy;  // pre-update weights for the replay
  Rng seed_a(404);
  const PiResult res =
      pi_update(policy, zero_q, temps, batch_of(transitions), st, seed_a);

  Rng seed_b(404);
  std::vector<double> mean_lp(2, 0.0);
  for (const auto& tr : transitions)
    for (int t = 0; t < 2; ++t)
      mean_lp[static_cast<std::size_t>(t)] +=
          sample_action(before, t, tr.s, true, seed_b).log_prob;
  for (auto& v : mean_lp) v /= 4.0;

  REQUIRE(res.mean_log_prob.size() == 2);
  CHECK(res.mean_log_prob[0] == mean_lp[0]);
  CHECK(res.mean_log_prob[1] == mean_lp[1]);
  // with a zero critic the loss is exactly sum_T alpha_T * mean log-prob
  CHECK(res.loss ==
        doctest::Approx(1e-2 * (mean_lp[0] + mean_lp[1])).epsilon(1e-12));
}

TEST_CASE("bootstrap targets: discount zero returns the reward exactly") {
  Rng rng(31);
  const auto names = some_names(2);
  IntentionPolicy policy(2, 1, names, kTinyTanh, kNoHidden, rng);
  QBank qbank(2, 1, names, kTinyTanh, kNoHidden, rng);
  std::fill(qbank.params().values.begin(), qbank.params().values.end(), 0.0);
  qbank.set_target_values(qbank.params().values);
  TemperatureSet temps(names, 1, 1e-2);
  const auto bank = bias_bank(2, 1, {0.8, -31.0});
  auto transitions = random_transitions(5, 2, 1, rng);

  const auto y = q_targets(qbank, policy, temps, bank, batch_of(transitions),
                           /*gamma=*/0.0, rng);
  REQUIRE(y.size() == 2);
  for (int i = 0; i < 5; ++i) {
    CHECK(y[0][static_cast<std::size_t>(i)] == 0.8);     // the raw logit
    CHECK(y[1][static_cast<std::size_t>(i)] == -20.0);   // clamped reward
  }
}

TEST_CASE("bootstrap targets use the smaller target critic and replay exactly") {
  Rng rng(37);
  {
    // crafted constant critics pinned to the documented parameter layout:
    // with all weights zero, each critic equals its scalar head bias
    IntentionPolicy policy(2, 1, some_names(1), kTinyTanh, kNoHidden, rng);
    QBank qbank(2, 1, some_names(1), {{1, nd::Act::relu}}, kNoHidden, rng);
    REQUIRE(qbank.params().size() == 12);
    std::vector<double> tv(12, 0.0);
    tv[5] = 1.0;   // net 0 head bias
    tv[11] = 2.0;  // net 1 head bias
    qbank.set_target_values(tv);
    const std::vector<double> probe_s = {0.4, -0.6}, probe_a = {0.2};
    REQUIRE(qbank.q_value(0, 0, probe_s, probe_a, true) == 1.0);
    REQUIRE(qbank.q_value(1, 0, probe_s, probe_a, true) == 2.0);

    TemperatureSet temps(some_names(1), 1, 1e-300);  // entropy term off
    const auto bank = bias_bank(2, 1, {0.25});
    auto transitions = random_transitions(3, 2, 1, rng);
    const auto y = q_targets(qbank, policy, temps, bank, batch_of(transitions),
                             /*gamma=*/0.5, rng);
    for (double v : y[0]) CHECK(v == 0.75);  // 0.25 + 0.5 * min(1, 2)

    std::swap(tv[5], tv[11]);  // the min must not depend on head order
    qbank.set_target_values(tv);
    const auto y2 = q_targets(qbank, policy, temps, bank, batch_of(transitions),
                              0.5, rng);
    for (double v : y2[0]) CHECK(v == 0.75);
  }
  {
    // random critics: replaying the documented rng order reproduces every
    // target bitwise, and no target exceeds either critic's own bootstrap
    const auto names = some_names(2);
    IntentionPolicy policy(3, 2, names, kTinyTanh, kNoHidden, rng);
    QBank qbank(3, 2, names, kTinyTanh, kNoHidden, rng);
    TemperatureSet temps(names, 2, 1e-2);
    const auto bank = bias_bank(3, 2, {0.3, -0.7});
    auto transitions = random_transitions(4, 3, 2, rng);

    Rng draw_a(55);
    const auto y =
        q_targets(qbank, policy, temps, bank, batch_of(transitions), 0.9, draw_a);
    Rng draw_b(55);
    for (int i = 0; i < 4; ++i) {
      const auto& tr = transitions[static_cast<std::size_t>(i)];
      for (int t = 0; t < 2; ++t) {
        const double r = adv::airl_reward(bank, t, tr.s, tr.a);
        const ActionSample next = sample_action(policy, t, tr.s_next, true, draw_b);
        const double q1 = qbank.q_value(0, t, tr.s_next, next.action, true);
        const double q2 = qbank.q_value(1, t, tr.s_next, next.action, true);
        const double alpha = temps.alpha(t);
        const double expect =
            r + 0.9 * (std::min(q1, q2) - alpha * next.log_prob);
        CHECK(y[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] ==
              expect);
        CHECK(y[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] <=
              r + 0.9 * (q1 - alpha * next.log_prob) + 1e-15);
        CHECK(y[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] <=
              r + 0.9 * (q2 - alpha * next.log_prob) + 1e-15);
      }
    }
  }
}

TEST_CASE("non-finite targets raise a numerical error naming the sample") {
  Rng rng(41);
  const auto names = some_names(2);
  IntentionPolicy policy(2, 1, names, kTinyTanh, kNoHidden, rng);
  QBank qbank(2, 1, names, kTinyTanh, kNoHidden, rng);
  TemperatureSet temps(names, 1, 1e-2);
  const auto bank = bias_bank(2, 1, {0.1, 0.2});
  auto transitions = random_transitions(2, 2, 1, rng);

  std::vector<double> poisoned(qbank.target_values().size(),
                               std::numeric_limits<double>::quiet_NaN());
  qbank.set_target_values(poisoned);
  bool thrown = false;
  try {
    q_targets(qbank, policy, temps, bank, batch_of(transitions), 0.9, rng);
  } catch (const std::runtime_error& e) {
    thrown = true;
    const std::string msg = e.what();
    CHECK(msg.find("non-finite") != std::string::npos);
    CHECK(msg.find("task 0") != std::string::npos);
    CHECK(msg.find("sample 0") != std::string::npos);
  }
  CHECK(thrown);
}

TEST_CASE("critic regression: exact loss on crafted constant rewards") {
  Rng rng(43);
  const auto names = some_names(3);
  IntentionPolicy policy(2, 1, names, kTinyTanh, kNoHidden, rng);
  QBank qbank(2, 1, names, {{2, nd::Act::relu}}, kNoHidden, rng);
  std::fill(qbank.params().values.begin(), qbank.params().values.end(), 0.0);
  qbank.set_target_values(qbank.params().values);
  TemperatureSet temps(names, 1, 1e-2);
  // dyadic rewards keep every term exact in floating point
  const auto bank = bias_bank(2, 1, {0.5, 1.0, 0.25});
  auto transitions = random_transitions(4, 2, 1, rng);

  SacSettings st;
  st.gamma = 0.0;
  const std::vector<double> before = qbank.params().values;
  const double loss =
      q_update(qbank, policy, temps, bank, batch_of(transitions), st, rng);
  // per sample, per critic: (0 - 0.5)^2 + (0 - 1)^2 + (0 - 0.25)^2 = 1.3125
  CHECK(loss == 2.625);
  CHECK(qbank.params().values != before);  // the optimizer stepped
}

TEST_CASE("critic gradients match central finite differences") {
  Rng rng(47);
  const auto names = some_names(2);
  IntentionPolicy policy(2, 1, names, kTinyTanh, kNoHidden, rng);
  QBank qbank(2, 1, names, {{3, nd::Act::tanh}}, kNoHidden, rng);
  TemperatureSet temps(names, 1, 0.05);
  const auto bank = bias_bank(2, 1, {0.4, -0.3});
  auto transitions = random_transitions(3, 2, 1, rng);

  SacSettings st;
  st.gamma = 0.9;  // targets read the frozen trail, so they are
                   // constant across parameter probes
  st.q_lr = 0.0;
  st.weight_decay = 0.0;
  st.max_grad_norm = 1e18;

  QBank center = qbank;
  Rng seed(71);
  const double loss0 =
      q_update(center, policy, temps, bank, batch_of(transitions), st, seed);
  const auto grads = center.params().grads;

  const double h = 1e-5;
  for (int k = 0; k < qbank.params().size(); ++k) {
    QBank plus = qbank, minus = qbank;
    plus.params().values[static_cast<std::size_t>(k)] += h;
    minus.params().values[static_cast<std::size_t>(k)] -= h;
    Rng sp(71), sm(71);
    const double up =
        q_update(plus, policy, temps, bank, batch_of(transitions), st, sp);
    const double dn =
        q_update(minus, policy, temps, bank, batch_of(transitions), st, sm);
    const double fd = (up - dn) / (2 * h);
    const double denom = std::max(std::abs(fd), 1e-6);
    CHECK(std::abs(grads[static_cast<std::size_t>(k)] - fd) / denom < 1e-4);
  }
  CHECK(std::isfinite(loss0));
}

TEST_CASE("policy update with a frozen constant critic raises entropy") {
  // A head with zero weights, mean bias (0.8, -0.6), and pre-variance bias -4
  // starts far below maximum entropy (sharp, off-center). With a constant
  // critic the only training signal is the entropy bonus, so ascent must
  // widen the variance, recenter the mean, and raise the sampled entropy.
  // (The squashed Gaussian's entropy peaks at an interior variance near 0.76,
  // about 0.68 per dimension, so the climb has a known summit.)
  Rng rng(53);
  IntentionPolicy policy(1, 2, some_names(1), kNoHidden, kNoHidden, rng);
  policy.params().values = {0.0, 0.0, 0.8, -0.6, 0.0, 0.0, -4.0, -4.0};
  const std::vector<double> s = {0.2};
  const GaussianStats before = policy.head_stats(0, s);
  REQUIRE(before.mean[0] == 0.8);
  REQUIRE(before.mean[1] == -0.6);
  REQUIRE(before.variance[0] ==
          doctest::Approx(nd::softplus_val(-4.0) + kVarianceFloor)
              .epsilon(1e-12));

  TemperatureSet temps(some_names(1), 2, 1.0);
  std::vector<buffers::Transition> transitions(1);
  transitions[0].s = s;
  transitions[0].a = {0.0, 0.0};
  transitions[0].s_next = s;
  const QGraphFn zero_q = [](nd::Tape& tape, int, const std::vector<double>&,
                             int) { return tape.constant({0.0}); };
  SacSettings st;
  st.pi_lr = 1e-2;
  st.weight_decay = 0.0;

  const auto sampled_entropy = [&](Rng& r) {
    double h = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
      h -= sample_action(policy, 0, s, true, r).log_prob;
    return h / n;
  };
  Rng est(999);
  const double h_before = sampled_entropy(est);
  for (int step = 0; step < 600; ++step)
    pi_update(policy, zero_q, temps, batch_of(transitions), st, rng);
  const double h_after = sampled_entropy(est);
  const GaussianStats after = policy.head_stats(0, s);

  CHECK(h_after > h_before + 2.0);
  for (int i = 0; i < 2; ++i) {
    CHECK(after.variance[static_cast<std::size_t>(i)] > 0.3);
    CHECK(std::abs(after.mean[static_cast<std::size_t>(i)]) < 0.3);
  }
}

TEST_CASE("policy update climbs a quadratic bowl to its peak") {
  Rng rng(59);
  IntentionPolicy policy(1, 2, some_names(1), kNoHidden, {{8, nd::Act::tanh}},
                         rng);
  TemperatureSet temps(some_names(1), 2, 1e-300);  // entropy off
  const std::vector<double> c = {0.3, -0.5};
  const QGraphFn bowl = [&c](nd::Tape& tape, int, const std::vector<double>&,
                             int a_node) {
    const int diff = tape.sub(a_node, tape.constant(c));
    return tape.scale(tape.dot(diff, diff), -1.0);
  };
  std::vector<buffers::Transition> transitions(1);
  transitions[0].s = {0.2};
  transitions[0].a = {0.0, 0.0};
  transitions[0].s_next = {0.2};

  SacSettings st;
  st.pi_lr = 3e-3;
  st.weight_decay = 0.0;

  const GaussianStats before = policy.head_stats(0, transitions[0].s);
  for (int step = 0; step < 800; ++step)
    pi_update(policy, bowl, temps, batch_of(transitions), st, rng);

  const ActionSample mean_act =
      sample_action(policy, 0, transitions[0].s, false, rng);
  CHECK(std::abs(mean_act.action[0] - 0.3) < 0.05);
  CHECK(std::abs(mean_act.action[1] - -0.5) < 0.05);
  // a deterministic peak also squeezes the exploration noise
  const GaussianStats after = policy.head_stats(0, transitions[0].s);
  for (int i = 0; i < 2; ++i)
    CHECK(after.variance[static_cast<std::size_t>(i)] <
          before.variance[static_cast<std::size_t>(i)]);
}

TEST_CASE("policy gradients match central finite differences") {
  Rng rng(61);
  const auto names = some_names(2);
  auto check_fd = [&](const IntentionPolicy& policy, const QGraphFn& qf,
                      const TemperatureSet& temps, const Batch& batch) {
    SacSettings st;
    st.pi_lr = 0.0;
    st.weight_decay = 0.0;
    st.max_grad_norm = 1e18;

    IntentionPolicy center = policy;
    Rng seed(88);
    pi_update(center, qf, temps, batch, st, seed);
    const auto grads = center.params().grads;

    const double h = 1e-5;
    for (int k = 0; k < policy.params().size(); ++k) {
      IntentionPolicy plus = policy, minus = policy;
      plus.params().values[static_cast<std::size_t>(k)] += h;
      minus.params().values[static_cast<std::size_t>(k)] -= h;
      Rng sp(88), sm(88);
      const double up = pi_update(plus, qf, temps, batch, st, sp).loss;
      const double dn = pi_update(minus, qf, temps, batch, st, sm).loss;
      const double fd = (up - dn) / (2 * h);
      const double denom = std::max(std::abs(fd), 1e-6);
      CHECK(std::abs(grads[static_cast<std::size_t>(k)] - fd) / denom < 1e-4);
    }
  };

  IntentionPolicy policy(2, 1, names, kTinyTanh, kNoHidden, rng);
  TemperatureSet temps(names, 1, 0.37);
  auto transitions = random_transitions(3, 2, 1, rng);

  SUBCASE("synthetic quadratic critic") {
    const std::vector<double> c = {-0.2};
    const QGraphFn bowl = [&c](nd::Tape& tape, int, const std::vector<double>&,
                               int a_node) {
      const int diff = tape.sub(a_node, tape.constant(c));
      return tape.scale(tape.dot(diff, diff), -1.0);
    };
    check_fd(policy, bowl, temps, batch_of(transitions));
  }

  SUBCASE("frozen clipped-double critic bank") {
    QBank qbank(2, 1, names, {{3, nd::Act::tanh}}, kNoHidden, rng);
    const std::vector<double> online_before = qbank.params().values;
    const std::vector<double> targets_before = qbank.target_values();

    SacSettings st;
    st.pi_lr = 1e-3;
    st.weight_decay = 0.0;
    IntentionPolicy moved = policy;
    Rng seed(89);
    const PiResult res =
        pi_update(moved, qbank, temps, batch_of(transitions), st, seed);
    CHECK(std::isfinite(res.loss));
    CHECK(qbank.params().values == online_before);  // critics stay frozen
    CHECK(qbank.target_values() == targets_before);
    CHECK(moved.params().values != policy.params().values);

    const int base = policy.params().size();
    const QGraphFn frozen = [&qbank, base](nd::Tape& tape, int task,
                                           const std::vector<double>& s,
                                           int a_node) {
      const int s_node = tape.constant(s);
      const int q1 = qbank.emit_q(tape, 0, task, s_node, a_node, base);
      const int q2 = qbank.emit_q(tape, 1, task, s_node, a_node, base);
      return tape.sub(q1, tape.relu(tape.sub(q1, q2)));
    };
    // the FD harness drives the QBank overload's exact graph via the
    // combined store, so bind the critic values the same way
    SacSettings fd_st;
    fd_st.pi_lr = 0.0;
    fd_st.weight_decay = 0.0;
    fd_st.max_grad_norm = 1e18;
    IntentionPolicy center = policy;
    Rng seed2(90);
    pi_update(center, qbank, temps, batch_of(transitions), fd_st, seed2);
    const auto grads = center.params().grads;
    const double h = 1e-5;
    for (int k = 0; k < policy.params().size(); ++k) {
      IntentionPolicy plus = policy, minus = policy;
      plus.params().values[static_cast<std::size_t>(k)] += h;
      minus.params().values[static_cast<std::size_t>(k)] -= h;
      Rng sp(90), sm(90);
      const double up =
          pi_update(plus, qbank, temps, batch_of(transitions), fd_st, sp).loss;
      const double dn =
          pi_update(minus, qbank, temps, batch_of(transitions), fd_st, sm).loss;
      const double fd = (up - dn) / (2 * h);
      const double denom = std::max(std::abs(fd), 1e-6);
      CHECK(std::abs(grads[static_cast<std::size_t>(k)] - fd) / denom < 1e-4);
    }
    (void)frozen;
  }
}

TEST_CASE("temperatures move toward the target entropy and stay positive") {
  const auto names = some_names(2);
  {
    TemperatureSet temps(names, 3, 1e-2);  // target entropy -3
    // task 0: entropy 5 above the target -> alpha falls;
    // task 1: entropy -3.5 below the target -> alpha rises
    alpha_update(temps, {-5.0, 3.5}, 1e-3);
    CHECK(temps.alpha(0) < 1e-2);
    CHECK(temps.alpha(1) > 1e-2);
    for (int t = 0; t < 2; ++t) CHECK(temps.alpha(t) > 0.0);
  }
  {
    // entropy exactly on target: a stationary point, alpha holds exactly
    TemperatureSet temps(names, 3, 1e-2);
    const double before = temps.alpha(0);
    alpha_update(temps, {3.0, 3.0}, 1e-3);
    CHECK(temps.alpha(0) == before);
    CHECK(temps.alpha(1) == before);
  }
  {
    // many updates under extreme entropy errors keep every alpha positive;
    // task 0 sits far below the entropy target so its alpha must grow,
    // task 1 far above so its alpha must shrink
    TemperatureSet temps(names, 3, 1e-2);
    for (int i = 0; i < 200; ++i) alpha_update(temps, {50.0, -50.0}, 1e-2);
    CHECK(temps.alpha(0) > 0.0);
    CHECK(temps.alpha(1) > 0.0);
    CHECK(temps.alpha(0) > temps.alpha(1));
  }
}

TEST_CASE("target networks trail the online critics") {
  Rng rng(67);
  QBank qbank(2, 1, some_names(1), kTinyTanh, kNoHidden, rng);
  const int n = qbank.params().size();

  std::fill(qbank.params().values.begin(), qbank.params().values.end(), 1.0);
  qbank.set_target_values(std::vector<double>(static_cast<std::size_t>(n), 0.0));
  polyak_update(qbank, 1e-4);
  for (double v : qbank.target_values()) CHECK(v == 1e-4);

  polyak_update(qbank, 0.0);  // freeze
  for (double v : qbank.target_values()) CHECK(v == 1e-4);

  polyak_update(qbank, 1.0);  // hard copy
  CHECK(qbank.target_values() == qbank.params().values);

  // the trail matches an independently maintained recurrence exactly
  std::vector<double> trail = qbank.target_values();
  for (int round = 0; round < 5; ++round) {
    for (auto& v : qbank.params().values) v += rng.uniform(-1, 1);
    polyak_update(qbank, 0.3);
    for (std::size_t i = 0; i < trail.size(); ++i)
      trail[i] = (1.0 - 0.3) * trail[i] + 0.3 * qbank.params().values[i];
    CHECK(qbank.target_values() == trail);
  }
}

TEST_CASE("zero rewards and zero temperature drive the critics to zero") {
  // With zero reward and the entropy term off, repeated target regression is
  // a gamma-contraction on the values it actually constrains. The states form
  // a cycle and the policy is deterministic by construction (huge negative
  // pre-variance bias), so every bootstrap input is itself a training input
  // and the fitted values must decay geometrically toward zero.
  Rng rng(73);
  const auto names = some_names(1);
  IntentionPolicy policy(2, 1, names, kNoHidden, kNoHidden, rng);
  policy.params().values = {0.0, 0.0, 0.5, 0.0, 0.0, -25.0};
  const double a_star = std::tanh(0.5);

  QBank qbank(2, 1, names, {{4, nd::Act::relu}}, kNoHidden, rng);
  qbank.set_target_values(qbank.params().values);
  TemperatureSet temps(names, 1, 1e-300);
  adv::DiscriminatorBank bank = bias_bank(2, 1, {0.0});  // reward always 0

  std::vector<buffers::Transition> transitions(6);
  for (auto& tr : transitions) tr.s = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (int i = 0; i < 6; ++i) {
    transitions[static_cast<std::size_t>(i)].a = {a_star};
    transitions[static_cast<std::size_t>(i)].s_next =
        transitions[static_cast<std::size_t>((i + 1) % 6)].s;
  }

  const auto max_abs_q = [&] {
    double m = 0.0;
    for (const auto& tr : transitions)
      for (int net = 0; net < 2; ++net)
        m = std::max(m, std::abs(qbank.q_value(net, 0, tr.s, tr.a, false)));
    return m;
  };

  const double initial = max_abs_q();
  REQUIRE(initial > 0.05);

  SacSettings st;
  st.gamma = 0.9;
  st.weight_decay = 0.0;
  for (int step = 0; step < 1000; ++step) {
    st.q_lr = step < 500 ? 1e-2 : 1e-3;  // anneal into the fixed point
    q_update(qbank, policy, temps, bank, batch_of(transitions), st, rng);
    polyak_update(qbank, 0.05);
  }
  CHECK(max_abs_q() < std::max(0.02 * initial, 0.01));
}

TEST_CASE("checkpoints round-trip and reject other architectures") {
  Rng rng(79);
  const auto names = some_names(2);
  const std::vector<double> s = {0.4, -0.9};
  const std::vector<double> a = {0.3};

  IntentionPolicy policy(2, 1, names, kTinyTanh, kNoHidden, rng);
  const GaussianStats st0 = policy.head_stats(0, s);
  policy.save("/tmp/lfgp_intentions_pi.ckpt");
  for (auto& v : policy.params().values) v += 1.0;
  policy.load("/tmp/lfgp_intentions_pi.ckpt");
  const GaussianStats st1 = policy.head_stats(0, s);
  CHECK(st1.mean[0] == doctest::Approx(st0.mean[0]).epsilon(1e-5));
  CHECK(st1.variance[0] == doctest::Approx(st0.variance[0]).epsilon(1e-5));

  QBank qbank(2, 1, names, kTinyTanh, kNoHidden, rng);
  polyak_update(qbank, 0.0);
  const double q0 = qbank.q_value(0, 1, s, a, false);
  const double t0 = qbank.q_value(1, 1, s, a, true);
  qbank.save("/tmp/lfgp_intentions_q.ckpt");
  for (auto& v : qbank.params().values) v += 1.0;
  qbank.set_target_values(qbank.params().values);
  qbank.load("/tmp/lfgp_intentions_q.ckpt");
  CHECK(qbank.q_value(0, 1, s, a, false) == doctest::Approx(q0).epsilon(1e-5));
  CHECK(qbank.q_value(1, 1, s, a, true) == doctest::Approx(t0).epsilon(1e-5));

  TemperatureSet temps(names, 1, 1e-2);
  alpha_update(temps, {2.0, -4.0}, 1e-2);
  const double a0 = temps.alpha(0);
  temps.save("/tmp/lfgp_intentions_alpha.ckpt");
  alpha_update(temps, {2.0, -4.0}, 1e-2);
  temps.load("/tmp/lfgp_intentions_alpha.ckpt");
  CHECK(temps.alpha(0) == doctest::Approx(a0).epsilon(1e-6));

  // a bank over different tasks must refuse the checkpoint
  QBank other(2, 1, some_names(3), kTinyTanh, kNoHidden, rng);
  CHECK_THROWS_AS(other.load("/tmp/lfgp_intentions_q.ckpt"),
                  std::runtime_error);
  IntentionPolicy wider(2, 1, names, {{8, nd::Act::tanh}}, kNoHidden, rng);
  CHECK_THROWS_AS(wider.load("/tmp/lfgp_intentions_pi.ckpt"),
                  std::runtime_error);

  std::remove("/tmp/lfgp_intentions_pi.ckpt");
  std::remove("/tmp/lfgp_intentions_q.ckpt");
  std::remove("/tmp/lfgp_intentions_alpha.ckpt");
}

TEST_CASE("updates are deterministic in the seed") {
  const auto names = some_names(2);
  const auto build = [&](int seed) {
    Rng rng(seed);
    auto policy = IntentionPolicy(3, 2, names, kTinyTanh, kNoHidden, rng);
    auto qbank = QBank(3, 2, names, kTinyTanh, kNoHidden, rng);
    auto transitions = random_transitions(6, 3, 2, rng);
    return std::tuple(std::move(policy), std::move(qbank),
                      std::move(transitions));
  };
  auto [pol_a, q_a, tr_a] = build(42);
  auto [pol_b, q_b, tr_b] = build(42);
  TemperatureSet temps(names, 2, 1e-2);
  const auto bank = bias_bank(3, 2, {0.2, -0.4});
  SacSettings st;

  Rng run_a(7), run_b(7);
  const double ql_a =
      q_update(q_a, pol_a, temps, bank, batch_of(tr_a), st, run_a);
  const double ql_b =
      q_update(q_b, pol_b, temps, bank, batch_of(tr_b), st, run_b);
  CHECK(ql_a == ql_b);
  CHECK(q_a.params().values == q_b.params().values);

  const PiResult pr_a = pi_update(pol_a, q_a, temps, batch_of(tr_a), st, run_a);
  const PiResult pr_b = pi_update(pol_b, q_b, temps, batch_of(tr_b), st, run_b);
  CHECK(pr_a.loss == pr_b.loss);
  CHECK(pr_a.mean_log_prob == pr_b.mean_log_prob);
  CHECK(pol_a.params().values == pol_b.params().values);
}

TEST_CASE("shape and temperature errors are rejected") {
  Rng rng(83);
  const auto names = some_names(2);
  IntentionPolicy policy(2, 1, names, kTinyTanh, kNoHidden, rng);
  QBank qbank(2, 1, names, kTinyTanh, kNoHidden, rng);
  TemperatureSet temps(names, 1, 1e-2);
  const auto bank = bias_bank(2, 1, {0.1, 0.2});
  SacSettings st;

  CHECK_THROWS_AS(q_update(qbank, policy, temps, bank, {}, st, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(pi_update(policy, qbank, temps, {}, st, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(qbank.q_value(2, 0, {0.1, 0.2}, {0.0}, false),
                  std::invalid_argument);
  CHECK_THROWS_AS(policy.head_stats(5, {0.1, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(TemperatureSet(names, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(alpha_update(temps, {1.0}, 1e-3), std::invalid_argument);

  // mismatched task counts across components are rejected
  TemperatureSet three(some_names(3), 1, 1e-2);
  auto transitions = random_transitions(2, 2, 1, rng);
  CHECK_THROWS_AS(
      q_update(qbank, policy, three, bank, batch_of(transitions), st, rng),
      std::invalid_argument);
}
