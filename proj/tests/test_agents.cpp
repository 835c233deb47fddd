#include <doctest.h>

#include <cmath>

#include "careerpath/agents.hpp"
#include "careerpath/eval.hpp"
#include "support.hpp"

using namespace careerpath;
using careerpath::testing::greedy_index;
using careerpath::testing::random_tiny_env;
using careerpath::testing::table_env;

namespace {

TrainConfig tabular_config(std::size_t episodes, std::uint64_t seed) {
  TrainConfig tc;
  tc.episodes = episodes;
  tc.seed = seed;
  tc.step_in_state = true;
  tc.alpha = 1.0;
  tc.alpha_schedule = AlphaSchedule::InverseVisits;
  tc.alpha_exponent = 0.55;
  return tc;
}

double q_at(const QTable& q, const Env& env, std::size_t s, int t, std::size_t a) {
  const JobId j = env.catalog()[s];
  QTable copy = q;
  return copy.get(q.state_key(env, State{j, {{j, 1}}, t}), a);
}

}  // namespace

TEST_CASE("single state, single action, gamma 0") {
  const Env env = table_env({1.0}, {4.0}, 3);  // step salary 1
  for (bool sarsa : {false, true}) {
    TrainConfig tc;
    tc.episodes = 2000;
    tc.gamma = 0.0;
    const auto q = sarsa ? sarsa_train(env, tc) : q_learning_train(env, tc);
    CHECK(q.value({0, 0}, {0, 0}) == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("alpha 0 leaves the table at zero") {
  const Env env = random_tiny_env(1);
  TrainConfig tc;
  tc.episodes = 200;
  tc.alpha = 0.0;
  const auto ql = q_learning_train(env, tc);
  const auto sa = sarsa_train(env, tc);
  for (double v : ql.values()) CHECK(v == 0.0);
  for (double v : sa.values()) CHECK(v == 0.0);
}

TEST_CASE("deterministic chain: Q equals reward-to-go") {
  // p = 1 everywhere; step salaries 1, 2, 3.
  const Env env = table_env(std::vector<double>(9, 1.0), {4.0, 8.0, 12.0}, 4);
  const auto oracle = value_iteration_oracle(tiny_mdp_from_env(env));
  TrainConfig tc;
  tc.episodes = 20000;
  tc.alpha = 0.5;
  tc.step_in_state = true;
  tc.epsilon = {1.0, 1.0, 1.0};
  const auto q = q_learning_train(env, tc);
  for (int t = 0; t < 4; ++t)
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t a = 0; a < 3; ++a) CHECK(q_at(q, env, s, t, a) == doctest::Approx(oracle.q[t][s * 3 + a]).epsilon(1e-3));
}

TEST_CASE("gamma 0 learns the expected immediate reward") {
  const Env env = random_tiny_env(9);
  TrainConfig tc;
  tc.episodes = 40000;
  tc.gamma = 0.0;
  tc.alpha = 1.0;
  tc.alpha_schedule = AlphaSchedule::InverseVisits;
  tc.epsilon = {1.0, 1.0, 1.0};
  const auto q = q_learning_train(env, tc);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t a = 0; a < 3; ++a) {
      const JobId from = env.catalog()[s], to = env.catalog()[a];
      const double p = s == a ? 1.0 : env.probability(env.reset(from), to);
      const double expected = p * env.step_salary(to) + (1 - p) * env.step_salary(from);
      CHECK(q.value(from, to) == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("tabular learners find the oracle policy on a tiny MDP") {
  for (std::uint64_t seed : {11, 12}) {
    const Env env = random_tiny_env(seed);
    const auto oracle = value_iteration_oracle(tiny_mdp_from_env(env));
    for (bool sarsa : {false, true}) {
      const auto q = sarsa ? sarsa_train(env, tabular_config(100000, seed)) : q_learning_train(env, tabular_config(100000, seed));
      const TabularPolicy policy(q, "tabular");
      for (int t = 0; t < 4; ++t)
        for (std::size_t s = 0; s < 3; ++s) CHECK(greedy_index(env, policy, s, t) == oracle.policy[t][s]);
    }
  }
}

TEST_CASE("with epsilon 1 Q-learning stays optimal while Sarsa evaluates the random policy") {
  const Env env = random_tiny_env(21);
  const auto mdp = tiny_mdp_from_env(env);
  const auto oracle = value_iteration_oracle(mdp);
  auto tc = tabular_config(200000, 4);
  tc.epsilon = {1.0, 1.0, 1.0};
  const auto ql = q_learning_train(env, tc);
  const auto sa = sarsa_train(env, tc);

  // Action values of the uniform random policy by backward induction.
  const std::size_t n = 3;
  std::vector<double> v_next(n, 0.0);
  std::vector<std::vector<double>> q_random(4, std::vector<double>(n * n));
  for (int t = 3; t >= 0; --t) {
    std::vector<double> v(n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t a = 0; a < n; ++a) {
        double q = 0.0;
        for (std::size_t s2 = 0; s2 < n; ++s2) q += mdp.prob(s, a, s2) * (mdp.reward(s, a, s2) + v_next[s2]);
        q_random[t][s * n + a] = q;
        v[s] += q / n;
      }
    v_next = v;
  }
  double scale = 0.0;
  for (double x : q_random[0]) scale = std::max(scale, std::abs(x));
  for (int t = 0; t < 4; ++t)
    for (std::size_t s = 0; s < n; ++s) {
      const TabularPolicy greedy(ql, "q");
      CHECK(greedy_index(env, greedy, s, t) == oracle.policy[t][s]);
      for (std::size_t a = 0; a < n; ++a) CHECK(std::abs(q_at(sa, env, s, t, a) - q_random[t][s * n + a]) < 0.05 * scale);
    }
}

TEST_CASE("tabular training is reproducible and rejects full history") {
  const Env env = random_tiny_env(3);
  auto tc = tabular_config(500, 7);
  CHECK(q_learning_train(env, tc).values() == q_learning_train(env, tc).values());
  CHECK(sarsa_train(env, tc).values() == sarsa_train(env, tc).values());
  const Env full = table_env(std::vector<double>(4, 0.5), {1.0, 2.0}, 4, StateRepresentation::FullHistory);
  CHECK_THROWS_AS(q_learning_train(full, tc), std::invalid_argument);
  CHECK_THROWS_AS(sarsa_train(full, tc), std::invalid_argument);
}

TEST_CASE("argmax") {
  Rng rng(1);
  const std::vector<double> s{1.0, 5.0, 3.0};
  CHECK(argmax_random_tie(s, rng) == 1);
  const std::vector<double> scaled{7.0, 35.0, 21.0};
  CHECK(argmax_random_tie(scaled, rng) == 1);
  std::vector<int> hits(3, 0);
  const std::vector<double> ties{2.0, 2.0, 2.0};
  for (int i = 0; i < 3000; ++i) ++hits[argmax_random_tie(ties, rng)];
  for (int h : hits) CHECK(h == doctest::Approx(1000).epsilon(0.1));
}

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push(Transition{{static_cast<double>(i)}, 0, 0.0, {}, false});
  REQUIRE(buf.size() == 3);
  CHECK(buf[0].state[0] == 2.0);
  CHECK(buf[2].state[0] == 4.0);
  Rng rng(2);
  auto idx = buf.sample_indices(3, rng);
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("DQN recovers the oracle policy") {
  int ok = 0;
  for (std::uint64_t seed : {31, 32}) {
    const Env env = random_tiny_env(seed);
    const auto oracle = value_iteration_oracle(tiny_mdp_from_env(env));
    TrainConfig tc;
    tc.episodes = 2000;
    tc.seed = seed;
    NetConfig nc;
    nc.hidden = {32, 32};
    nc.warmup_transitions = 200;
    nc.target_sync_interval = 200;
    DqnTrainStats stats;
    const auto policy = dqn_train(env, tc, nc, &stats);
    CHECK(stats.updates > 0);
    bool all = true;
    for (int t = 0; t < 4; ++t)
      for (std::size_t s = 0; s < 3; ++s) all = all && greedy_index(env, policy, s, t) == oracle.policy[t][s];
    ok += all;
  }
  CHECK(ok >= 1);
}

TEST_CASE("A2C") {
  SUBCASE("recovers the oracle policy and keeps softmax normalized") {
    int ok = 0;
    for (std::uint64_t seed : {41, 42}) {
      const Env env = random_tiny_env(seed);
      const auto oracle = value_iteration_oracle(tiny_mdp_from_env(env));
      TrainConfig tc;
      tc.episodes = 2000;
      tc.seed = seed;
      NetConfig nc;
      nc.hidden = {32, 32};
      A2cTrainStats stats;
      const auto policy = a2c_train(env, tc, nc, &stats).greedy();
      CHECK(stats.max_softmax_sum_error <= 1e-9);
      bool all = true;
      for (int t = 0; t < 4; ++t)
        for (std::size_t s = 0; s < 3; ++s) all = all && greedy_index(env, policy, s, t) == oracle.policy[t][s];
      ok += all;
    }
    CHECK(ok >= 1);
  }
  SUBCASE("single action: critic learns the reward-to-go") {
    const Env env = table_env({1.0}, {40000.0}, 8);
    TrainConfig tc;
    tc.episodes = 3000;
    NetConfig nc;
    nc.hidden = {16};
    nc.critic_learning_rate = 3e-3;
    A2cTrainStats stats;
    const auto policy = a2c_train(env, tc, nc, &stats);
    CHECK(stats.final_entropy == doctest::Approx(0.0));
    for (int t : {0, 4, 7}) {
      const State s{{0, 0}, {{{0, 0}, 1}}, t};
      CHECK(policy.value(s) * stats.reward_scale == doctest::Approx((8 - t) * 10000.0).epsilon(0.05));
    }
  }
}

TEST_CASE("baselines") {
  Rng rng(5);
  // Current job 2; applying from it: A (0) 0.9, B (1) 0.1, self 0.
  const std::vector<double> p{1, 0, 0, 0, 1, 0, 0.9, 0.1, 0};
  SUBCASE("most common picks the likeliest hire") {
    const Env env = table_env(p, {50000, 30000, 20000});
    CHECK(baseline_most_common(env, env.reset({2, 0}), rng) == JobId{0, 0});
  }
  SUBCASE("permuting probabilities permutes the choice") {
    const std::vector<double> q{1, 0, 0, 0, 1, 0, 0.1, 0.9, 0};
    const Env env = table_env(q, {50000, 30000, 20000});
    CHECK(baseline_most_common(env, env.reset({2, 0}), rng) == JobId{1, 0});
  }
  SUBCASE("highest expected reward weighs salary") {
    // 0.5 x 50000 vs 0.9 x 30000.
    const std::vector<double> q{1, 0, 0, 0, 1, 0, 0.5, 0.9, 0};
    const Env env = table_env(q, {50000, 30000, 20000});
    CHECK(baseline_highest_expected_reward(env, env.reset({2, 0}), rng) == JobId{1, 0});
  }
  SUBCASE("uniform salaries reduce HER to most common") {
    const Env flat = table_env({1, 0.3, 0.7, 0.2, 1, 0.6, 0.5, 0.9, 1}, {40000, 40000, 40000});
    for (std::size_t s = 0; s < 3; ++s) {
      const State st = flat.reset(flat.catalog()[s]);
      Rng a(1), b(1);
      CHECK(baseline_highest_expected_reward(flat, st, a) == baseline_most_common(flat, st, b));
    }
  }
  SUBCASE("equal probabilities choose uniformly") {
    const Env env = testing::constant_env(4, 0.5, {1, 2, 3, 4});
    std::vector<int> hits(4, 0);
    // Self-application is also 0.5 here.
    for (int i = 0; i < 10000; ++i) ++hits[env.index_of(baseline_most_common(env, env.reset({0, 0}), rng))];
    double chi2 = 0.0;
    for (int h : hits) chi2 += (h - 2500.0) * (h - 2500.0) / 2500.0;
    CHECK(chi2 < 16.27);  // 3 dof, p = 0.001
  }
}

TEST_CASE("start sampling") {
  const Env env = random_tiny_env(2);
  Rng rng(1);
  std::vector<int> hits(3, 0);
  for (int i = 0; i < 3000; ++i) ++hits[env.index_of(sample_start(env, {0.0, 1.0, 3.0}, rng))];
  CHECK(hits[0] == 0);
  CHECK(hits[2] > 2 * hits[1]);
  CHECK_THROWS_AS(sample_start(env, {1.0}, rng), std::invalid_argument);
}
