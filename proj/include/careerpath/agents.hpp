#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "careerpath/approx.hpp"
#include "careerpath/env.hpp"

namespace careerpath {

// Linear decay from start to end over the first `decay_fraction` of episodes.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double decay_fraction = 0.8;

  double at(std::size_t episode, std::size_t episodes) const;
  friend bool operator==(const EpsilonSchedule&, const EpsilonSchedule&) = default;
};

enum class AlphaSchedule { Constant, InverseVisits };

struct TrainConfig {
  std::size_t episodes = 20000;
  double alpha = 0.1;
  // InverseVisits uses max(alpha_min, min(alpha, n(s,a)^-alpha_exponent)).
  AlphaSchedule alpha_schedule = AlphaSchedule::Constant;
  double alpha_min = 0.0;
  double alpha_exponent = 1.0;
  EpsilonSchedule epsilon;
  std::optional<double> gamma;  // env discount when unset
  // Tabular keys include the time step (finite-horizon optimal values are time-indexed).
  bool step_in_state = false;
  // Start-job weights over the env catalog; uniform when empty.
  std::vector<double> start_weights;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct NetConfig {
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::Tanh;
  double learning_rate = 1e-3;
  std::size_t replay_capacity = 50000;
  std::size_t batch_size = 32;
  std::size_t target_sync_interval = 500;
  std::size_t warmup_transitions = 500;
  std::size_t train_every = 1;
  double entropy_coef = 0.01;
  double critic_learning_rate = 1e-3;
  // Rewards are divided by this before training; 0 picks the largest step salary.
  double reward_scale = 0.0;

  void validate() const;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

// Dense Q(s, a) over catalog states (optionally x time step) and catalog actions.
class QTable {
 public:
  QTable() = default;
  QTable(std::vector<JobId> catalog, int horizon_steps, bool step_in_state);

  std::size_t state_key(const Env& env, const State& s) const;
  double get(std::size_t key, std::size_t action) const { return q_[key * n_actions_ + action]; }
  double& at(std::size_t key, std::size_t action) { return q_[key * n_actions_ + action]; }
  std::span<const double> row(std::size_t key) const { return {q_.data() + key * n_actions_, n_actions_}; }
  std::size_t& visits(std::size_t key, std::size_t action) { return visits_[key * n_actions_ + action]; }

  double value(JobId state, JobId action, int step = 0) const;

  std::size_t n_state_keys() const { return n_actions_ ? q_.size() / n_actions_ : 0; }
  std::size_t n_actions() const { return n_actions_; }
  bool step_in_state() const { return step_in_state_; }
  int horizon_steps() const { return horizon_; }
  const std::vector<JobId>& catalog() const { return catalog_; }
  const std::vector<double>& values() const { return q_; }
  std::vector<double>& values() { return q_; }

 private:
  std::vector<JobId> catalog_;
  std::size_t n_actions_ = 0;
  int horizon_ = 0;
  bool step_in_state_ = false;
  std::vector<double> q_;
  std::vector<std::size_t> visits_;
};

// Uniformly random among entries within a relative 1e-12 of the maximum.
std::size_t argmax_random_tie(std::span<const double> scores, Rng& rng);

class TabularPolicy final : public Policy {
 public:
  TabularPolicy(QTable table, std::string label) : table_(std::move(table)), label_(std::move(label)) {}
  JobId act(const Env& env, const State& state, Rng& rng) const override;
  std::string name() const override { return label_; }
  const QTable& table() const { return table_; }

 private:
  QTable table_;
  std::string label_;
};

QTable sarsa_train(const Env& env, const TrainConfig& config);
QTable q_learning_train(const Env& env, const TrainConfig& config);

// Network input for an env state. LastJob: one-hot current occupation and
// industry plus t/horizon. FullHistory adds years of tenure per occupation and
// per industry, total years and distinct jobs held.
class StateFeaturizer {
 public:
  StateFeaturizer() = default;
  StateFeaturizer(const std::vector<JobId>& catalog, StateRepresentation repr, EnvConfig env);

  std::size_t size() const { return size_; }
  void encode(const State& s, std::span<double> out) const;
  std::vector<double> encode(const State& s) const;
  StateRepresentation representation() const { return repr_; }

 private:
  StateRepresentation repr_ = StateRepresentation::LastJob;
  EnvConfig env_;
  std::vector<int> occupations_;
  std::vector<int> industries_;
  std::size_t size_ = 0;
};

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

// FIFO ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  // Distinct indices, uniformly without replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

class DqnPolicy final : public Policy {
 public:
  DqnPolicy(Mlp net, StateFeaturizer featurizer) : net_(std::move(net)), featurizer_(std::move(featurizer)) {}
  JobId act(const Env& env, const State& state, Rng& rng) const override;
  std::string name() const override { return "dqn"; }
  std::vector<double> q_values(const State& state) const;
  const Mlp& net() const { return net_; }
  const StateFeaturizer& featurizer() const { return featurizer_; }

 private:
  Mlp net_;
  StateFeaturizer featurizer_;
};

struct DqnTrainStats {
  std::size_t updates = 0;
  std::size_t transitions = 0;
  double last_loss = 0.0;
};

DqnPolicy dqn_train(const Env& env, const TrainConfig& config, const NetConfig& net,
                    DqnTrainStats* stats = nullptr);

class A2cPolicy final : public Policy {
 public:
  A2cPolicy(Mlp actor, Mlp critic, StateFeaturizer featurizer, bool stochastic = true)
      : actor_(std::move(actor)), critic_(std::move(critic)), featurizer_(std::move(featurizer)),
        stochastic_(stochastic) {}
  JobId act(const Env& env, const State& state, Rng& rng) const override;
  std::string name() const override { return "a2c"; }
  std::vector<double> action_probabilities(const State& state) const;
  double value(const State& state) const;  // in scaled reward units
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const StateFeaturizer& featurizer() const { return featurizer_; }
  bool stochastic() const { return stochastic_; }
  A2cPolicy greedy() const { return A2cPolicy(actor_, critic_, featurizer_, false); }

 private:
  Mlp actor_;
  Mlp critic_;
  StateFeaturizer featurizer_;
  bool stochastic_;
};

struct A2cTrainStats {
  std::size_t updates = 0;
  double reward_scale = 1.0;
  double max_softmax_sum_error = 0.0;
  double final_entropy = 0.0;
};

A2cPolicy a2c_train(const Env& env, const TrainConfig& config, const NetConfig& net,
                    A2cTrainStats* stats = nullptr);

// Applies where the hire probability is highest.
class GreedyMostCommonPolicy final : public Policy {
 public:
  JobId act(const Env& env, const State& state, Rng& rng) const override;
  std::string name() const override { return "greedy_common"; }
};

// Applies where hire probability x step salary is highest.
class GreedyHighestExpectedRewardPolicy final : public Policy {
 public:
  JobId act(const Env& env, const State& state, Rng& rng) const override;
  std::string name() const override { return "greedy_her"; }
};

JobId baseline_most_common(const Env& env, const State& state, Rng& rng);
JobId baseline_highest_expected_reward(const Env& env, const State& state, Rng& rng);

// Start job for a training episode.
JobId sample_start(const Env& env, const std::vector<double>& weights, Rng& rng);

}  // namespace careerpath
