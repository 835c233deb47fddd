#include "careerpath/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

namespace careerpath {

double EpsilonSchedule::at(std::size_t episode, std::size_t episodes) const {
  const double span = decay_fraction * static_cast<double>(episodes);
  const double frac = span > 0.0 ? std::min(1.0, static_cast<double>(episode) / span) : 1.0;
  return std::clamp(start + (end - start) * frac, 0.0, 1.0);
}

void TrainConfig::validate() const {
  if (episodes == 0) throw std::invalid_argument("train.episodes must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("train.alpha must be in [0, 1]");
  if (!(alpha_min >= 0.0 && alpha_min <= 1.0)) throw std::invalid_argument("train.alpha_min must be in [0, 1]");
  if (!(alpha_exponent > 0.5 && alpha_exponent <= 1.0))
    throw std::invalid_argument("train.alpha_exponent must be in (0.5, 1]");
  for (double e : {epsilon.start, epsilon.end})
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("train.epsilon must stay in [0, 1]");
  if (!(epsilon.decay_fraction >= 0.0 && epsilon.decay_fraction <= 1.0))
    throw std::invalid_argument("train.epsilon.decay_fraction must be in [0, 1]");
  if (gamma && !(*gamma >= 0.0 && *gamma <= 1.0)) throw std::invalid_argument("train.gamma must be in [0, 1]");
  for (double w : start_weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("train.start_weights must be nonnegative");
}

void NetConfig::validate() const {
  for (auto h : hidden)
    if (h == 0) throw std::invalid_argument("net.hidden sizes must be positive");
  if (activation == Activation::Softmax) throw std::invalid_argument("net.activation cannot be softmax");
  if (!(learning_rate > 0.0) || !(critic_learning_rate > 0.0))
    throw std::invalid_argument("net learning rates must be positive");
  if (replay_capacity == 0 || batch_size == 0 || batch_size > replay_capacity)
    throw std::invalid_argument("net.batch_size must be in [1, replay_capacity]");
  if (target_sync_interval == 0) throw std::invalid_argument("net.target_sync_interval must be positive");
  if (train_every == 0) throw std::invalid_argument("net.train_every must be positive");
  if (!(entropy_coef >= 0.0)) throw std::invalid_argument("net.entropy_coef must be nonnegative");
  if (!(reward_scale >= 0.0)) throw std::invalid_argument("net.reward_scale must be nonnegative");
}

// ---------------------------------------------------------------------------

QTable::QTable(std::vector<JobId> catalog, int horizon_steps, bool step_in_state)
    : catalog_(std::move(catalog)),
      n_actions_(catalog_.size()),
      horizon_(horizon_steps),
      step_in_state_(step_in_state) {
  const std::size_t keys = catalog_.size() * (step_in_state ? static_cast<std::size_t>(horizon_steps + 1) : 1);
  q_.assign(keys * n_actions_, 0.0);
  visits_.assign(q_.size(), 0);
}

std::size_t QTable::state_key(const Env& env, const State& s) const {
  const std::size_t job = env.index_of(s.current_job);
  if (!step_in_state_) return job;
  return static_cast<std::size_t>(std::min(s.t, horizon_)) * catalog_.size() + job;
}

double QTable::value(JobId state, JobId action, int step) const {
  auto find = [&](JobId j) {
    auto it = std::find(catalog_.begin(), catalog_.end(), j);
    if (it == catalog_.end()) throw std::out_of_range("QTable: job outside catalog");
    return static_cast<std::size_t>(it - catalog_.begin());
  };
  std::size_t key = find(state);
  if (step_in_state_) key += static_cast<std::size_t>(step) * catalog_.size();
  return get(key, find(action));
}

std::size_t argmax_random_tie(std::span<const double> scores, Rng& rng) {
  if (scores.empty()) throw std::invalid_argument("argmax over empty scores");
  double best = scores[0];
  for (double s : scores) best = std::max(best, s);
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  std::size_t count = 0;
  for (double s : scores) count += s >= best - tol;
  std::size_t pick = count > 1 ? rng.index(count) : 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= best - tol && pick-- == 0) return i;
  return 0;
}

JobId TabularPolicy::act(const Env& env, const State& state, Rng& rng) const {
  return env.catalog()[argmax_random_tie(table_.row(table_.state_key(env, state)), rng)];
}

JobId sample_start(const Env& env, const std::vector<double>& weights, Rng& rng) {
  if (weights.empty()) return env.catalog()[rng.index(env.catalog().size())];
  if (weights.size() != env.catalog().size())
    throw std::invalid_argument("start weights must cover the env catalog");
  return env.catalog()[rng.categorical(weights)];
}

namespace {

enum class TdTarget { Sarsa, QLearning };

QTable tabular_train(const Env& env, const TrainConfig& config, TdTarget target) {
  config.validate();
  if (env.representation() != StateRepresentation::LastJob)
    throw std::invalid_argument("tabular methods require the last_job state representation");
  const double gamma = config.gamma.value_or(env.config().discount);
  QTable q(env.catalog(), env.config().horizon_steps, config.step_in_state);
  Rng rng(config.seed);

  auto choose = [&](std::size_t key, double eps) {
    if (rng.uniform() < eps) return rng.index(q.n_actions());
    return argmax_random_tie(q.row(key), rng);
  };
  auto rate = [&](std::size_t key, std::size_t a) {
    if (config.alpha_schedule == AlphaSchedule::Constant) return config.alpha;
    const auto n = static_cast<double>(++q.visits(key, a));
    return std::max(config.alpha_min, std::min(config.alpha, std::pow(n, -config.alpha_exponent)));
  };

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const double eps = config.epsilon.at(ep, config.episodes);
    State s = env.reset(sample_start(env, config.start_weights, rng));
    std::size_t key = q.state_key(env, s);
    std::size_t a = choose(key, eps);
    while (true) {
      auto out = env.step(s, env.catalog()[a], rng);
      const std::size_t next_key = q.state_key(env, out.next_state);
      double td_target = out.reward_eur;
      std::size_t next_a = 0;
      if (!out.done) next_a = choose(next_key, eps);
      if (!out.done) {
        if (target == TdTarget::Sarsa) {
          td_target += gamma * q.get(next_key, next_a);
        } else {
          const auto row = q.row(next_key);
          td_target += gamma * *std::max_element(row.begin(), row.end());
        }
      }
      const double alpha = rate(key, a);
      q.at(key, a) += alpha * (td_target - q.get(key, a));
      if (out.done) break;
      s = std::move(out.next_state);
      key = next_key;
      a = next_a;
    }
  }
  return q;
}

}  // namespace

QTable sarsa_train(const Env& env, const TrainConfig& config) {
  return tabular_train(env, config, TdTarget::Sarsa);
}

QTable q_learning_train(const Env& env, const TrainConfig& config) {
  return tabular_train(env, config, TdTarget::QLearning);
}

// ---------------------------------------------------------------------------

StateFeaturizer::StateFeaturizer(const std::vector<JobId>& catalog, StateRepresentation repr, EnvConfig env)
    : repr_(repr), env_(env) {
  std::set<int> occ, ind;
  for (const auto& j : catalog) {
    occ.insert(j.occupation);
    ind.insert(j.industry);
  }
  occupations_.assign(occ.begin(), occ.end());
  industries_.assign(ind.begin(), ind.end());
  const std::size_t base = occupations_.size() + industries_.size() + 1;
  size_ = repr == StateRepresentation::LastJob ? base : base + occupations_.size() + industries_.size() + 2;
}

void StateFeaturizer::encode(const State& s, std::span<double> out) const {
  if (out.size() != size_) throw std::invalid_argument("StateFeaturizer: output width mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n_occ = occupations_.size(), n_ind = industries_.size();
  auto occ_index = [&](int code) -> std::optional<std::size_t> {
    auto it = std::lower_bound(occupations_.begin(), occupations_.end(), code);
    if (it == occupations_.end() || *it != code) return std::nullopt;
    return static_cast<std::size_t>(it - occupations_.begin());
  };
  auto ind_index = [&](int code) -> std::optional<std::size_t> {
    auto it = std::lower_bound(industries_.begin(), industries_.end(), code);
    if (it == industries_.end() || *it != code) return std::nullopt;
    return static_cast<std::size_t>(it - industries_.begin());
  };
  if (auto o = occ_index(s.current_job.occupation)) out[*o] = 1.0;
  if (auto i = ind_index(s.current_job.industry)) out[n_occ + *i] = 1.0;
  out[n_occ + n_ind] = static_cast<double>(s.t) / env_.horizon_steps;
  if (repr_ == StateRepresentation::LastJob) return;

  const std::size_t base = n_occ + n_ind + 1;
  const double years_per_step = env_.step_months / 12.0;
  double total = 0.0;
  std::set<JobId> distinct;
  for (const auto& h : s.history) {
    const double years = h.steps * years_per_step;
    if (auto o = occ_index(h.job.occupation)) out[base + *o] += years / 10.0;
    if (auto i = ind_index(h.job.industry)) out[base + n_occ + *i] += years / 10.0;
    total += years;
    distinct.insert(h.job);
  }
  out[base + n_occ + n_ind] = total / 10.0;
  out[base + n_occ + n_ind + 1] = static_cast<double>(distinct.size()) / 10.0;
}

std::vector<double> StateFeaturizer::encode(const State& s) const {
  std::vector<double> out(size_);
  encode(s, out);
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (batch > items_.size()) throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
  // Floyd's algorithm: distinct indices without materializing a permutation.
  std::vector<std::size_t> out;
  std::unordered_set<std::size_t> seen;
  const std::size_t n = items_.size();
  for (std::size_t j = n - batch; j < n; ++j) {
    const std::size_t t = rng.index(j + 1);
    const std::size_t pick = seen.contains(t) ? j : t;
    seen.insert(pick);
    out.push_back(pick);
  }
  return out;
}

namespace {

double resolve_reward_scale(const Env& env, const NetConfig& net) {
  return net.reward_scale > 0.0 ? net.reward_scale : env.max_step_salary();
}

std::vector<std::size_t> layer_dims(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

}  // namespace

std::vector<double> DqnPolicy::q_values(const State& state) const {
  return net_.forward(featurizer_.encode(state));
}

JobId DqnPolicy::act(const Env& env, const State& state, Rng& rng) const {
  return env.catalog()[argmax_random_tie(q_values(state), rng)];
}

DqnPolicy dqn_train(const Env& env, const TrainConfig& config, const NetConfig& net_config,
                    DqnTrainStats* stats) {
  config.validate();
  net_config.validate();
  const double gamma = config.gamma.value_or(env.config().discount);
  const double scale = resolve_reward_scale(env, net_config);
  StateFeaturizer featurizer(env.catalog(), env.representation(), env.config());
  Rng rng(config.seed);
  Rng init_rng(Rng::derive(config.seed, "dqn.init"));
  const std::size_t n_actions = env.catalog().size();

  Mlp q = Mlp::initialized(layer_dims(featurizer.size(), net_config.hidden, n_actions),
                           net_config.activation, Activation::Linear, init_rng);
  Mlp target = q;
  AdamState adam = AdamState::for_net(q, net_config.learning_rate);
  MlpWorkspace ws(q), target_ws(target);
  MlpParams grads = q.zeros_like();
  ReplayBuffer buffer(net_config.replay_capacity);
  DqnTrainStats local;

  std::vector<double> features(featurizer.size());
  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const double eps = config.epsilon.at(ep, config.episodes);
    State s = env.reset(sample_start(env, config.start_weights, rng));
    featurizer.encode(s, features);
    bool done = false;
    while (!done) {
      std::size_t a;
      if (rng.uniform() < eps) {
        a = rng.index(n_actions);
      } else {
        auto qs = ws.forward(q, features);
        a = argmax_random_tie(qs, rng);
      }
      auto out = env.step(s, env.catalog()[a], rng);
      std::vector<double> next_features = featurizer.encode(out.next_state);
      buffer.push({features, a, out.reward_eur / scale, next_features, out.done});
      ++local.transitions;
      done = out.done;
      s = std::move(out.next_state);
      features = std::move(next_features);

      if (buffer.size() < std::max(net_config.batch_size, net_config.warmup_transitions)) continue;
      if (local.transitions % net_config.train_every != 0) continue;

      grads.fill(0.0);
      double loss = 0.0;
      for (std::size_t i : buffer.sample_indices(net_config.batch_size, rng)) {
        const auto& tr = buffer[i];
        double y = tr.reward;
        if (!tr.done) {
          auto next_q = target_ws.forward(target, tr.next_state);
          y += gamma * *std::max_element(next_q.begin(), next_q.end());
        }
        ws.forward(q, tr.state);
        loss += ws.backward(q, SquaredErrorLoss{tr.action, y, 1.0 / net_config.batch_size}, grads);
      }
      if (!std::isfinite(loss))
        throw NumericalError("dqn: non-finite loss at update " + std::to_string(local.updates));
      adam_step(q, grads, adam);
      local.last_loss = loss;
      if (++local.updates % net_config.target_sync_interval == 0) target = q;
    }
  }
  if (stats) *stats = local;
  return DqnPolicy(std::move(q), std::move(featurizer));
}

std::vector<double> A2cPolicy::action_probabilities(const State& state) const {
  return actor_.forward(featurizer_.encode(state));
}

double A2cPolicy::value(const State& state) const { return critic_.forward(featurizer_.encode(state))[0]; }

JobId A2cPolicy::act(const Env& env, const State& state, Rng& rng) const {
  const auto pi = action_probabilities(state);
  if (stochastic_) return env.catalog()[rng.categorical(pi)];
  return env.catalog()[argmax_random_tie(pi, rng)];
}

A2cPolicy a2c_train(const Env& env, const TrainConfig& config, const NetConfig& net_config,
                    A2cTrainStats* stats) {
  config.validate();
  net_config.validate();
  const double gamma = config.gamma.value_or(env.config().discount);
  const double scale = resolve_reward_scale(env, net_config);
  StateFeaturizer featurizer(env.catalog(), env.representation(), env.config());
  Rng rng(config.seed);
  Rng init_rng(Rng::derive(config.seed, "a2c.init"));
  const std::size_t n_actions = env.catalog().size();

  Mlp actor = Mlp::initialized(layer_dims(featurizer.size(), net_config.hidden, n_actions),
                               net_config.activation, Activation::Softmax, init_rng);
  Mlp critic = Mlp::initialized(layer_dims(featurizer.size(), net_config.hidden, 1), net_config.activation,
                                Activation::Linear, init_rng);
  AdamState actor_adam = AdamState::for_net(actor, net_config.learning_rate);
  AdamState critic_adam = AdamState::for_net(critic, net_config.critic_learning_rate);
  MlpWorkspace actor_ws(actor), critic_ws(critic);
  MlpParams actor_grads = actor.zeros_like(), critic_grads = critic.zeros_like();
  A2cTrainStats local;
  local.reward_scale = scale;

  std::vector<double> features(featurizer.size()), next_features(featurizer.size());
  std::vector<double> pi(n_actions);
  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    State s = env.reset(sample_start(env, config.start_weights, rng));
    featurizer.encode(s, features);
    bool done = false;
    while (!done) {
      auto probs = actor_ws.forward(actor, features);
      std::copy(probs.begin(), probs.end(), pi.begin());
      double sum = 0.0, entropy = 0.0;
      for (double p : pi) {
        sum += p;
        if (p > 0.0) entropy -= p * std::log(p);
      }
      local.max_softmax_sum_error = std::max(local.max_softmax_sum_error, std::abs(sum - 1.0));
      local.final_entropy = entropy;
      const std::size_t a = rng.categorical(pi);

      auto out = env.step(s, env.catalog()[a], rng);
      featurizer.encode(out.next_state, next_features);
      const double r = out.reward_eur / scale;
      const double v_next = out.done ? 0.0 : critic_ws.forward(critic, next_features)[0];
      const double v = critic_ws.forward(critic, features)[0];
      const double td_target = r + gamma * v_next;
      const double advantage = td_target - v;

      critic_grads.fill(0.0);
      critic_ws.backward(critic, ValueRegressionLoss{td_target, 1.0}, critic_grads);
      actor_grads.fill(0.0);
      const double loss = actor_ws.backward(
          actor, PolicyGradientLoss{a, advantage, net_config.entropy_coef}, actor_grads);
      if (!std::isfinite(loss) || !std::isfinite(advantage))
        throw NumericalError("a2c: non-finite loss at update " + std::to_string(local.updates));
      adam_step(actor, actor_grads, actor_adam);
      adam_step(critic, critic_grads, critic_adam);
      ++local.updates;

      done = out.done;
      s = std::move(out.next_state);
      std::swap(features, next_features);
    }
  }
  if (stats) *stats = local;
  return A2cPolicy(std::move(actor), std::move(critic), std::move(featurizer), true);
}

// ---------------------------------------------------------------------------

JobId baseline_most_common(const Env& env, const State& state, Rng& rng) {
  const auto& catalog = env.catalog();
  std::vector<double> scores(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) scores[i] = env.probability(state, catalog[i]);
  return catalog[argmax_random_tie(scores, rng)];
}

JobId baseline_highest_expected_reward(const Env& env, const State& state, Rng& rng) {
  const auto& catalog = env.catalog();
  std::vector<double> scores(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i)
    scores[i] = env.probability(state, catalog[i]) * env.step_salary(catalog[i]);
  return catalog[argmax_random_tie(scores, rng)];
}

JobId GreedyMostCommonPolicy::act(const Env& env, const State& state, Rng& rng) const {
  return baseline_most_common(env, state, rng);
}

JobId GreedyHighestExpectedRewardPolicy::act(const Env& env, const State& state, Rng& rng) const {
  return baseline_highest_expected_reward(env, state, rng);
}

}  // namespace careerpath
