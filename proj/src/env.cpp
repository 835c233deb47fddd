#include "careerpath/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>

namespace careerpath {

void EnvConfig::validate() const {
  if (horizon_steps < 1) throw std::invalid_argument("env.horizon_steps must be positive");
  if (step_months < 1) throw std::invalid_argument("env.step_months must be positive");
  if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("env.discount must be in (0, 1]");
}

namespace {

constexpr std::size_t kMaxCacheEntries = 1'000'000;

std::unordered_map<JobId, std::size_t, JobIdHash> make_index(const std::vector<JobId>& catalog) {
  std::unordered_map<JobId, std::size_t, JobIdHash> index;
  for (std::size_t i = 0; i < catalog.size(); ++i)
    if (!index.emplace(catalog[i], i).second)
      throw std::invalid_argument("catalog contains duplicate job " + to_string(catalog[i]));
  return index;
}

}  // namespace

TableTransitions::TableTransitions(std::vector<JobId> catalog, std::vector<double> row_major)
    : catalog_(std::move(catalog)), index_(make_index(catalog_)), n_(catalog_.size()), p_(std::move(row_major)) {
  if (p_.size() != n_ * n_) throw std::invalid_argument("TableTransitions: matrix size mismatch");
  for (double p : p_)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("TableTransitions: probability outside [0, 1]");
}

TableTransitions TableTransitions::constant(std::vector<JobId> catalog, double p) {
  const std::size_t n = catalog.size();
  return TableTransitions(std::move(catalog), std::vector<double>(n * n, p));
}

double TableTransitions::probability(const State& state, JobId action) const {
  auto from = index_.find(state.current_job);
  auto to = index_.find(action);
  if (from == index_.end() || to == index_.end())
    throw std::out_of_range("TableTransitions: job outside catalog");
  return p_[from->second * n_ + to->second];
}

ForestTransitions::ForestTransitions(std::shared_ptr<const TransitionModel> model, EnvConfig config)
    : model_(std::move(model)), step_days_(config.step_days()), index_(make_index(model_->catalog())) {
  if (model_->representation() != StateRepresentation::LastJob) return;
  const auto& catalog = model_->catalog();
  const std::size_t n = catalog.size();
  last_job_table_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Stint current{catalog[i], 0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j)
      last_job_table_[i * n + j] = model_->probability(std::span<const Stint>(&current, 1), catalog[j]);
  }
}

double ForestTransitions::probability(const State& state, JobId action) const {
  if (!last_job_table_.empty()) {
    auto from = index_.find(state.current_job);
    auto to = index_.find(action);
    if (from == index_.end() || to == index_.end())
      throw std::out_of_range("transition_probability: job outside catalog");
    return last_job_table_[from->second * index_.size() + to->second];
  }
  std::string key;
  key.reserve((state.history.size() + 1) * 3 * sizeof(int));
  auto put = [&key](int v) { key.append(reinterpret_cast<const char*>(&v), sizeof v); };
  for (const auto& h : state.history) {
    put(h.job.occupation);
    put(h.job.industry);
    put(h.steps);
  }
  put(action.occupation);
  put(action.industry);
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double p = model_->probability(state_stints(state, step_days_), action);
  std::unique_lock lock(cache_mutex_);
  if (cache_.size() >= kMaxCacheEntries) cache_.clear();
  cache_.emplace(std::move(key), p);
  return p;
}

std::vector<Stint> state_stints(const State& state, double step_days) {
  std::vector<Stint> out(state.history.size());
  double since = 0.0;
  for (std::size_t k = state.history.size(); k > 0; --k) {
    const auto& h = state.history[k - 1];
    out[k - 1] = {h.job, h.steps * step_days, since};
    since += h.steps * step_days;
  }
  return out;
}

Env::Env(EnvConfig config, std::vector<JobId> catalog, std::shared_ptr<const TransitionSource> transitions,
         std::map<JobId, double> annual_salary, StateRepresentation repr)
    : config_(config),
      catalog_(std::move(catalog)),
      index_(make_index(catalog_)),
      transitions_(std::move(transitions)),
      repr_(repr) {
  config_.validate();
  if (catalog_.empty()) throw std::invalid_argument("Env: empty catalog");
  if (!transitions_) throw std::invalid_argument("Env: missing transition source");
  annual_.reserve(catalog_.size());
  for (const auto& job : catalog_) {
    auto it = annual_salary.find(job);
    if (it == annual_salary.end()) throw std::invalid_argument("Env: no salary for " + to_string(job));
    if (!(it->second > 0.0) || !std::isfinite(it->second))
      throw std::invalid_argument("Env: salary must be positive for " + to_string(job));
    annual_.push_back(it->second);
  }
}

std::size_t Env::index_of(JobId job) const {
  auto it = index_.find(job);
  if (it == index_.end()) throw std::out_of_range("job " + to_string(job) + " outside catalog");
  return it->second;
}

double Env::max_step_salary() const {
  return *std::max_element(annual_.begin(), annual_.end()) * config_.step_months / 12.0;
}

double Env::min_step_salary() const {
  return *std::min_element(annual_.begin(), annual_.end()) * config_.step_months / 12.0;
}

Env Env::with_horizon(int horizon_steps) const {
  Env copy = *this;
  copy.config_.horizon_steps = horizon_steps;
  copy.config_.validate();
  return copy;
}

State Env::reset(JobId start_job) const {
  index_of(start_job);
  return State{start_job, {{start_job, 0}}, 0};
}

StepOutcome Env::step(const State& state, JobId action, Rng& rng) const {
  if (state.t >= config_.horizon_steps) throw std::logic_error("step: episode already done");
  index_of(action);
  const double p = transitions_->probability(state, action);
  StepOutcome out;
  out.hired = rng.uniform() < p;
  out.next_state = state;
  State& next = out.next_state;
  if (out.hired && action != state.current_job) {
    next.current_job = action;
    next.history.push_back({action, 1});
  } else {
    next.history.back().steps += 1;
  }
  next.t = state.t + 1;
  out.reward_eur = step_salary(next.current_job);
  out.done = next.t == config_.horizon_steps;
  return out;
}

double EpisodeTrace::total_reward() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

EpisodeTrace rollout(const Env& env, const Policy& policy, JobId start_job, Rng& rng, int steps) {
  if (steps < 0) steps = env.config().horizon_steps;
  std::optional<Env> extended;
  if (steps > env.config().horizon_steps) extended.emplace(env.with_horizon(steps));
  const Env* run = extended ? &*extended : &env;
  EpisodeTrace trace;
  State s = run->reset(start_job);
  trace.states.push_back(s);
  for (int k = 0; k < steps; ++k) {
    const JobId a = policy.act(*run, s, rng);
    auto out = run->step(s, a, rng);
    trace.actions.push_back(a);
    trace.rewards.push_back(out.reward_eur);
    trace.hired.push_back(out.hired);
    s = std::move(out.next_state);
    trace.states.push_back(s);
  }
  return trace;
}

void write_traces_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "episode,step,occupation,industry,action_occupation,action_industry,hired,reward_eur\n";
  char buf[64];
  for (std::size_t e = 0; e < traces.size(); ++e) {
    const auto& tr = traces[e];
    for (std::size_t k = 0; k < tr.actions.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.2f", tr.rewards[k]);
      out << e << ',' << k << ',' << tr.states[k].current_job.occupation << ','
          << tr.states[k].current_job.industry << ',' << tr.actions[k].occupation << ','
          << tr.actions[k].industry << ',' << (tr.hired[k] ? 1 : 0) << ',' << buf << '\n';
    }
  }
}

}  // namespace careerpath
