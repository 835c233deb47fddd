#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "careerpath/market.hpp"
#include "careerpath/models.hpp"
#include "careerpath/rng.hpp"

namespace careerpath {

struct EnvConfig {
  int horizon_steps = 40;
  int step_months = 3;
  double discount = 1.0;

  void validate() const;
  double step_days() const { return step_months * 365.25 / 12.0; }
  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct HeldJob {
  JobId job;
  int steps = 0;
  friend bool operator==(const HeldJob&, const HeldJob&) = default;
};

struct State {
  JobId current_job;
  std::vector<HeldJob> history;  // last entry holds current_job
  int t = 0;
  friend bool operator==(const State&, const State&) = default;
};

struct StepOutcome {
  State next_state;
  double reward_eur = 0.0;
  bool hired = false;
  bool done = false;
};

// Hire probability for applying to `action` from `state`.
class TransitionSource {
 public:
  virtual ~TransitionSource() = default;
  virtual double probability(const State& state, JobId action) const = 0;
};

// Explicit catalog x catalog probability matrix (history-independent).
class TableTransitions final : public TransitionSource {
 public:
  TableTransitions(std::vector<JobId> catalog, std::vector<double> row_major);
  static TableTransitions constant(std::vector<JobId> catalog, double p);

  double probability(const State& state, JobId action) const override;
  double at(std::size_t from, std::size_t to) const { return p_[from * n_ + to]; }

 private:
  std::vector<JobId> catalog_;
  std::unordered_map<JobId, std::size_t, JobIdHash> index_;
  std::size_t n_;
  std::vector<double> p_;
};

// Learned transition model. LastJob probabilities are materialized once.
class ForestTransitions final : public TransitionSource {
 public:
  ForestTransitions(std::shared_ptr<const TransitionModel> model, EnvConfig config);

  double probability(const State& state, JobId action) const override;
  const TransitionModel& model() const { return *model_; }

 private:
  std::shared_ptr<const TransitionModel> model_;
  double step_days_;
  std::unordered_map<JobId, std::size_t, JobIdHash> index_;
  std::vector<double> last_job_table_;
  // FullHistory memo keyed by (history, action); rollouts revisit the same states often.
  mutable std::shared_mutex cache_mutex_;
  mutable std::unordered_map<std::string, double> cache_;
};

// Env state history as dated stints (step_days per held step).
std::vector<Stint> state_stints(const State& state, double step_days);

// Episodic job market: fixed catalog, stochastic hires, salary rewards.
class Env {
 public:
  Env(EnvConfig config, std::vector<JobId> catalog, std::shared_ptr<const TransitionSource> transitions,
      std::map<JobId, double> annual_salary, StateRepresentation repr);

  State reset(JobId start_job) const;
  StepOutcome step(const State& state, JobId action, Rng& rng) const;

  double probability(const State& state, JobId action) const {
    return transitions_->probability(state, action);
  }

  const EnvConfig& config() const { return config_; }
  const std::vector<JobId>& catalog() const { return catalog_; }
  StateRepresentation representation() const { return repr_; }
  std::size_t index_of(JobId job) const;  // throws when outside catalog
  bool in_catalog(JobId job) const { return index_.contains(job); }
  double annual_salary(JobId job) const { return annual_[index_of(job)]; }
  double quarterly_salary(JobId job) const { return annual_salary(job) / 4.0; }
  double step_salary(JobId job) const { return annual_salary(job) * config_.step_months / 12.0; }
  double monthly_salary(JobId job) const { return annual_salary(job) / 12.0; }
  double max_step_salary() const;
  double min_step_salary() const;

  // Same dynamics with a different horizon.
  Env with_horizon(int horizon_steps) const;

 private:
  EnvConfig config_;
  std::vector<JobId> catalog_;
  std::unordered_map<JobId, std::size_t, JobIdHash> index_;
  std::shared_ptr<const TransitionSource> transitions_;
  std::vector<double> annual_;
  StateRepresentation repr_;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual JobId act(const Env& env, const State& state, Rng& rng) const = 0;
  virtual std::string name() const = 0;
};

struct EpisodeTrace {
  std::vector<State> states;  // states[k] is the state before step k; back() is final
  std::vector<JobId> actions;
  std::vector<double> rewards;
  std::vector<bool> hired;

  double total_reward() const;
};

// Runs `steps` steps (horizon when negative) from reset(start_job).
EpisodeTrace rollout(const Env& env, const Policy& policy, JobId start_job, Rng& rng, int steps = -1);

void write_traces_csv(const std::filesystem::path& path, std::span<const EpisodeTrace> traces);

}  // namespace careerpath
