#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "careerpath/persist.hpp"

namespace careerpath {

enum class Algorithm { Sarsa, QLearning, Dqn, A2c, GreedyCommon, GreedyHer };
std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);
bool is_tabular(Algorithm a);

enum class StartDistribution { Uniform, Empirical };

// Invalid experiment configuration; `field` is the dotted path of the culprit.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct EvalSettings {
  std::size_t n_sample = 20000;
  std::size_t n_permutations = 10000;
  std::size_t n_episodes_distribution = 1000;
  // Observed paths are cut to this many months (the env horizon at defaults); 0 keeps all.
  int max_months = 120;
  StartDistribution distribution_start = StartDistribution::Empirical;
  unsigned threads = 0;
  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

struct ExperimentConfig {
  SynthConfig synth;
  StateRepresentation representation = StateRepresentation::LastJob;
  std::size_t plausible_jobs = kDefaultPlausibleJobs;
  ForestParams transition_forest;
  ForestParams salary_forest;
  EnvConfig env;
  TrainConfig train;
  NetConfig net;
  // Training starts mix uniform (0) and observed start-job frequencies (1).
  double train_start_empirical = 0.0;
  Algorithm algorithm = Algorithm::QLearning;
  EvalSettings eval;
  std::string output_dir = "run";
  std::uint64_t master_seed = 0;

  void validate() const;  // throws ConfigError
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

Json to_json(const ExperimentConfig& c);
// Unknown keys and type mismatches are ConfigErrors naming the field.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Child seeds of the master seed, one per named stream.
struct SeedPlan {
  std::uint64_t synth = 0;
  std::uint64_t fit_transition = 0;
  std::uint64_t fit_salary = 0;
  std::uint64_t train = 0;
  std::uint64_t eval = 0;
  static SeedPlan derive(std::uint64_t master_seed);
};

enum class Stage { Generate, Fit, Train, Evaluate, Distribution };
std::string_view to_string(Stage s);

using LogFn = std::function<void(std::string_view)>;

// Artifact layout under output_dir.
struct ArtifactPaths {
  std::filesystem::path root;
  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path transition_model() const { return root / "models" / "transition.json"; }
  std::filesystem::path salary_model() const { return root / "models" / "salary.json"; }
  std::filesystem::path policy() const { return root / "policy" / "policy.json"; }
  std::filesystem::path training_log() const { return root / "policy" / "training.json"; }
  std::filesystem::path comparison_csv() const { return root / "reports" / "comparison.csv"; }
  std::filesystem::path comparison_txt() const { return root / "reports" / "comparison.txt"; }
  std::filesystem::path distribution_csv() const { return root / "reports" / "distribution.csv"; }
  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
};

// Runs one stage, reading earlier stages' artifacts from disk, then refreshes
// the manifest. A failing stage leaves earlier artifacts untouched.
void run_stage(const ExperimentConfig& config, Stage stage, const LogFn& log = {});
// All stages in order.
void run_pipeline(const ExperimentConfig& config, const LogFn& log = {});

void write_manifest(const ExperimentConfig& config);

// Loaded environment and its models.
struct LoadedEnv {
  std::shared_ptr<const TransitionModel> transition;
  std::shared_ptr<const SalaryModel> salary;
  std::shared_ptr<const Env> env;
};
LoadedEnv load_env(const ArtifactPaths& paths, const EnvConfig& env_config);

struct RecommendationStep {
  int step = 0;
  JobId job;     // held before the application
  JobId action;  // recommended application
  double hire_probability = 0.0;
  bool hired = false;  // most likely outcome
  double reward_eur = 0.0;
  double expected_reward_eur = 0.0;  // under the learned transition probabilities
};

struct Recommendation {
  std::vector<RecommendationStep> steps;
  double projected_income_eur = 0.0;  // along the most likely path
  double expected_income_eur = 0.0;
  std::string method;  // "exact" or "monte_carlo"
  std::size_t simulations = 0;
};

// Env state after `history` (sorted records; last one is the current job).
State state_from_history(const Env& env, std::span<const WorkExperienceRecord> history);

// Greedy rollout taking the more likely outcome at each step, plus the
// expected income: exact propagation over jobs under LastJob, Monte Carlo
// (`simulations` rollouts) under FullHistory.
Recommendation recommend(const Env& env, const Policy& policy, std::span<const WorkExperienceRecord> history,
                         int horizon_steps, std::uint64_t seed, std::size_t simulations = 10000);

// Mean total reward of `simulations` rollouts from the same history.
double monte_carlo_income(const Env& env, const Policy& policy, std::span<const WorkExperienceRecord> history,
                          int horizon_steps, std::uint64_t seed, std::size_t simulations);

void write_recommendation_csv(const std::filesystem::path& path, const Recommendation& rec);
std::string recommendation_text(const Recommendation& rec);

// Policy and env from a pipeline output directory, then recommend().
Recommendation recommend_from_artifacts(const ExperimentConfig& config,
                                        const std::filesystem::path& history_csv, int horizon_steps);

}  // namespace careerpath
