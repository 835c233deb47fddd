#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "careerpath/agents.hpp"
#include "careerpath/env.hpp"
#include "careerpath/market.hpp"

namespace careerpath {

// Average Gregorian month.
inline constexpr double kDaysPerMonth = 30.4375;

struct ObservedPath {
  std::string employee_id;
  JobId start_job;
  int duration_months = 0;
  std::vector<double> monthly_income;
  // Job that accounts for most of each month (replay and diagnostics).
  std::vector<JobId> monthly_job;
};

using MonthlySalaryFn = std::function<double(JobId)>;

// Month-by-month income from the first start to the last end. Concurrent jobs
// earn their mean monthly salary; gaps keep paying the most recently ended
// job. `max_months` > 0 truncates the series.
ObservedPath monthly_income_series(std::span<const WorkExperienceRecord> records,
                                   const MonthlySalaryFn& monthly_salary, int max_months = 0);

double factual_income(const ObservedPath& path);

// Rollout of ceil(M / step_months) steps from the path's start job; each month
// earns the monthly salary of the job held after that step's application.
double generate_counterfactual(const Policy& policy, const Env& env, const ObservedPath& path, Rng& rng);

struct ComparisonReport {
  std::string model;
  double mean_fi_eur = 0.0;
  double mean_cfi_eur = 0.0;
  double change_pct = 0.0;
  double p_value = 1.0;
  double gainers_pct = 0.0;
  double mean_gain_pct = 0.0;
  double losers_pct = 0.0;
  double mean_loss_pct = 0.0;
  std::size_t n_paths = 0;
  std::size_t skipped_paths = 0;  // start job outside the env catalog
};

struct CompareConfig {
  std::size_t n_sample = 20000;
  std::size_t n_permutations = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Seeded sample without replacement (sorted indices); all indices when the
// population is not larger than n.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

ComparisonReport compare_policies(const Policy& policy, const Env& env, std::span<const ObservedPath> paths,
                                  const CompareConfig& config);

// Two-sided label-permutation test on the difference in means. Exhaustive
// when the number of label assignments is at most n_permutations; otherwise
// Monte Carlo counting the identity permutation.
double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t n_permutations,
                        Rng& rng);
double permutation_test_exhaustive(std::span<const double> a, std::span<const double> b);

std::string report_csv_header();
std::string report_csv_row(const ComparisonReport& r);
void write_reports_csv(const std::filesystem::path& path, std::span<const ComparisonReport> reports);
std::string report_text(const ComparisonReport& r);

struct JobCount {
  JobId job;
  std::size_t count = 0;
};

struct DistributionReport {
  std::string model;
  std::size_t n_episodes = 0;
  std::vector<JobCount> start;  // full tables, count desc then job asc
  std::vector<JobCount> final;

  std::vector<JobCount> top_start(std::size_t k = 12) const;
  std::vector<JobCount> top_final(std::size_t k = 12) const;
  double final_share(JobId job) const;
};

// Episodes start from `start_weights` over the env catalog (uniform if empty).
DistributionReport distribution_report(const Policy& policy, const Env& env, std::size_t n_episodes,
                                       const std::vector<double>& start_weights, std::uint64_t seed);
void write_distribution_csv(const std::filesystem::path& path, const DistributionReport& report,
                            std::size_t top_k = 12);

// Explicit finite-horizon MDP. p[(s * A + a) * S + s'] and r likewise.
struct TinyMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  int horizon = 0;
  double gamma = 1.0;
  std::vector<double> p;
  std::vector<double> r;

  void validate() const;
  double prob(std::size_t s, std::size_t a, std::size_t s2) const { return p[(s * n_actions + a) * n_states + s2]; }
  double reward(std::size_t s, std::size_t a, std::size_t s2) const {
    return r[(s * n_actions + a) * n_states + s2];
  }
};

struct OracleResult {
  // q[t][s * A + a], v[t][s], policy[t][s]; t = 0..horizon-1 (v has horizon+1 rows).
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<std::size_t>> policy;

  double q_at(int t, std::size_t s, std::size_t a, std::size_t n_actions) const { return q[t][s * n_actions + a]; }
};

OracleResult value_iteration_oracle(const TinyMdp& mdp);

// Expected return of a time-indexed deterministic policy (policy[t][s]).
std::vector<double> evaluate_policy(const TinyMdp& mdp, const std::vector<std::vector<std::size_t>>& policy);

// Job-market env with history-independent transitions as an explicit MDP:
// applying to a != s moves to a with p(s, a) and stays otherwise.
TinyMdp tiny_mdp_from_env(const Env& env);

}  // namespace careerpath
