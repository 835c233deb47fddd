#pragma once

#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "careerpath/forest.hpp"
#include "careerpath/market.hpp"

namespace careerpath {

enum class StateRepresentation { LastJob, FullHistory };

std::string_view to_string(StateRepresentation r);
StateRepresentation parse_representation(std::string_view text);

// One contiguous period in a job, relative to a reference time point.
struct Stint {
  JobId job;
  double days = 0.0;
  double days_since_end = 0.0;  // 0 for the ongoing stint
};

// Records starting before `cutoff`, clipped at it, in start order.
std::vector<Stint> stints_before(std::span<const WorkExperienceRecord> history, Date cutoff);

inline constexpr std::size_t kLastJobFeatureCount = 6;
inline constexpr std::size_t kFullHistoryFeatureCount = 11;
// Recency value when the target occupation was never held.
inline constexpr double kNeverHeldDays = 100000.0;
// Current-job code when there is no history at all.
inline constexpr double kNoJobCode = -1.0;

std::size_t feature_count(StateRepresentation r);

// Layout (LastJob): current occupation, current industry, target occupation,
// target industry, same-occupation flag, same-industry flag.
// FullHistory appends: total tenure days, tenure days in target occupation,
// tenure days in target industry, distinct jobs held, days since last held the
// target occupation (kNeverHeldDays if never).
std::vector<double> encode_state_action(std::span<const Stint> history, JobId target,
                                        StateRepresentation repr);
void encode_state_action_into(std::span<const Stint> history, JobId target,
                              StateRepresentation repr, std::span<double> out);

// Full record list, measured at the end of the last record.
std::vector<double> encode_state_action(std::span<const WorkExperienceRecord> history, JobId target,
                                        StateRepresentation repr);

struct TransitionTrainingSet {
  FeatureMatrix features;
  std::vector<int> labels;
  std::size_t skipped_unknown_candidate = 0;
  std::size_t skipped_empty_history = 0;  // LastJob only
  std::size_t zero_history_rows = 0;      // FullHistory only
};

// One row per application; history strictly before the application date.
TransitionTrainingSet build_transition_training_set(const MarketDataset& dataset,
                                                    StateRepresentation repr);

class TransitionModel {
 public:
  TransitionModel(StateRepresentation repr, ForestClassifier classifier, std::vector<JobId> catalog);

  static TransitionModel fit(const MarketDataset& dataset, StateRepresentation repr,
                             std::vector<JobId> catalog, const ForestParams& params,
                             TransitionTrainingSet* diagnostics = nullptr);

  double probability(std::span<const Stint> history, JobId action) const;
  double probability(std::span<const WorkExperienceRecord> history, JobId action) const;

  StateRepresentation representation() const { return repr_; }
  const ForestClassifier& classifier() const { return classifier_; }
  const std::vector<JobId>& catalog() const { return catalog_; }
  bool in_catalog(JobId job) const;

 private:
  StateRepresentation repr_;
  ForestClassifier classifier_;
  std::vector<JobId> catalog_;  // sorted
};

inline double transition_probability(const TransitionModel& model,
                                      std::span<const WorkExperienceRecord> history, JobId action) {
  return model.probability(history, action);
}

class SalaryModel {
 public:
  SalaryModel(ForestRegressor regressor, std::vector<JobId> catalog);

  // Annual salary: table entry for catalog jobs, regressor prediction otherwise.
  double annual(JobId job) const;
  double monthly(JobId job) const { return annual(job) / 12.0; }
  // Catalog jobs only.
  double quarterly(JobId job) const;

  const std::map<JobId, double>& table() const { return table_; }
  const ForestRegressor& regressor() const { return regressor_; }

 private:
  ForestRegressor regressor_;
  std::map<JobId, double> table_;
};

std::vector<double> encode_job(JobId job);

SalaryModel fit_salary_model(std::span<const Vacancy> vacancies, std::vector<JobId> catalog,
                             const ForestParams& params);

inline double quarterly_salary(const SalaryModel& model, JobId job) { return model.quarterly(job); }

}  // namespace careerpath
