#include "careerpath/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace careerpath {

std::string_view to_string(StateRepresentation r) {
  return r == StateRepresentation::LastJob ? "last_job" : "full_history";
}

StateRepresentation parse_representation(std::string_view text) {
  if (text == "last_job") return StateRepresentation::LastJob;
  if (text == "full_history") return StateRepresentation::FullHistory;
  throw std::invalid_argument("unknown state representation '" + std::string(text) +
                              "' (expected last_job or full_history)");
}

std::size_t feature_count(StateRepresentation r) {
  return r == StateRepresentation::LastJob ? kLastJobFeatureCount : kFullHistoryFeatureCount;
}

std::vector<Stint> stints_before(std::span<const WorkExperienceRecord> history, Date cutoff) {
  std::vector<Stint> out;
  for (const auto& r : history) {
    if (!(r.start_date < cutoff)) continue;
    const Date end = std::min(r.end_date, cutoff);
    out.push_back({r.job, static_cast<double>(days_between(r.start_date, end)),
                   static_cast<double>(days_between(end, cutoff))});
  }
  return out;
}

void encode_state_action_into(std::span<const Stint> history, JobId target,
                              StateRepresentation repr, std::span<double> out) {
  if (out.size() != feature_count(repr)) throw std::invalid_argument("encode: output width mismatch");
  if (history.empty() && repr == StateRepresentation::LastJob)
    throw std::invalid_argument("encode: LastJob representation needs a nonempty history");

  const Stint* current = history.empty() ? nullptr : &history.back();
  out[0] = current ? current->job.occupation : kNoJobCode;
  out[1] = current ? current->job.industry : kNoJobCode;
  out[2] = target.occupation;
  out[3] = target.industry;
  out[4] = current && current->job.occupation == target.occupation ? 1.0 : 0.0;
  out[5] = current && current->job.industry == target.industry ? 1.0 : 0.0;
  if (repr == StateRepresentation::LastJob) return;

  double total = 0.0, occupation = 0.0, industry = 0.0;
  double since = kNeverHeldDays;
  std::set<JobId> distinct;
  for (const auto& s : history) {
    total += s.days;
    if (s.job.occupation == target.occupation) {
      occupation += s.days;
      since = std::min(since, s.days_since_end);
    }
    if (s.job.industry == target.industry) industry += s.days;
    distinct.insert(s.job);
  }
  out[6] = total;
  out[7] = occupation;
  out[8] = industry;
  out[9] = static_cast<double>(distinct.size());
  out[10] = since;
}

std::vector<double> encode_state_action(std::span<const Stint> history, JobId target,
                                        StateRepresentation repr) {
  std::vector<double> out(feature_count(repr));
  encode_state_action_into(history, target, repr, out);
  return out;
}

std::vector<double> encode_state_action(std::span<const WorkExperienceRecord> history, JobId target,
                                        StateRepresentation repr) {
  Date cutoff = history.empty() ? Date{} : history.front().end_date;
  for (const auto& r : history) cutoff = std::max(cutoff, r.end_date);
  // The last record must count, so measure one day past its end.
  auto stints = stints_before(history, cutoff + std::chrono::days{1});
  for (auto& s : stints) s.days_since_end = std::max(0.0, s.days_since_end - 1.0);
  return encode_state_action(stints, target, repr);
}

TransitionTrainingSet build_transition_training_set(const MarketDataset& dataset,
                                                    StateRepresentation repr) {
  TransitionTrainingSet out;
  out.features = FeatureMatrix(feature_count(repr));
  const auto index = history_index(dataset);
  std::vector<double> row(feature_count(repr));
  for (const auto& a : dataset.applications) {
    auto it = index.find(a.candidate_id);
    if (it == index.end()) {
      ++out.skipped_unknown_candidate;
      continue;
    }
    const auto stints = stints_before(it->second, a.application_date);
    if (stints.empty()) {
      if (repr == StateRepresentation::LastJob) {
        ++out.skipped_empty_history;
        continue;
      }
      ++out.zero_history_rows;
    }
    encode_state_action_into(stints, a.target_job, repr, row);
    out.features.push_row(row);
    out.labels.push_back(a.outcome == Outcome::Hired ? 1 : 0);
  }
  return out;
}

TransitionModel::TransitionModel(StateRepresentation repr, ForestClassifier classifier,
                                 std::vector<JobId> catalog)
    : repr_(repr), classifier_(std::move(classifier)), catalog_(std::move(catalog)) {
  std::sort(catalog_.begin(), catalog_.end());
  catalog_.erase(std::unique(catalog_.begin(), catalog_.end()), catalog_.end());
  if (classifier_.n_features() != feature_count(repr_))
    throw std::invalid_argument("TransitionModel: classifier width does not match representation");
}

TransitionModel TransitionModel::fit(const MarketDataset& dataset, StateRepresentation repr,
                                     std::vector<JobId> catalog, const ForestParams& params,
                                     TransitionTrainingSet* diagnostics) {
  auto training = build_transition_training_set(dataset, repr);
  if (training.features.empty())
    throw std::invalid_argument("TransitionModel::fit: no usable application rows");
  auto classifier = fit_classifier(training.features, training.labels, params);
  if (diagnostics) *diagnostics = std::move(training);
  return TransitionModel(repr, std::move(classifier), std::move(catalog));
}

bool TransitionModel::in_catalog(JobId job) const {
  return std::binary_search(catalog_.begin(), catalog_.end(), job);
}

double TransitionModel::probability(std::span<const Stint> history, JobId action) const {
  if (!in_catalog(action))
    throw std::out_of_range("transition_probability: action " + to_string(action) + " outside catalog");
  double buf[kFullHistoryFeatureCount];
  std::span<double> row(buf, feature_count(repr_));
  encode_state_action_into(history, action, repr_, row);
  return classifier_.predict_proba(row);
}

double TransitionModel::probability(std::span<const WorkExperienceRecord> history, JobId action) const {
  if (!in_catalog(action))
    throw std::out_of_range("transition_probability: action " + to_string(action) + " outside catalog");
  return classifier_.predict_proba(encode_state_action(history, action, repr_));
}

// ---------------------------------------------------------------------------

std::vector<double> encode_job(JobId job) {
  return {static_cast<double>(job.occupation), static_cast<double>(job.industry)};
}

SalaryModel::SalaryModel(ForestRegressor regressor, std::vector<JobId> catalog)
    : regressor_(std::move(regressor)) {
  for (const auto& job : catalog) {
    const double v = regressor_.predict_value(encode_job(job));
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::runtime_error("SalaryModel: non-positive salary predicted for " + to_string(job));
    table_[job] = v;
  }
}

double SalaryModel::annual(JobId job) const {
  if (auto it = table_.find(job); it != table_.end()) return it->second;
  return regressor_.predict_value(encode_job(job));
}

double SalaryModel::quarterly(JobId job) const {
  auto it = table_.find(job);
  if (it == table_.end()) throw std::out_of_range("quarterly_salary: " + to_string(job) + " outside catalog");
  return it->second / 4.0;
}

SalaryModel fit_salary_model(std::span<const Vacancy> vacancies, std::vector<JobId> catalog,
                             const ForestParams& params) {
  if (vacancies.empty()) throw std::invalid_argument("fit_salary_model: no vacancies");
  FeatureMatrix x(2);
  std::vector<double> y;
  y.reserve(vacancies.size());
  for (const auto& v : vacancies) {
    x.push_row(encode_job(v.job));
    y.push_back(v.annual_salary_eur);
  }
  return SalaryModel(fit_regressor(x, y, params), std::move(catalog));
}

}  // namespace careerpath
