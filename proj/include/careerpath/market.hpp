#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace careerpath {

// An occupation x industry pair. Ordered occupation-major.
struct JobId {
  int occupation = 0;
  int industry = 0;

  friend auto operator<=>(const JobId&, const JobId&) = default;
  friend bool operator==(const JobId&, const JobId&) = default;
};

struct JobIdHash {
  std::size_t operator()(const JobId& j) const noexcept {
    return std::hash<std::int64_t>{}((static_cast<std::int64_t>(j.occupation) << 32) ^
                                     static_cast<std::uint32_t>(j.industry));
  }
};

std::string to_string(const JobId& job);

using Date = std::chrono::sys_days;

// Strict ISO-8601 calendar date (YYYY-MM-DD).
Date parse_date(std::string_view text);
std::string format_date(Date d);
inline long days_between(Date from, Date to) { return (to - from).count(); }

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MissingColumnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorkExperienceRecord {
  std::string employee_id;
  JobId job;
  Date start_date;
  Date end_date;

  long duration_days() const { return days_between(start_date, end_date); }
  friend bool operator==(const WorkExperienceRecord&, const WorkExperienceRecord&) = default;
};

struct Vacancy {
  JobId job;
  double annual_salary_eur = 0.0;
  friend bool operator==(const Vacancy&, const Vacancy&) = default;
};

enum class Outcome { Hired, Rejected };

struct ApplicationRecord {
  std::string candidate_id;
  Date application_date;
  JobId target_job;
  Outcome outcome = Outcome::Rejected;
  friend bool operator==(const ApplicationRecord&, const ApplicationRecord&) = default;
};

// Rows read from work_experience.csv. Rows with an empty required cell are not
// turned into records; their employee lands in `incomplete_employees`.
struct WorkExperienceTable {
  std::vector<WorkExperienceRecord> records;
  std::set<std::string> incomplete_employees;
};

struct MarketDataset {
  // Grouped by employee_id (ascending), each group sorted by start_date.
  std::vector<WorkExperienceRecord> experiences;
  std::vector<Vacancy> vacancies;
  std::vector<ApplicationRecord> applications;
  std::vector<JobId> job_catalog;  // sorted, unique
  std::set<std::string> incomplete_employees;

  friend bool operator==(const MarketDataset&, const MarketDataset&) = default;
};

// One employee's contiguous slice of MarketDataset::experiences.
struct EmployeeHistory {
  std::string_view employee_id;
  std::span<const WorkExperienceRecord> records;
};

std::vector<EmployeeHistory> employee_histories(const MarketDataset& dataset);
std::map<std::string, std::span<const WorkExperienceRecord>, std::less<>> history_index(
    const MarketDataset& dataset);

// Normalizes record order and rebuilds the catalog from every referenced job.
MarketDataset make_dataset(WorkExperienceTable experiences, std::vector<Vacancy> vacancies,
                           std::vector<ApplicationRecord> applications);

WorkExperienceTable load_work_experience(const std::filesystem::path& path);
std::vector<Vacancy> load_vacancies(const std::filesystem::path& path);
std::vector<ApplicationRecord> load_applications(const std::filesystem::path& path);
MarketDataset load_dataset(const std::filesystem::path& dir);

void save_work_experience(const std::filesystem::path& path,
                          std::span<const WorkExperienceRecord> records);
void save_vacancies(const std::filesystem::path& path, std::span<const Vacancy> vacancies);
void save_applications(const std::filesystem::path& path,
                       std::span<const ApplicationRecord> applications);
void save_dataset(const std::filesystem::path& dir, const MarketDataset& dataset);

inline constexpr long kMinRecordDays = 7;
inline constexpr std::size_t kMaxRecordsPerEmployee = 50;
inline constexpr std::size_t kDefaultPlausibleJobs = 142;

// Drops incomplete employees, records shorter than a week, and employees with
// more than fifty remaining records (plus the applications of dropped
// employees). Idempotent.
MarketDataset preprocess(const MarketDataset& dataset);

struct PlausibleJobs {
  std::vector<JobId> jobs;  // descending by record count, ties by JobId
  std::vector<std::size_t> counts;
  bool fewer_than_requested = false;
};

PlausibleJobs plausible_jobs(const MarketDataset& dataset, std::size_t k = kDefaultPlausibleJobs);

// Location/scale of a lognormal matching a target median and mean.
struct LognormalParams {
  double mu = 0.0;
  double sigma = 0.0;
};

LognormalParams lognormal_from_median_mean(double median, double mean);

struct SynthConfig {
  std::size_t n_employees = 2000;
  int n_occupations = 20;
  int n_industries = 10;

  double duration_median_days = 95.0;
  double duration_mean_days = 161.0;
  double salary_median_eur = 38000.0;
  double salary_mean_eur = 42000.0;

  // Records per employee: 1 + geometric extra records with this mean, capped.
  double records_mean = 3.0;
  std::size_t records_cap = kMaxRecordsPerEmployee;

  // Log salary offset of a job: occupation term + industry term, each
  // U(-spread, spread), centered under vacancy popularity.
  double occupation_salary_spread = 0.4;
  double industry_salary_spread = 0.03;
  // Executive pay tail: among top-decile jobs with at least median popularity,
  // the k-th best-paid (k = 0, 1, ...) earns premium^(4^-k) times its base
  // salary. 1 disables.
  double senior_salary_premium = 1.0;
  // Zipf exponent of occupation/industry popularity.
  double popularity_exponent = 0.8;
  std::size_t n_vacancies = 20000;

  // Ground-truth hire probability: logistic in saturated tenure features.
  double hire_intercept = -3.2;
  double hire_occupation_weight = 2.3;
  double hire_industry_weight = 1.2;
  double hire_total_weight = 0.5;
  double tenure_scale_days = 60.0;

  // Job search target mix; the remainder are popularity-random targets.
  double search_self = 0.15;
  double search_same_occupation = 0.35;
  double search_same_industry = 0.25;
  // Probability that a random, unrelated top-decile target is actually applied to.
  double unqualified_senior_apply_rate = 0.1;
  std::size_t max_search_attempts = 12;

  // Probability that a top-decile hire loses the prior records in its
  // occupation (and the earlier application log).
  double senior_missing_history_bias = 0.0;
  std::uint64_t seed = 42;

  void validate() const;  // throws std::invalid_argument
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Ground truth kept alongside a generated dataset (never persisted as data).
struct SynthTruth {
  std::vector<JobId> jobs;                        // every occupation x industry
  std::map<JobId, double> salary_factor;          // multiplicative, centered
  std::map<JobId, double> popularity;             // sums to 1
  std::set<JobId> top_decile;                     // by salary factor
  std::size_t senior_hires = 0;
  std::size_t senior_hires_history_deleted = 0;
  std::vector<double> sampled_durations_days;     // pre-filter draws
};

// Tenure features of a history truncated at `cutoff` (records starting on or
// after the cutoff are ignored, ongoing records are clipped).
struct TenureSummary {
  double total_days = 0.0;
  double occupation_days = 0.0;
  double industry_days = 0.0;
  std::size_t distinct_jobs = 0;
  // Days between the end of the most recent record in the target occupation
  // and the cutoff; negative when never held.
  double days_since_occupation = -1.0;
};

TenureSummary summarize_tenure(std::span<const WorkExperienceRecord> history, JobId target,
                               Date cutoff);

double ground_truth_hire_probability(const SynthConfig& config, const TenureSummary& tenure);

MarketDataset generate_synthetic(const SynthConfig& config, SynthTruth* truth = nullptr);

}  // namespace careerpath
