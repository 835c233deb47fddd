#include "careerpath/market.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "careerpath/rng.hpp"

namespace careerpath {

std::string to_string(const JobId& job) {
  return std::to_string(job.occupation) + "/" + std::to_string(job.industry);
}

Date parse_date(std::string_view text) {
  using namespace std::chrono;
  auto bad = [&] { return std::invalid_argument("invalid ISO-8601 date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::string_view part, auto& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || p != part.data() + part.size()) throw bad();
  };
  num(text.substr(0, 4), y);
  num(text.substr(5, 2), m);
  num(text.substr(8, 2), d);
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw bad();
  return sys_days{ymd};
}

std::string format_date(Date d) {
  using namespace std::chrono;
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV plumbing

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(pos)));
      break;
    }
    cells.push_back(trim(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return cells;
}

class CsvReader {
 public:
  CsvReader(const std::filesystem::path& path, std::vector<std::string> required)
      : path_(path.string()), in_(path) {
    if (!in_) throw std::runtime_error("cannot open " + path_);
    std::string header;
    if (!std::getline(in_, header)) throw MissingColumnError(path_ + ": missing header");
    line_no_ = 1;
    auto names = split_row(header);
    for (const auto& want : required) {
      auto it = std::find(names.begin(), names.end(), want);
      if (it == names.end()) throw MissingColumnError(path_ + ": missing column '" + want + "'");
      index_.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    width_ = names.size();
  }

  // Returns false at end of file. Blank lines are skipped.
  bool next() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (trim(line_).empty()) continue;
      cells_ = split_row(line_);
      if (cells_.size() != width_)
        fail("expected " + std::to_string(width_) + " cells, found " + std::to_string(cells_.size()));
      return true;
    }
    return false;
  }

  std::string_view cell(std::size_t i) const { return cells_[index_[i]]; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

  template <typename T>
  T number(std::size_t i) const {
    auto text = cell(i);
    T value{};
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || p != text.data() + text.size())
      fail("invalid number '" + std::string(text) + "'");
    return value;
  }

  Date date(std::size_t i) const {
    try {
      return parse_date(cell(i));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::string line_;
  std::vector<std::string_view> cells_;
  std::vector<std::size_t> index_;
  std::size_t width_ = 0;
  std::size_t line_no_ = 0;
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

WorkExperienceTable load_work_experience(const std::filesystem::path& path) {
  CsvReader csv(path, {"employee_id", "occupation_code", "industry_code", "start_date", "end_date"});
  WorkExperienceTable table;
  while (csv.next()) {
    if (csv.cell(0).empty()) csv.fail("empty employee_id");
    bool missing = false;
    for (std::size_t i = 1; i < 5; ++i) missing = missing || csv.cell(i).empty();
    if (missing) {
      table.incomplete_employees.emplace(csv.cell(0));
      continue;
    }
    WorkExperienceRecord r;
    r.employee_id = std::string(csv.cell(0));
    r.job = {csv.number<int>(1), csv.number<int>(2)};
    if (r.job.occupation < 0 || r.job.industry < 0) csv.fail("negative job code");
    r.start_date = csv.date(3);
    r.end_date = csv.date(4);
    if (r.end_date < r.start_date) csv.fail("end_date before start_date");
    table.records.push_back(std::move(r));
  }
  return table;
}

std::vector<Vacancy> load_vacancies(const std::filesystem::path& path) {
  CsvReader csv(path, {"occupation_code", "industry_code", "annual_salary_eur"});
  std::vector<Vacancy> out;
  while (csv.next()) {
    Vacancy v;
    v.job = {csv.number<int>(0), csv.number<int>(1)};
    if (v.job.occupation < 0 || v.job.industry < 0) csv.fail("negative job code");
    v.annual_salary_eur = csv.number<double>(2);
    if (!(v.annual_salary_eur > 0.0) || !std::isfinite(v.annual_salary_eur))
      csv.fail("annual_salary_eur must be positive and finite");
    out.push_back(v);
  }
  return out;
}

std::vector<ApplicationRecord> load_applications(const std::filesystem::path& path) {
  CsvReader csv(path,
                {"candidate_id", "application_date", "occupation_code", "industry_code", "outcome"});
  std::vector<ApplicationRecord> out;
  while (csv.next()) {
    ApplicationRecord a;
    a.candidate_id = std::string(csv.cell(0));
    if (a.candidate_id.empty()) csv.fail("empty candidate_id");
    a.application_date = csv.date(1);
    a.target_job = {csv.number<int>(2), csv.number<int>(3)};
    if (a.target_job.occupation < 0 || a.target_job.industry < 0) csv.fail("negative job code");
    auto outcome = csv.cell(4);
    if (outcome == "hired")
      a.outcome = Outcome::Hired;
    else if (outcome == "rejected")
      a.outcome = Outcome::Rejected;
    else
      csv.fail("outcome must be 'hired' or 'rejected', got '" + std::string(outcome) + "'");
    out.push_back(std::move(a));
  }
  return out;
}

MarketDataset load_dataset(const std::filesystem::path& dir) {
  return make_dataset(load_work_experience(dir / "work_experience.csv"),
                      load_vacancies(dir / "vacancies.csv"),
                      load_applications(dir / "applications.csv"));
}

void save_work_experience(const std::filesystem::path& path,
                          std::span<const WorkExperienceRecord> records) {
  auto out = open_out(path);
  out << "employee_id,occupation_code,industry_code,start_date,end_date\n";
  for (const auto& r : records)
    out << r.employee_id << ',' << r.job.occupation << ',' << r.job.industry << ','
        << format_date(r.start_date) << ',' << format_date(r.end_date) << '\n';
}

void save_vacancies(const std::filesystem::path& path, std::span<const Vacancy> vacancies) {
  auto out = open_out(path);
  out << "occupation_code,industry_code,annual_salary_eur\n";
  char buf[64];
  for (const auto& v : vacancies) {
    std::snprintf(buf, sizeof buf, "%.2f", v.annual_salary_eur);
    out << v.job.occupation << ',' << v.job.industry << ',' << buf << '\n';
  }
}

void save_applications(const std::filesystem::path& path,
                       std::span<const ApplicationRecord> applications) {
  auto out = open_out(path);
  out << "candidate_id,application_date,occupation_code,industry_code,outcome\n";
  for (const auto& a : applications)
    out << a.candidate_id << ',' << format_date(a.application_date) << ',' << a.target_job.occupation
        << ',' << a.target_job.industry << ',' << (a.outcome == Outcome::Hired ? "hired" : "rejected")
        << '\n';
}

void save_dataset(const std::filesystem::path& dir, const MarketDataset& dataset) {
  std::filesystem::create_directories(dir);
  save_work_experience(dir / "work_experience.csv", dataset.experiences);
  save_vacancies(dir / "vacancies.csv", dataset.vacancies);
  save_applications(dir / "applications.csv", dataset.applications);
}

// ---------------------------------------------------------------------------
// Dataset structure

MarketDataset make_dataset(WorkExperienceTable experiences, std::vector<Vacancy> vacancies,
                           std::vector<ApplicationRecord> applications) {
  MarketDataset d;
  d.experiences = std::move(experiences.records);
  d.incomplete_employees = std::move(experiences.incomplete_employees);
  std::stable_sort(d.experiences.begin(), d.experiences.end(), [](const auto& a, const auto& b) {
    if (a.employee_id != b.employee_id) return a.employee_id < b.employee_id;
    return a.start_date < b.start_date;
  });
  d.vacancies = std::move(vacancies);
  d.applications = std::move(applications);

  std::set<JobId> jobs;
  for (const auto& r : d.experiences) jobs.insert(r.job);
  for (const auto& v : d.vacancies) jobs.insert(v.job);
  for (const auto& a : d.applications) jobs.insert(a.target_job);
  d.job_catalog.assign(jobs.begin(), jobs.end());
  return d;
}

std::vector<EmployeeHistory> employee_histories(const MarketDataset& dataset) {
  std::vector<EmployeeHistory> out;
  const auto& xs = dataset.experiences;
  std::size_t begin = 0;
  while (begin < xs.size()) {
    std::size_t end = begin + 1;
    while (end < xs.size() && xs[end].employee_id == xs[begin].employee_id) ++end;
    out.push_back({xs[begin].employee_id,
                   std::span<const WorkExperienceRecord>(xs.data() + begin, end - begin)});
    begin = end;
  }
  return out;
}

std::map<std::string, std::span<const WorkExperienceRecord>, std::less<>> history_index(
    const MarketDataset& dataset) {
  std::map<std::string, std::span<const WorkExperienceRecord>, std::less<>> index;
  for (const auto& h : employee_histories(dataset)) index.emplace(std::string(h.employee_id), h.records);
  return index;
}

MarketDataset preprocess(const MarketDataset& dataset) {
  MarketDataset out;
  out.vacancies = dataset.vacancies;
  out.job_catalog = dataset.job_catalog;

  std::set<std::string, std::less<>> dropped(dataset.incomplete_employees.begin(),
                                             dataset.incomplete_employees.end());
  for (const auto& h : employee_histories(dataset)) {
    if (dropped.contains(h.employee_id)) continue;
    std::size_t kept = 0;
    for (const auto& r : h.records) kept += r.duration_days() >= kMinRecordDays;
    if (kept > kMaxRecordsPerEmployee) {
      dropped.emplace(h.employee_id);
      continue;
    }
    for (const auto& r : h.records)
      if (r.duration_days() >= kMinRecordDays) out.experiences.push_back(r);
  }
  for (const auto& a : dataset.applications)
    if (!dropped.contains(a.candidate_id)) out.applications.push_back(a);
  return out;
}

PlausibleJobs plausible_jobs(const MarketDataset& dataset, std::size_t k) {
  if (k == 0) throw std::invalid_argument("plausible_jobs: k must be positive");
  std::map<JobId, std::size_t> counts;
  for (const auto& r : dataset.experiences) ++counts[r.job];
  std::vector<std::pair<JobId, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  PlausibleJobs out;
  out.fewer_than_requested = ranked.size() < k;
  ranked.resize(std::min(k, ranked.size()));
  for (const auto& [job, count] : ranked) {
    out.jobs.push_back(job);
    out.counts.push_back(count);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic market

LognormalParams lognormal_from_median_mean(double median, double mean) {
  if (!(median > 0.0) || !(mean > 0.0) || !std::isfinite(median) || !std::isfinite(mean))
    throw std::invalid_argument("lognormal: median and mean must be positive");
  if (mean < median) throw std::invalid_argument("lognormal: mean must not be below median");
  return {std::log(median), std::sqrt(2.0 * std::log(mean / median))};
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("synth.") + what);
  };
  require(n_employees > 0, "n_employees must be positive");
  require(n_occupations > 0 && n_industries > 0, "catalog sizes must be positive");
  lognormal_from_median_mean(duration_median_days, duration_mean_days);
  lognormal_from_median_mean(salary_median_eur, salary_mean_eur);
  require(records_mean >= 1.0, "records_mean must be at least 1");
  require(records_cap >= 1 && records_cap <= kMaxRecordsPerEmployee, "records_cap must be in [1, 50]");
  require(occupation_salary_spread >= 0.0 && industry_salary_spread >= 0.0,
          "salary spreads must be nonnegative");
  require(senior_salary_premium >= 1.0, "senior_salary_premium must be at least 1");
  require(popularity_exponent >= 0.0, "popularity_exponent must be nonnegative");
  require(n_vacancies > 0, "n_vacancies must be positive");
  require(tenure_scale_days > 0.0, "tenure_scale_days must be positive");
  require(search_self >= 0 && search_same_occupation >= 0 && search_same_industry >= 0 &&
              search_self + search_same_occupation + search_same_industry <= 1.0,
          "search mix must be a sub-probability vector");
  require(unqualified_senior_apply_rate >= 0.0 && unqualified_senior_apply_rate <= 1.0,
          "unqualified_senior_apply_rate must be in [0, 1]");
  require(max_search_attempts >= 1, "max_search_attempts must be positive");
  require(senior_missing_history_bias >= 0.0 && senior_missing_history_bias <= 1.0,
          "senior_missing_history_bias must be in [0, 1]");
}

TenureSummary summarize_tenure(std::span<const WorkExperienceRecord> history, JobId target,
                               Date cutoff) {
  TenureSummary t;
  std::set<JobId> distinct;
  std::optional<Date> last_in_occupation;
  for (const auto& r : history) {
    if (!(r.start_date < cutoff)) continue;
    const Date end = std::min(r.end_date, cutoff);
    const double days = static_cast<double>(days_between(r.start_date, end));
    t.total_days += days;
    if (r.job.occupation == target.occupation) {
      t.occupation_days += days;
      if (!last_in_occupation || *last_in_occupation < end) last_in_occupation = end;
    }
    if (r.job.industry == target.industry) t.industry_days += days;
    distinct.insert(r.job);
  }
  t.distinct_jobs = distinct.size();
  if (last_in_occupation) t.days_since_occupation = static_cast<double>(days_between(*last_in_occupation, cutoff));
  return t;
}

double ground_truth_hire_probability(const SynthConfig& c, const TenureSummary& t) {
  auto sat = [&](double days) { return 1.0 - std::exp(-days / c.tenure_scale_days); };
  const double logit = c.hire_intercept + c.hire_occupation_weight * sat(t.occupation_days) +
                       c.hire_industry_weight * sat(t.industry_days) +
                       c.hire_total_weight * sat(t.total_days);
  return 1.0 / (1.0 + std::exp(-logit));
}

namespace {

std::vector<double> zipf_weights(int n, double exponent, Rng& rng) {
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<int> rank(static_cast<std::size_t>(n));
  std::iota(rank.begin(), rank.end(), 0);
  rng.shuffle(rank);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = std::pow(1.0 + rank[static_cast<std::size_t>(i)], -exponent);
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& x : w) x /= total;
  return w;
}

struct Market {
  const SynthConfig& config;
  std::vector<double> occupation_weights;
  std::vector<double> industry_weights;
  std::set<JobId> top_decile;

  JobId draw_job(Rng& rng) const {
    return {static_cast<int>(rng.categorical(occupation_weights)),
            static_cast<int>(rng.categorical(industry_weights))};
  }

  JobId draw_target(JobId current, const std::vector<WorkExperienceRecord>& history, Date when,
                    Rng& rng) const {
    const double u = rng.uniform();
    const double a = config.search_self;
    const double b = a + config.search_same_occupation;
    const double c = b + config.search_same_industry;
    if (u < a) return current;
    if (u < b) return {current.occupation, static_cast<int>(rng.categorical(industry_weights))};
    if (u < c) return {static_cast<int>(rng.categorical(occupation_weights)), current.industry};
    // Unqualified candidates rarely apply to senior positions.
    for (int tries = 0; tries < 64; ++tries) {
      JobId target = draw_job(rng);
      if (!top_decile.contains(target)) return target;
      auto t = summarize_tenure(history, target, when);
      if (t.occupation_days > 0.0 || t.industry_days > 0.0) return target;
      if (rng.bernoulli(config.unqualified_senior_apply_rate)) return target;
    }
    return current;
  }
};

std::string employee_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "E%07zu", i);
  return buf;
}

}  // namespace

MarketDataset generate_synthetic(const SynthConfig& config, SynthTruth* truth) {
  config.validate();
  Rng market_rng(Rng::derive(config.seed, "market"));

  Market market{config, zipf_weights(config.n_occupations, config.popularity_exponent, market_rng),
                zipf_weights(config.n_industries, config.popularity_exponent, market_rng), {}};

  // Per-job log salary offsets, centered under the vacancy (popularity) weights.
  std::vector<JobId> jobs;
  std::vector<double> popularity;
  std::vector<double> offsets;
  std::vector<double> occupation_offset(static_cast<std::size_t>(config.n_occupations));
  std::vector<double> industry_offset(static_cast<std::size_t>(config.n_industries));
  for (auto& x : occupation_offset)
    x = market_rng.uniform(-config.occupation_salary_spread, config.occupation_salary_spread);
  for (auto& x : industry_offset)
    x = market_rng.uniform(-config.industry_salary_spread, config.industry_salary_spread);
  // Occupation codes follow skill level, as in ISCO: code 0 pays best.
  std::sort(occupation_offset.begin(), occupation_offset.end(), std::greater<>());
  for (int o = 0; o < config.n_occupations; ++o)
    for (int i = 0; i < config.n_industries; ++i) {
      jobs.push_back({o, i});
      popularity.push_back(market.occupation_weights[static_cast<std::size_t>(o)] *
                           market.industry_weights[static_cast<std::size_t>(i)]);
      offsets.push_back(occupation_offset[static_cast<std::size_t>(o)] +
                        industry_offset[static_cast<std::size_t>(i)]);
    }
  double mean_offset = 0.0;
  for (std::size_t j = 0; j < jobs.size(); ++j) mean_offset += popularity[j] * offsets[j];
  double offset_var = 0.0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    offsets[j] -= mean_offset;
    offset_var += popularity[j] * offsets[j] * offsets[j];
  }
  const auto salary = lognormal_from_median_mean(config.salary_median_eur, config.salary_mean_eur);
  const double noise_var = salary.sigma * salary.sigma - offset_var;
  if (!(noise_var > 0.0))
    throw std::invalid_argument("synth salary spreads too wide for the salary distribution");
  const double noise_sd = std::sqrt(noise_var);

  std::vector<std::size_t> by_salary(jobs.size());
  std::iota(by_salary.begin(), by_salary.end(), 0);
  std::stable_sort(by_salary.begin(), by_salary.end(),
                   [&](std::size_t a, std::size_t b) { return offsets[a] > offsets[b]; });
  const std::size_t decile = std::max<std::size_t>(1, (jobs.size() + 9) / 10);
  for (std::size_t r = 0; r < decile; ++r) market.top_decile.insert(jobs[by_salary[r]]);
  // The pay ladder skips niche jobs so that its top rungs are observable.
  std::vector<double> sorted_popularity = popularity;
  std::nth_element(sorted_popularity.begin(), sorted_popularity.begin() + sorted_popularity.size() / 2,
                   sorted_popularity.end());
  const double median_popularity = sorted_popularity[sorted_popularity.size() / 2];
  int rung = 0;
  for (std::size_t r = 0; r < decile; ++r) {
    if (popularity[by_salary[r]] < median_popularity) continue;
    offsets[by_salary[r]] += std::ldexp(std::log(config.senior_salary_premium), -2 * rung++);
  }

  if (truth) {
    *truth = {};
    truth->jobs = jobs;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      truth->salary_factor[jobs[j]] = std::exp(offsets[j]);
      truth->popularity[jobs[j]] = popularity[j];
    }
    truth->top_decile = market.top_decile;
  }

  // Vacancies.
  std::vector<Vacancy> vacancies;
  vacancies.reserve(config.n_vacancies);
  Rng vacancy_rng(Rng::derive(config.seed, "vacancies"));
  for (std::size_t n = 0; n < config.n_vacancies; ++n) {
    const std::size_t j = vacancy_rng.categorical(popularity);
    vacancies.push_back({jobs[j], std::exp(salary.mu + offsets[j] + vacancy_rng.normal(0.0, noise_sd))});
  }

  // Careers and the applications that produced each move.
  const auto duration = lognormal_from_median_mean(config.duration_median_days, config.duration_mean_days);
  const double extra_mean = config.records_mean - 1.0;
  const double geometric_q = extra_mean / (1.0 + extra_mean);
  const Date epoch = parse_date("2012-01-01");
  const long start_span_days = 9 * 365;

  WorkExperienceTable experiences;
  std::vector<ApplicationRecord> applications;

  for (std::size_t e = 0; e < config.n_employees; ++e) {
    Rng rng(Rng::derive(config.seed, e));
    const std::string id = employee_name(e);

    std::size_t n_records = 1;
    while (n_records < config.records_cap && rng.bernoulli(geometric_q)) ++n_records;

    std::vector<WorkExperienceRecord> records;  // true history
    std::vector<ApplicationRecord> apps;
    std::vector<char> missing;  // per record
    std::size_t first_emitted_app = 0;

    JobId job = market.draw_job(rng);
    Date start = epoch + std::chrono::days{static_cast<long>(rng.index(start_span_days))};
    for (std::size_t k = 0; k < n_records; ++k) {
      const double drawn = rng.lognormal(duration.mu, duration.sigma);
      if (truth) truth->sampled_durations_days.push_back(drawn);
      const long length = std::max(1L, std::lround(drawn));
      records.push_back({id, job, start, start + std::chrono::days{length}});
      missing.push_back(0);
      if (k + 1 == n_records) break;

      // Next start: small gap or overlap, never before the current start.
      const long gap = static_cast<long>(rng.index(60)) - 14;
      const Date next_start = std::max(records.back().end_date + std::chrono::days{gap},
                                       start + std::chrono::days{2});
      const Date window_lo = std::max(start + std::chrono::days{1}, next_start - std::chrono::days{45});
      const long window = std::max(0L, days_between(window_lo, next_start - std::chrono::days{1}));
      std::vector<long> offsets_days(config.max_search_attempts);
      for (auto& d : offsets_days) d = static_cast<long>(rng.index(static_cast<std::size_t>(window) + 1));
      std::sort(offsets_days.begin(), offsets_days.end());

      JobId next = job;
      for (std::size_t attempt = 0; attempt < config.max_search_attempts; ++attempt) {
        const Date when = window_lo + std::chrono::days{offsets_days[attempt]};
        const JobId target = market.draw_target(job, records, when, rng);
        const double p = ground_truth_hire_probability(config, summarize_tenure(records, target, when));
        const bool hired = rng.bernoulli(p);
        apps.push_back({id, when, target, hired ? Outcome::Hired : Outcome::Rejected});
        if (!hired) continue;
        next = target;
        if (market.top_decile.contains(target)) {
          if (truth) ++truth->senior_hires;
          if (config.senior_missing_history_bias > 0.0 &&
              rng.bernoulli(config.senior_missing_history_bias)) {
            // The experience that qualified the candidate goes missing, along
            // with the application log before this hire.
            for (std::size_t k = 0; k < records.size(); ++k)
              if (records[k].job.occupation == target.occupation)
                missing[k] = 1;
            first_emitted_app = apps.size() - 1;
            if (truth) ++truth->senior_hires_history_deleted;
          }
        }
        break;
      }
      job = next;
      start = next_start;
    }

    for (std::size_t k = 0; k < records.size(); ++k)
      if (!missing[k]) experiences.records.push_back(records[k]);
    for (std::size_t k = first_emitted_app; k < apps.size(); ++k) applications.push_back(apps[k]);
  }

  return make_dataset(std::move(experiences), std::move(vacancies), std::move(applications));
}

}  // namespace careerpath
