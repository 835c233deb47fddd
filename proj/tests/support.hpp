#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "careerpath/agents.hpp"
#include "careerpath/approx.hpp"
#include "careerpath/env.hpp"
#include "careerpath/eval.hpp"
#include "careerpath/models.hpp"

namespace careerpath::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("careerpath_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<JobId> jobs(int n) {
  std::vector<JobId> out;
  for (int i = 0; i < n; ++i) out.push_back({i, 0});
  return out;
}

// Env over jobs(n) with an explicit probability matrix and annual salaries.
inline Env table_env(const std::vector<double>& p, const std::vector<double>& annual, int horizon = 4,
                     StateRepresentation repr = StateRepresentation::LastJob) {
  const auto catalog = jobs(static_cast<int>(annual.size()));
  std::map<JobId, double> salary;
  for (std::size_t i = 0; i < catalog.size(); ++i) salary[catalog[i]] = annual[i];
  EnvConfig ec;
  ec.horizon_steps = horizon;
  return Env(ec, catalog, std::make_shared<TableTransitions>(catalog, p), salary, repr);
}

inline Env constant_env(int n, double p, std::vector<double> annual, int horizon = 4) {
  return table_env(std::vector<double>(static_cast<std::size_t>(n * n), p), annual, horizon);
}

// Random 3-job MDP whose optimal action beats the runner-up by at least 1% of
// max Q* everywhere, so the optimal policy is unambiguous.
inline Env random_tiny_env(std::uint64_t seed, int n_jobs = 3, int horizon = 4) {
  Rng rng(seed);
  while (true) {
    std::vector<double> p(static_cast<std::size_t>(n_jobs * n_jobs)), annual(static_cast<std::size_t>(n_jobs));
    for (int i = 0; i < n_jobs; ++i) {
      annual[i] = rng.uniform(20000.0, 100000.0);
      for (int j = 0; j < n_jobs; ++j) p[i * n_jobs + j] = i == j ? 1.0 : rng.uniform(0.05, 0.95);
    }
    Env env = table_env(p, annual, horizon);
    const auto oracle = value_iteration_oracle(tiny_mdp_from_env(env));
    double gap = 1e300, top = 0.0;
    for (int t = 0; t < horizon; ++t)
      for (int s = 0; s < n_jobs; ++s) {
        std::vector<double> q(oracle.q[t].begin() + s * n_jobs, oracle.q[t].begin() + (s + 1) * n_jobs);
        std::sort(q.rbegin(), q.rend());
        gap = std::min(gap, q[0] - q[1]);
        top = std::max(top, q[0]);
      }
    if (gap >= 0.01 * top) return env;
  }
}

// Greedy action of `policy` in the canonical state for (job index s, step t).
inline std::size_t greedy_index(const Env& env, const Policy& policy, std::size_t s, int t) {
  const JobId j = env.catalog()[s];
  State st{j, {{j, 1}}, t};
  Rng rng(0);
  return env.index_of(policy.act(env, st, rng));
}

inline WorkExperienceRecord record(std::string id, JobId job, const char* start, const char* end) {
  return {std::move(id), job, parse_date(start), parse_date(end)};
}

// Applications between six jobs with exactly known hire rates: moves among
// jobs 0-2 succeed 30% of the time, every other pair 80%. Each job has
// 60 vacancies around 30000 + 4000 * occupation.
struct KnownRateMarket {
  MarketDataset dataset;
  std::vector<JobId> catalog;
  double rate(JobId from, JobId to) const { return from.occupation < 3 && to.occupation < 3 ? 0.3 : 0.8; }
};

inline KnownRateMarket known_rate_market(std::uint64_t seed, int per_pair = 100) {
  KnownRateMarket m;
  m.catalog = jobs(6);
  Rng rng(seed);
  WorkExperienceTable table;
  std::vector<ApplicationRecord> apps;
  std::vector<Vacancy> vacancies;
  int id = 0;
  for (JobId from : m.catalog)
    for (JobId to : m.catalog) {
      const int hires = static_cast<int>(std::lround(m.rate(from, to) * per_pair));
      std::vector<int> outcome(static_cast<std::size_t>(per_pair), 0);
      std::fill(outcome.begin(), outcome.begin() + hires, 1);
      rng.shuffle(outcome);
      for (int k = 0; k < per_pair; ++k) {
        const std::string who = "c" + std::to_string(id++);
        table.records.push_back(record(who, from, "2015-01-01", "2020-01-01"));
        apps.push_back({who, parse_date("2020-06-01"), to, outcome[k] ? Outcome::Hired : Outcome::Rejected});
      }
    }
  for (JobId j : m.catalog)
    for (int k = 0; k < 60; ++k)
      vacancies.push_back({j, (30000.0 + 4000.0 * j.occupation) * rng.lognormal(0.0, 0.1)});
  m.dataset = make_dataset(std::move(table), std::move(vacancies), std::move(apps));
  return m;
}

// Largest elementwise relative error between backprop and central
// differences (h = 1e-5). The denominator is floored at 1e-6.
inline double max_gradient_error(const Mlp& net, std::span<const double> input, const LossSpec& loss) {
  const auto analytic = grad(net, input, loss).grads;
  Mlp probe = net;
  constexpr double h = 1e-5;
  double worst = 0.0;
  auto check = [&](std::vector<double>& theta, const std::vector<double>& g) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double keep = theta[i];
      theta[i] = keep + h;
      const double up = grad(probe, input, loss).loss;
      theta[i] = keep - h;
      const double down = grad(probe, input, loss).loss;
      theta[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(g[i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - g[i]) / denom);
    }
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    check(probe.params().weights[l], analytic.weights[l]);
    check(probe.params().biases[l], analytic.biases[l]);
  }
  return worst;
}

// Random small network, input and loss for gradient checks (seeded).
struct GradientCase {
  Mlp net;
  std::vector<double> input;
  LossSpec loss;
};

inline GradientCase random_gradient_case(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> dims{2 + rng.index(4)};
  const std::size_t hidden_layers = 1 + rng.index(2);
  for (std::size_t l = 0; l < hidden_layers; ++l) dims.push_back(2 + rng.index(5));
  dims.push_back(2 + rng.index(4));
  const Activation hidden = rng.bernoulli(0.5) ? Activation::Tanh : Activation::Relu;
  const int kind = static_cast<int>(rng.index(3));
  const Activation output = kind == 1 ? Activation::Softmax : kind == 0 ? Activation::Linear : Activation::Tanh;
  if (kind == 2) dims.back() = 1;
  GradientCase c{Mlp::initialized(dims, hidden, output, rng), {}, SquaredErrorLoss{}};
  for (auto& b : c.net.params().biases)
    for (double& v : b) v = rng.uniform(-0.5, 0.5);
  for (std::size_t i = 0; i < dims.front(); ++i) c.input.push_back(rng.uniform(-2.0, 2.0));
  if (kind == 0)
    c.loss = SquaredErrorLoss{rng.index(dims.back()), rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
  else if (kind == 1)
    c.loss = PolicyGradientLoss{rng.index(dims.back()), rng.uniform(-2, 2), rng.uniform(0.0, 0.1)};
  else
    c.loss = ValueRegressionLoss{rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
  return c;
}

// Re-applies to an observed career: the path is identified by its start job
// and step t applies to the job held during that quarter.
class ReplayPolicy final : public Policy {
 public:
  explicit ReplayPolicy(std::map<JobId, std::vector<JobId>> plans) : plans_(std::move(plans)) {}
  JobId act(const Env&, const State& s, Rng&) const override {
    const auto& plan = plans_.at(s.history.front().job);
    return plan.at(std::min<std::size_t>(static_cast<std::size_t>(s.t), plan.size() - 1));
  }
  std::string name() const override { return "replay"; }

 private:
  std::map<JobId, std::vector<JobId>> plans_;
};

// Careers whose job changes fall on quarter boundaries, one per start job,
// plus the matching replay plans.
struct AlignedCareers {
  std::vector<WorkExperienceRecord> records;
  std::vector<std::vector<WorkExperienceRecord>> per_employee;
  std::map<JobId, std::vector<JobId>> plans;
};

inline AlignedCareers aligned_careers(const std::vector<JobId>& catalog, int quarters, std::uint64_t seed) {
  AlignedCareers out;
  Rng rng(seed);
  const Date origin = parse_date("2010-01-01");
  auto day = [&](int quarter) {
    return origin + std::chrono::days(static_cast<long>(std::floor(quarter * 3 * kDaysPerMonth)));
  };
  for (std::size_t e = 0; e < catalog.size(); ++e) {
    std::vector<JobId> plan;
    std::vector<WorkExperienceRecord> recs;
    JobId held = catalog[e];
    int begin = 0;
    for (int q = 0; q < quarters; ++q) {
      if (q > 0 && rng.bernoulli(0.3)) {
        JobId next = catalog[rng.index(catalog.size())];
        if (next != held) {
          recs.push_back({"e" + std::to_string(e), held, day(begin), day(q)});
          held = next;
          begin = q;
        }
      }
      plan.push_back(held);
    }
    recs.push_back({"e" + std::to_string(e), held, day(begin), day(quarters)});
    out.plans[catalog[e]] = plan;
    out.records.insert(out.records.end(), recs.begin(), recs.end());
    out.per_employee.push_back(std::move(recs));
  }
  return out;
}

}  // namespace careerpath::testing
