#include "careerpath/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace careerpath {

ObservedPath monthly_income_series(std::span<const WorkExperienceRecord> records,
                                   const MonthlySalaryFn& monthly_salary, int max_months) {
  if (records.empty()) throw std::invalid_argument("monthly_income_series: empty record list");
  std::vector<WorkExperienceRecord> recs(records.begin(), records.end());
  std::stable_sort(recs.begin(), recs.end(),
                   [](const auto& a, const auto& b) { return a.start_date < b.start_date; });
  const Date origin = recs.front().start_date;
  Date last_end = origin;
  for (const auto& r : recs) last_end = std::max(last_end, r.end_date);
  const long span_days = days_between(origin, last_end);

  int months = std::max(1, static_cast<int>(std::lround(static_cast<double>(span_days) / kDaysPerMonth)));
  if (max_months > 0) months = std::min(months, max_months);

  std::vector<double> salary(recs.size());
  std::vector<long> start(recs.size()), end(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    salary[i] = monthly_salary(recs[i].job);
    if (!(salary[i] > 0.0) || !std::isfinite(salary[i]))
      throw std::invalid_argument("monthly_income_series: non-positive salary for " + to_string(recs[i].job));
    start[i] = days_between(origin, recs[i].start_date);
    end[i] = days_between(origin, recs[i].end_date);
  }

  ObservedPath path;
  path.employee_id = recs.front().employee_id;
  path.start_job = recs.front().job;
  path.duration_months = months;
  path.monthly_income.reserve(months);
  path.monthly_job.reserve(months);

  // Record i is active on day d when start <= d < end; gap days fall back on
  // the record with the latest end before d.
  std::vector<double> weight(recs.size());
  std::vector<std::size_t> active;
  for (int m = 0; m < months; ++m) {
    const long lo = static_cast<long>(std::floor(m * kDaysPerMonth));
    const long hi = static_cast<long>(std::floor((m + 1) * kDaysPerMonth));
    std::fill(weight.begin(), weight.end(), 0.0);
    for (long d = lo; d < hi; ++d) {
      active.clear();
      for (std::size_t i = 0; i < recs.size(); ++i)
        if (start[i] <= d && d < end[i]) active.push_back(i);
      if (active.empty()) {
        std::size_t carry = 0;
        long best_end = -1;
        for (std::size_t i = 0; i < recs.size(); ++i)
          if (end[i] <= d && (end[i] > best_end || (end[i] == best_end && start[i] >= start[carry]))) {
            best_end = end[i];
            carry = i;
          }
        active.push_back(carry);
      }
      for (auto i : active) weight[i] += 1.0 / static_cast<double>(active.size());
    }
    // Single-job months pay the salary exactly; mixed months the day-weighted mean.
    std::size_t dominant = 0, nonzero = 0;
    double total_w = 0.0, income = 0.0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (weight[i] <= 0.0) continue;
      ++nonzero;
      total_w += weight[i];
      income += weight[i] * salary[i];
      if (weight[i] > weight[dominant] || weight[dominant] <= 0.0) dominant = i;
    }
    bool single_job = true;
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (weight[i] > 0.0 && recs[i].job != recs[dominant].job) single_job = false;
    path.monthly_income.push_back(nonzero == 1 || single_job ? salary[dominant] : income / total_w);
    path.monthly_job.push_back(recs[dominant].job);
  }
  return path;
}

double factual_income(const ObservedPath& path) {
  double total = 0.0;
  for (double x : path.monthly_income) total += x;
  return total;
}

double generate_counterfactual(const Policy& policy, const Env& env, const ObservedPath& path, Rng& rng) {
  const int months = path.duration_months;
  if (months <= 0) return 0.0;
  const int step_months = env.config().step_months;
  const int steps = (months + step_months - 1) / step_months;
  const auto trace = rollout(env, policy, path.start_job, rng, steps);
  double total = 0.0;
  for (int m = 0; m < months; ++m) total += env.monthly_salary(trace.states[m / step_months + 1].current_job);
  return total;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (population <= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.index(population - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

bool at_least_as_extreme(double d, double observed) {
  const double tol = 1e-9 * std::max(1.0, std::abs(observed));
  return std::abs(d) >= std::abs(observed) - tol;
}

// n choose k, saturating at `cap` + 1.
double binomial_capped(std::size_t n, std::size_t k, double cap) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > cap) return cap + 1.0;
  }
  return std::round(c);
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += threads) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double permutation_test_exhaustive(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("permutation_test: empty sample");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size(), nb = b.size();
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double observed = mean_of(a) - mean_of(b);

  std::vector<std::size_t> comb(na);
  std::iota(comb.begin(), comb.end(), std::size_t{0});
  std::size_t extreme = 0, count = 0;
  while (true) {
    double sa = 0.0;
    for (auto i : comb) sa += pooled[i];
    const double d = sa / static_cast<double>(na) - (total - sa) / static_cast<double>(nb);
    extreme += at_least_as_extreme(d, observed);
    ++count;
    std::size_t i = na;
    while (i > 0 && comb[i - 1] == n - na + (i - 1)) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < na; ++j) comb[j] = comb[j - 1] + 1;
  }
  return static_cast<double>(extreme) / static_cast<double>(count);
}

double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t n_permutations,
                        Rng& rng) {
  if (a.empty() || b.empty()) throw std::invalid_argument("permutation_test: empty sample");
  const std::size_t n = a.size() + b.size();
  if (binomial_capped(n, a.size(), static_cast<double>(n_permutations)) <= static_cast<double>(n_permutations))
    return permutation_test_exhaustive(a, b);

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t na = a.size(), nb = b.size();
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double observed = mean_of(a) - mean_of(b);
  std::size_t extreme = 1;  // identity
  for (std::size_t k = 0; k < n_permutations; ++k) {
    double sa = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      std::swap(pooled[i], pooled[i + rng.index(n - i)]);
      sa += pooled[i];
    }
    const double d = sa / static_cast<double>(na) - (total - sa) / static_cast<double>(nb);
    extreme += at_least_as_extreme(d, observed);
  }
  return static_cast<double>(extreme) / static_cast<double>(n_permutations + 1);
}

ComparisonReport compare_policies(const Policy& policy, const Env& env, std::span<const ObservedPath> paths,
                                  const CompareConfig& config) {
  if (paths.empty()) throw std::invalid_argument("compare_policies: empty path sample");
  const auto chosen = sample_indices(paths.size(), config.n_sample, Rng::derive(config.seed, "sample"));
  const std::uint64_t rollout_seed = Rng::derive(config.seed, "rollout");

  std::vector<double> fi(chosen.size()), cfi(chosen.size());
  std::vector<char> used(chosen.size(), 0);
  parallel_for(chosen.size(), config.threads, [&](std::size_t k) {
    const auto& path = paths[chosen[k]];
    if (!env.in_catalog(path.start_job)) return;
    Rng rng(Rng::derive(rollout_seed, static_cast<std::uint64_t>(chosen[k])));
    fi[k] = factual_income(path);
    cfi[k] = generate_counterfactual(policy, env, path, rng);
    used[k] = 1;
  });

  std::vector<double> f, c;
  ComparisonReport r;
  r.model = policy.name();
  std::size_t gainers = 0, losers = 0;
  double gain_sum = 0.0, loss_sum = 0.0;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    if (!used[k]) {
      ++r.skipped_paths;
      continue;
    }
    f.push_back(fi[k]);
    c.push_back(cfi[k]);
    const double pct = fi[k] > 0.0 ? 100.0 * (cfi[k] - fi[k]) / fi[k] : 0.0;
    if (cfi[k] > fi[k]) {
      ++gainers;
      gain_sum += pct;
    } else if (cfi[k] < fi[k]) {
      ++losers;
      loss_sum += pct;
    }
  }
  r.n_paths = f.size();
  if (r.n_paths == 0) throw std::runtime_error("compare_policies: no path starts inside the catalog");
  r.mean_fi_eur = mean_of(f);
  r.mean_cfi_eur = mean_of(c);
  r.change_pct = 100.0 * (r.mean_cfi_eur - r.mean_fi_eur) / r.mean_fi_eur;
  const double n = static_cast<double>(r.n_paths);
  r.gainers_pct = 100.0 * static_cast<double>(gainers) / n;
  r.losers_pct = 100.0 * static_cast<double>(losers) / n;
  r.mean_gain_pct = gainers ? gain_sum / static_cast<double>(gainers) : 0.0;
  r.mean_loss_pct = losers ? loss_sum / static_cast<double>(losers) : 0.0;
  Rng perm_rng(Rng::derive(config.seed, "permutation"));
  r.p_value = permutation_test(c, f, config.n_permutations, perm_rng);
  return r;
}

std::string report_csv_header() {
  return "model,mean_fi_eur,mean_cfi_eur,change_pct,p_value,gainers_pct,mean_gain_pct,losers_pct,"
         "mean_loss_pct,n_paths";
}

std::string report_csv_row(const ComparisonReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%.4f,%.6f,%.4f,%.4f,%.4f,%.4f,%zu", r.model.c_str(), r.mean_fi_eur,
                r.mean_cfi_eur, r.change_pct, r.p_value, r.gainers_pct, r.mean_gain_pct, r.losers_pct,
                r.mean_loss_pct, r.n_paths);
  return buf;
}

void write_reports_csv(const std::filesystem::path& path, std::span<const ComparisonReport> reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << report_csv_header() << '\n';
  for (const auto& r : reports) out << report_csv_row(r) << '\n';
}

std::string report_text(const ComparisonReport& r) {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "model:          %s\n"
                "paths:          %zu (skipped %zu)\n"
                "mean FI:        %.2f EUR\n"
                "mean CFI:       %.2f EUR\n"
                "change:         %+.2f%% (p = %.4f)\n"
                "gainers:        %.2f%% (mean %+.2f%%)\n"
                "losers:         %.2f%% (mean %+.2f%%)\n",
                r.model.c_str(), r.n_paths, r.skipped_paths, r.mean_fi_eur, r.mean_cfi_eur, r.change_pct,
                r.p_value, r.gainers_pct, r.mean_gain_pct, r.losers_pct, r.mean_loss_pct);
  return buf;
}

namespace {

std::vector<JobCount> to_table(const std::map<JobId, std::size_t>& counts) {
  std::vector<JobCount> out;
  for (const auto& [job, n] : counts) out.push_back({job, n});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  return out;
}

std::vector<JobCount> head(const std::vector<JobCount>& table, std::size_t k) {
  return {table.begin(), table.begin() + static_cast<std::ptrdiff_t>(std::min(k, table.size()))};
}

}  // namespace

std::vector<JobCount> DistributionReport::top_start(std::size_t k) const { return head(start, k); }
std::vector<JobCount> DistributionReport::top_final(std::size_t k) const { return head(final, k); }

double DistributionReport::final_share(JobId job) const {
  if (n_episodes == 0) return 0.0;
  for (const auto& jc : final)
    if (jc.job == job) return static_cast<double>(jc.count) / static_cast<double>(n_episodes);
  return 0.0;
}

DistributionReport distribution_report(const Policy& policy, const Env& env, std::size_t n_episodes,
                                       const std::vector<double>& start_weights, std::uint64_t seed) {
  std::vector<JobId> starts(n_episodes), finals(n_episodes);
  parallel_for(n_episodes, 0, [&](std::size_t e) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(e)));
    starts[e] = sample_start(env, start_weights, rng);
    finals[e] = rollout(env, policy, starts[e], rng).states.back().current_job;
  });
  std::map<JobId, std::size_t> s, f;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    ++s[starts[e]];
    ++f[finals[e]];
  }
  DistributionReport r;
  r.model = policy.name();
  r.n_episodes = n_episodes;
  r.start = to_table(s);
  r.final = to_table(f);
  return r;
}

void write_distribution_csv(const std::filesystem::path& path, const DistributionReport& report,
                            std::size_t top_k) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "position,occupation,industry,count\n";
  for (const auto& jc : report.top_start(top_k))
    out << "start," << jc.job.occupation << ',' << jc.job.industry << ',' << jc.count << '\n';
  for (const auto& jc : report.top_final(top_k))
    out << "final," << jc.job.occupation << ',' << jc.job.industry << ',' << jc.count << '\n';
}

void TinyMdp::validate() const {
  if (n_states == 0 || n_actions == 0) throw std::invalid_argument("TinyMdp: empty state or action set");
  if (horizon < 0) throw std::invalid_argument("TinyMdp: negative horizon");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("TinyMdp: gamma outside [0, 1]");
  const std::size_t expected = n_states * n_actions * n_states;
  if (p.size() != expected || r.size() != expected) throw std::invalid_argument("TinyMdp: tensor size mismatch");
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (std::size_t s2 = 0; s2 < n_states; ++s2) {
        const double x = prob(s, a, s2);
        if (!(x >= 0.0)) throw std::invalid_argument("TinyMdp: negative probability");
        total += x;
      }
      if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("TinyMdp: transition row does not sum to 1");
    }
}

OracleResult value_iteration_oracle(const TinyMdp& mdp) {
  mdp.validate();
  const std::size_t S = mdp.n_states, A = mdp.n_actions;
  const auto H = static_cast<std::size_t>(mdp.horizon);
  OracleResult out;
  out.q.assign(H, std::vector<double>(S * A, 0.0));
  out.v.assign(H + 1, std::vector<double>(S, 0.0));
  out.policy.assign(H, std::vector<std::size_t>(S, 0));
  for (std::size_t t = H; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        double q = 0.0;
        for (std::size_t s2 = 0; s2 < S; ++s2)
          q += mdp.prob(s, a, s2) * (mdp.reward(s, a, s2) + mdp.gamma * out.v[t + 1][s2]);
        out.q[t][s * A + a] = q;
      }
      const auto* row = out.q[t].data() + s * A;
      const auto best = static_cast<std::size_t>(std::max_element(row, row + A) - row);
      out.policy[t][s] = best;
      out.v[t][s] = row[best];
    }
  }
  return out;
}

std::vector<double> evaluate_policy(const TinyMdp& mdp, const std::vector<std::vector<std::size_t>>& policy) {
  mdp.validate();
  const std::size_t S = mdp.n_states;
  if (policy.size() != static_cast<std::size_t>(mdp.horizon))
    throw std::invalid_argument("evaluate_policy: policy length must equal horizon");
  std::vector<double> v(S, 0.0), next(S, 0.0);
  for (std::size_t t = policy.size(); t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t a = policy[t].at(s);
      if (a >= mdp.n_actions) throw std::out_of_range("evaluate_policy: action out of range");
      double x = 0.0;
      for (std::size_t s2 = 0; s2 < S; ++s2) x += mdp.prob(s, a, s2) * (mdp.reward(s, a, s2) + mdp.gamma * v[s2]);
      next[s] = x;
    }
    std::swap(v, next);
  }
  return v;
}

TinyMdp tiny_mdp_from_env(const Env& env) {
  const auto& catalog = env.catalog();
  const std::size_t n = catalog.size();
  TinyMdp mdp;
  mdp.n_states = mdp.n_actions = n;
  mdp.horizon = env.config().horizon_steps;
  mdp.gamma = env.config().discount;
  mdp.p.assign(n * n * n, 0.0);
  mdp.r.assign(n * n * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const State state = env.reset(catalog[s]);
    for (std::size_t a = 0; a < n; ++a) {
      const double p = a == s ? 1.0 : env.probability(state, catalog[a]);
      mdp.p[(s * n + a) * n + a] += p;
      mdp.p[(s * n + a) * n + s] += 1.0 - p;
      for (std::size_t s2 = 0; s2 < n; ++s2) mdp.r[(s * n + a) * n + s2] = env.step_salary(catalog[s2]);
    }
  }
  return mdp;
}

}  // namespace careerpath
