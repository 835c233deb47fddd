#include <doctest.h>

#include <cmath>
#include <numeric>

#include "careerpath/eval.hpp"
#include "support.hpp"

using namespace careerpath;
using careerpath::testing::record;

namespace {

double flat_salary(JobId j) { return 1000.0 * (j.occupation + 1); }

class StayPolicy final : public Policy {
 public:
  JobId act(const Env&, const State& s, Rng&) const override { return s.current_job; }
  std::string name() const override { return "stay"; }
};

// Independent oracle: all label assignments via bitmasks.
double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  auto diff = [&](unsigned mask) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? sa : sb) += pooled[i];
    return sa / na - sb / (n - na);
  };
  const double observed = diff((1u << na) - 1u);
  std::size_t extreme = 0, count = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
    ++count;
    extreme += std::abs(diff(mask)) >= std::abs(observed) - 1e-9 * std::max(1.0, std::abs(observed));
  }
  return static_cast<double>(extreme) / count;
}

}  // namespace

TEST_CASE("monthly_income_series") {
  SUBCASE("one job for twelve months") {
    const std::vector<WorkExperienceRecord> r = {record("e", {2, 0}, "2020-01-01", "2021-01-01")};
    const auto path = monthly_income_series(r, [](JobId) { return 3000.0; });
    CHECK(path.duration_months == 12);
    for (double m : path.monthly_income) CHECK(m == 3000.0);
    CHECK(factual_income(path) == 36000.0);
  }
  SUBCASE("overlapping jobs earn the mean") {
    const std::vector<WorkExperienceRecord> r = {record("e", {0, 0}, "2020-01-01", "2021-01-01"),
                                                 record("e", {1, 0}, "2020-01-01", "2021-01-01")};
    const auto path = monthly_income_series(r, flat_salary);
    for (double m : path.monthly_income) CHECK(m == doctest::Approx(1500.0));
  }
  SUBCASE("gaps carry the previous job") {
    const std::vector<WorkExperienceRecord> r = {record("e", {2, 0}, "2020-01-01", "2020-07-01"),
                                                 record("e", {0, 0}, "2020-10-01", "2021-01-01")};
    const auto path = monthly_income_series(r, flat_salary);
    REQUIRE(path.duration_months == 12);
    for (int m = 6; m < 9; ++m) CHECK(path.monthly_income[m] == 3000.0);
    CHECK(path.monthly_income[11] == 1000.0);
  }
  SUBCASE("truncation") {
    const std::vector<WorkExperienceRecord> r = {record("e", {0, 0}, "2000-01-01", "2020-01-01")};
    CHECK(monthly_income_series(r, flat_salary, 120).monthly_income.size() == 120);
  }
  CHECK_THROWS_AS(monthly_income_series({}, flat_salary), std::invalid_argument);
}

TEST_CASE("factual_income sums months") {
  ObservedPath zero;
  zero.monthly_income.assign(10, 0.0);
  CHECK(factual_income(zero) == 0.0);
  ObservedPath flat;
  flat.monthly_income.assign(120, 3000.0);
  CHECK(factual_income(flat) == 360000.0);
  Rng rng(3);
  ObservedPath random;
  for (int i = 0; i < 97; ++i) random.monthly_income.push_back(rng.uniform(1000, 9000));
  double oracle = 0.0;
  for (std::size_t i = 0; i < random.monthly_income.size(); ++i) oracle += random.monthly_income[i];
  CHECK(factual_income(random) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("generate_counterfactual") {
  const Env env = testing::constant_env(3, 1.0, {36000, 36000, 36000}, 40);
  StayPolicy stay;
  Rng rng(1);
  SUBCASE("staying in a constant job reproduces FI") {
    const std::vector<WorkExperienceRecord> r = {record("e", {1, 0}, "2015-01-01", "2019-02-01")};
    const auto path = monthly_income_series(r, [&](JobId j) { return env.monthly_salary(j); });
    CHECK(generate_counterfactual(stay, env, path, rng) == factual_income(path));
  }
  SUBCASE("zero months") {
    ObservedPath path;
    path.start_job = {0, 0};
    CHECK(generate_counterfactual(stay, env, path, rng) == 0.0);
  }
  SUBCASE("frozen seed") {
    const Env noisy = testing::random_tiny_env(5, 3, 40);
    const std::vector<WorkExperienceRecord> r = {record("e", {1, 0}, "2015-01-01", "2019-02-01")};
    const auto path = monthly_income_series(r, [&](JobId j) { return noisy.monthly_salary(j); });
    GreedyHighestExpectedRewardPolicy her;
    Rng a(9), b(9);
    CHECK(generate_counterfactual(her, noisy, path, a) == generate_counterfactual(her, noisy, path, b));
  }
}

TEST_CASE("compare_policies") {
  const auto catalog = testing::jobs(6);
  const Env env = testing::table_env(std::vector<double>(36, 1.0), {30000, 34000, 41000, 45000, 52000, 60000}, 40);
  const auto careers = testing::aligned_careers(catalog, 40, 4);
  std::vector<ObservedPath> paths;
  for (const auto& recs : careers.per_employee)
    paths.push_back(monthly_income_series(recs, [&](JobId j) { return env.monthly_salary(j); }));

  SUBCASE("replaying observed careers changes nothing") {
    const testing::ReplayPolicy replay(careers.plans);
    const auto r = compare_policies(replay, env, paths, CompareConfig{20000, 1000, 1, 1});
    CHECK(r.change_pct == 0.0);
    CHECK(r.gainers_pct == 0.0);
    CHECK(r.losers_pct == 0.0);
    CHECK(r.mean_fi_eur == r.mean_cfi_eur);
    CHECK(r.n_paths == paths.size());
  }
  SUBCASE("report statistics match an independent accumulation") {
    GreedyHighestExpectedRewardPolicy her;
    const auto r = compare_policies(her, env, paths, CompareConfig{20000, 1000, 7, 2});
    double fi = 0.0, cfi = 0.0;
    std::size_t gain = 0, loss = 0;
    for (const auto& p : paths) {
      Rng rng(0);
      const double c = generate_counterfactual(her, env, p, rng);  // deterministic env and policy
      fi += factual_income(p);
      cfi += c;
      gain += c > factual_income(p);
      loss += c < factual_income(p);
    }
    CHECK(r.mean_fi_eur == doctest::Approx(fi / paths.size()).epsilon(1e-6));
    CHECK(r.mean_cfi_eur == doctest::Approx(cfi / paths.size()).epsilon(1e-6));
    CHECK(r.change_pct == doctest::Approx(100.0 * (cfi - fi) / fi).epsilon(1e-6));
    CHECK(r.gainers_pct == doctest::Approx(100.0 * gain / paths.size()));
    CHECK(r.losers_pct == doctest::Approx(100.0 * loss / paths.size()));
    CHECK(r.gainers_pct + r.losers_pct <= 100.0);
  }
  SUBCASE("deterministic for a seed and thread count independent") {
    const Env noisy = testing::table_env(std::vector<double>(36, 0.4), {30000, 34000, 41000, 45000, 52000, 60000}, 40);
    GreedyMostCommonPolicy common;
    const auto a = compare_policies(common, noisy, paths, CompareConfig{20000, 500, 3, 1});
    const auto b = compare_policies(common, noisy, paths, CompareConfig{20000, 500, 3, 4});
    CHECK(report_csv_row(a) == report_csv_row(b));
  }
  SUBCASE("paths outside the catalog are skipped") {
    auto extra = paths;
    extra.push_back(monthly_income_series(std::vector{record("x", {9, 9}, "2010-01-01", "2012-01-01")}, flat_salary));
    GreedyMostCommonPolicy common;
    const auto r = compare_policies(common, env, extra, CompareConfig{20000, 100, 3, 1});
    CHECK(r.skipped_paths == 1);
    CHECK(r.n_paths == paths.size());
  }
  SUBCASE("sampling") {
    const auto idx = sample_indices(100, 10, 5);
    CHECK(idx.size() == 10);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx == sample_indices(100, 10, 5));
    CHECK(sample_indices(5, 10, 5).size() == 5);
  }
}

TEST_CASE("permutation test") {
  Rng rng(1);
  SUBCASE("small inputs match brute force") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t na = 1 + rng.index(4), nb = 1 + rng.index(4);
      std::vector<double> a(na), b(nb);
      for (double& x : a) x = std::round(rng.uniform(0, 5));
      for (double& x : b) x = std::round(rng.uniform(0, 5));
      CHECK(permutation_test(a, b, 10000, rng) == brute_force_p(a, b));
      CHECK(permutation_test_exhaustive(a, b) == brute_force_p(a, b));
    }
  }
  SUBCASE("identical samples") {
    std::vector<double> a(50);
    for (double& x : a) x = rng.normal();
    CHECK(permutation_test(a, a, 2000, rng) >= 0.9);
  }
  SUBCASE("well separated samples") {
    std::vector<double> a(100), b(100);
    for (double& x : a) x = rng.normal(0, 1);
    for (double& x : b) x = rng.normal(5, 1);
    const double p = permutation_test(a, b, 2000, rng);
    CHECK(p < 0.01);
    CHECK(p >= 1.0 / 2001);
  }
  SUBCASE("affine invariance") {
    std::vector<double> a(30), b(30);
    for (double& x : a) x = rng.normal(0, 1);
    for (double& x : b) x = rng.normal(0.4, 1);
    std::vector<double> a2, b2;
    for (double x : a) a2.push_back(3 * x + 10);
    for (double x : b) b2.push_back(3 * x + 10);
    Rng r1(5), r2(5);
    CHECK(permutation_test(a, b, 3000, r1) == permutation_test(a2, b2, 3000, r2));
  }
}

TEST_CASE("distribution report") {
  SUBCASE("no hires keeps the start distribution") {
    const Env env = testing::constant_env(4, 0.0, {1, 2, 3, 4}, 10);
    GreedyHighestExpectedRewardPolicy her;
    const auto r = distribution_report(her, env, 500, {}, 3);
    std::size_t total = 0;
    for (const auto& c : r.start) total += c.count;
    CHECK(total == 500);
    CHECK(r.final.size() == r.start.size());
    for (const auto& c : r.start) {
      auto it = std::find_if(r.final.begin(), r.final.end(), [&](const JobCount& f) { return f.job == c.job; });
      REQUIRE(it != r.final.end());
      CHECK(it->count == c.count);
    }
  }
  SUBCASE("certain hires move all mass to the best job") {
    const Env env = testing::constant_env(4, 1.0, {1, 2, 3, 4}, 10);
    GreedyHighestExpectedRewardPolicy her;
    const auto r = distribution_report(her, env, 300, {1.0, 0.0, 0.0, 0.0}, 3);
    CHECK(r.final_share({3, 0}) == 1.0);
    REQUIRE(r.top_start(12).size() == 1);
    CHECK(r.top_start(12)[0].job == JobId{0, 0});
  }
  SUBCASE("CSV layout") {
    const Env env = testing::constant_env(4, 0.5, {1, 2, 3, 4}, 10);
    GreedyMostCommonPolicy common;
    const auto r = distribution_report(common, env, 100, {}, 3);
    testing::TempDir dir;
    write_distribution_csv(dir / "d.csv", r);
    const auto text = testing::read_file(dir / "d.csv");
    CHECK(text.starts_with("position,occupation,industry,count\n"));
    CHECK(text.find("final,") != std::string::npos);
  }
}

TEST_CASE("value iteration oracle") {
  SUBCASE("single action chain") {
    TinyMdp mdp;
    mdp.n_states = 1;
    mdp.n_actions = 1;
    mdp.horizon = 3;
    mdp.p = {1.0};
    mdp.r = {1.0};
    CHECK(value_iteration_oracle(mdp).q[0][0] == 3.0);
  }
  SUBCASE("agrees with enumeration of deterministic policies") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      TinyMdp mdp;
      mdp.n_states = 3;
      mdp.n_actions = 2;
      mdp.horizon = 3;
      mdp.p.resize(18);
      mdp.r.resize(18);
      for (std::size_t sa = 0; sa < 6; ++sa) {
        double total = 0.0;
        for (std::size_t s2 = 0; s2 < 3; ++s2) total += mdp.p[sa * 3 + s2] = rng.uniform();
        for (std::size_t s2 = 0; s2 < 3; ++s2) {
          mdp.p[sa * 3 + s2] /= total;
          mdp.r[sa * 3 + s2] = rng.uniform(-1, 1);
        }
      }
      const auto oracle = value_iteration_oracle(mdp);
      // 2^(3 states x 3 steps) time-indexed deterministic policies.
      std::vector<double> best(3, -1e300);
      for (unsigned code = 0; code < 512; ++code) {
        std::vector<std::vector<std::size_t>> pol(3, std::vector<std::size_t>(3));
        for (int t = 0; t < 3; ++t)
          for (int s = 0; s < 3; ++s) pol[t][s] = (code >> (t * 3 + s)) & 1u;
        const auto v = evaluate_policy(mdp, pol);
        for (int s = 0; s < 3; ++s) best[s] = std::max(best[s], v[s]);
      }
      for (int s = 0; s < 3; ++s) CHECK(oracle.v[0][s] == doctest::Approx(best[s]).epsilon(1e-12));
      const auto v_opt = evaluate_policy(mdp, oracle.policy);
      for (int s = 0; s < 3; ++s) CHECK(v_opt[s] == doctest::Approx(oracle.v[0][s]).epsilon(1e-12));
    }
  }
  SUBCASE("gamma 0 picks the immediate reward") {
    const Env env = testing::random_tiny_env(3);
    auto mdp = tiny_mdp_from_env(env);
    mdp.gamma = 0.0;
    const auto oracle = value_iteration_oracle(mdp);
    for (std::size_t s = 0; s < 3; ++s) {
      std::size_t best = 0;
      double best_r = -1.0;
      for (std::size_t a = 0; a < 3; ++a) {
        double r = 0.0;
        for (std::size_t s2 = 0; s2 < 3; ++s2) r += mdp.prob(s, a, s2) * mdp.reward(s, a, s2);
        if (r > best_r) best_r = r, best = a;
      }
      CHECK(oracle.policy[0][s] == best);
    }
  }
  SUBCASE("malformed tensors") {
    TinyMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.horizon = 1;
    mdp.p = {0.5, 0.2, 1.0, 0.0};
    mdp.r = {0, 0, 0, 0};
    CHECK_THROWS_AS(value_iteration_oracle(mdp), std::invalid_argument);
  }
}
