#include <doctest.h>

#include <cmath>

#include "careerpath/models.hpp"
#include "support.hpp"

using namespace careerpath;
using careerpath::testing::record;

TEST_CASE("representation names") {
  CHECK(parse_representation("last_job") == StateRepresentation::LastJob);
  CHECK(parse_representation(to_string(StateRepresentation::FullHistory)) == StateRepresentation::FullHistory);
  CHECK_THROWS_AS(parse_representation("both"), std::invalid_argument);
}

TEST_CASE("encode_state_action") {
  const JobId x{4, 2};
  const std::vector<WorkExperienceRecord> one = {record("e", x, "2020-01-01", "2020-12-31")};
  SUBCASE("same job sets both flags") {
    const auto f = encode_state_action(one, x, StateRepresentation::LastJob);
    REQUIRE(f.size() == kLastJobFeatureCount);
    CHECK(f == std::vector<double>{4, 2, 4, 2, 1, 1});
  }
  SUBCASE("never held target occupation") {
    const auto f = encode_state_action(one, JobId{7, 2}, StateRepresentation::FullHistory);
    REQUIRE(f.size() == kFullHistoryFeatureCount);
    CHECK(f[4] == 0.0);
    CHECK(f[5] == 1.0);
    CHECK(f[7] == 0.0);
    CHECK(f[8] == doctest::Approx(365.0));
    CHECK(f[10] == kNeverHeldDays);
  }
  SUBCASE("tenure and recency") {
    const std::vector<WorkExperienceRecord> h = {record("e", {1, 1}, "2018-01-01", "2019-01-01"),
                                                 record("e", {2, 1}, "2019-01-01", "2020-01-01")};
    const auto f = encode_state_action(h, JobId{1, 3}, StateRepresentation::FullHistory);
    CHECK(f[6] == doctest::Approx(365.0 + 365.0));
    CHECK(f[7] == doctest::Approx(365.0));
    CHECK(f[9] == 2.0);
    CHECK(f[10] == doctest::Approx(365.0));
  }
  SUBCASE("deterministic") {
    CHECK(encode_state_action(one, x, StateRepresentation::FullHistory) ==
          encode_state_action(one, x, StateRepresentation::FullHistory));
  }
  SUBCASE("empty history") {
    const std::vector<WorkExperienceRecord> none;
    CHECK_THROWS_AS(encode_state_action(none, x, StateRepresentation::LastJob), std::invalid_argument);
    const std::vector<Stint> no_stints;
    const auto f = encode_state_action(no_stints, x, StateRepresentation::FullHistory);
    CHECK(f[0] == kNoJobCode);
    CHECK(f[6] == 0.0);
  }
}

TEST_CASE("build_transition_training_set") {
  const auto m = testing::known_rate_market(1, 10);
  SUBCASE("one row per application") {
    const auto t = build_transition_training_set(m.dataset, StateRepresentation::LastJob);
    CHECK(t.features.rows() == m.dataset.applications.size());
    CHECK(t.skipped_unknown_candidate == 0);
  }
  SUBCASE("unknown candidates are skipped and counted") {
    auto ds = m.dataset;
    ds.applications.push_back({"ghost", parse_date("2020-01-01"), {1, 0}, Outcome::Hired});
    const auto t = build_transition_training_set(ds, StateRepresentation::LastJob);
    CHECK(t.skipped_unknown_candidate == 1);
    CHECK(t.features.rows() == m.dataset.applications.size());
  }
  SUBCASE("no prior history gives zero tenure under FullHistory") {
    WorkExperienceTable w;
    w.records = {record("a", {1, 0}, "2021-01-01", "2021-06-01")};
    const auto ds = make_dataset(w, {}, {{"a", parse_date("2020-01-01"), {1, 0}, Outcome::Hired}});
    const auto full = build_transition_training_set(ds, StateRepresentation::FullHistory);
    REQUIRE(full.features.rows() == 1);
    CHECK(full.zero_history_rows == 1);
    CHECK(full.features.at(0, 6) == 0.0);
    CHECK(full.labels[0] == 1);
    const auto last = build_transition_training_set(ds, StateRepresentation::LastJob);
    CHECK(last.features.rows() == 0);
    CHECK(last.skipped_empty_history == 1);
  }
  SUBCASE("bias shows up as zero-tenure senior hires") {
    SynthConfig c;
    c.n_employees = 3000;
    c.seed = 4;
    c.senior_missing_history_bias = 0.5;
    SynthTruth truth;
    const auto ds = preprocess(generate_synthetic(c, &truth));
    const auto t = build_transition_training_set(ds, StateRepresentation::FullHistory);
    std::size_t senior = 0, zero = 0, row = 0;
    const auto index = history_index(ds);
    for (const auto& a : ds.applications) {
      if (!index.contains(a.candidate_id)) continue;
      if (a.outcome == Outcome::Hired && truth.top_decile.contains(a.target_job)) {
        ++senior;
        zero += t.features.at(row, 7) == 0.0;
      }
      ++row;
    }
    REQUIRE(senior > 0);
    CHECK(static_cast<double>(zero) / senior > 0.25);
  }
}

TEST_CASE("transition_probability") {
  const auto m = testing::known_rate_market(2);
  ForestParams p;
  p.seed = 3;
  const auto model = TransitionModel::fit(m.dataset, StateRepresentation::LastJob, m.catalog, p);
  SUBCASE("recovers the known group rates") {
    for (JobId from : m.catalog)
      for (JobId to : m.catalog) {
        const std::vector<WorkExperienceRecord> h = {record("probe", from, "2015-01-01", "2020-01-01")};
        CHECK(transition_probability(model, h, to) == doctest::Approx(m.rate(from, to)).epsilon(0.05 / m.rate(from, to)));
      }
  }
  SUBCASE("applying to the current job still yields a probability") {
    const std::vector<WorkExperienceRecord> h = {record("probe", {1, 0}, "2015-01-01", "2020-01-01")};
    const double v = transition_probability(model, h, {1, 0});
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  SUBCASE("actions outside the catalog are rejected") {
    const std::vector<WorkExperienceRecord> h = {record("probe", {1, 0}, "2015-01-01", "2020-01-01")};
    CHECK_THROWS_AS(transition_probability(model, h, {9, 9}), std::out_of_range);
  }
  SUBCASE("LastJob ignores everything but the final record") {
    const std::vector<WorkExperienceRecord> a = {record("p", {0, 0}, "2010-01-01", "2011-01-01"),
                                                 record("p", {4, 0}, "2015-01-01", "2020-01-01")};
    const std::vector<WorkExperienceRecord> b = {record("p", {5, 0}, "2001-01-01", "2009-01-01"),
                                                 record("p", {2, 0}, "2009-02-01", "2014-01-01"),
                                                 record("p", {4, 0}, "2015-01-01", "2020-01-01")};
    for (JobId to : m.catalog) CHECK(model.probability(a, to) == model.probability(b, to));
  }
  SUBCASE("all-hired data predicts one") {
    auto ds = m.dataset;
    for (auto& a : ds.applications) a.outcome = Outcome::Hired;
    ForestParams q;
    q.n_trees = 5;
    const auto all = TransitionModel::fit(ds, StateRepresentation::LastJob, m.catalog, q);
    const std::vector<WorkExperienceRecord> h = {record("probe", {3, 0}, "2015-01-01", "2020-01-01")};
    CHECK(all.probability(h, {1, 0}) == 1.0);
  }
}

TEST_CASE("salary model") {
  const auto m = testing::known_rate_market(5);
  ForestParams p;
  p.seed = 1;
  const auto sm = fit_salary_model(m.dataset.vacancies, m.catalog, p);
  SUBCASE("table within 2% of vacancy means") {
    for (JobId j : m.catalog) {
      double sum = 0.0;
      int n = 0;
      for (const auto& v : m.dataset.vacancies)
        if (v.job == j) sum += v.annual_salary_eur, ++n;
      CHECK(sm.table().at(j) == doctest::Approx(sum / n).epsilon(0.02));
    }
  }
  SUBCASE("constant vacancies") {
    std::vector<Vacancy> vs(30, Vacancy{{1, 1}, 40000.0});
    const auto c = fit_salary_model(vs, {{1, 1}}, p);
    CHECK(c.table().at({1, 1}) == 40000.0);
    CHECK(quarterly_salary(c, {1, 1}) == 10000.0);
    CHECK(c.monthly({1, 1}) == doctest::Approx(3333.3333333));
    double total = 0.0;
    for (int q = 0; q < 40; ++q) total += quarterly_salary(c, {1, 1});
    CHECK(total == doctest::Approx(10 * 40000.0));
  }
  SUBCASE("jobs without vacancies extrapolate within the salary range") {
    const auto ext = fit_salary_model(m.dataset.vacancies, {{9, 4}}, p);
    double lo = 1e300, hi = 0.0;
    for (const auto& v : m.dataset.vacancies) lo = std::min(lo, v.annual_salary_eur), hi = std::max(hi, v.annual_salary_eur);
    CHECK(ext.table().at({9, 4}) >= lo);
    CHECK(ext.table().at({9, 4}) <= hi);
  }
  CHECK_THROWS_AS(fit_salary_model({}, m.catalog, p), std::invalid_argument);
  CHECK_THROWS_AS(sm.quarterly({9, 9}), std::out_of_range);
}
