#include <doctest.h>

#include "careerpath/pipeline.hpp"
#include "support.hpp"

using namespace careerpath;
using careerpath::testing::read_file;
using careerpath::testing::TempDir;

namespace {

// Small but complete experiment.
ExperimentConfig small_config(const std::filesystem::path& out) {
  ExperimentConfig c;
  c.synth.n_employees = 300;
  c.synth.n_vacancies = 3000;
  c.plausible_jobs = 40;
  c.transition_forest.n_trees = 10;
  c.salary_forest.n_trees = 10;
  c.train.episodes = 500;
  c.eval.n_sample = 500;
  c.eval.n_permutations = 200;
  c.eval.n_episodes_distribution = 100;
  c.output_dir = out.string();
  c.master_seed = 13;
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.algorithm = Algorithm::A2c;
  c.representation = StateRepresentation::FullHistory;
  c.synth.senior_missing_history_bias = 0.3;
  c.train.gamma = 0.95;
  c.eval.distribution_start = StartDistribution::Uniform;
  c.master_seed = 99;
  const Json j = to_json(c);
  const auto back = config_from_json(j);
  CHECK(back == c);
  CHECK(to_json(back).dump() == j.dump());
  CHECK(config_from_json(Json::object()) == ExperimentConfig{});
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const Json& j) {
    try {
      config_from_json(j).validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  Json j = to_json(ExperimentConfig{});
  CHECK(field_of(j) == "<none>");
  Json a = j;
  a["train"]["alpha"] = 3.0;
  CHECK(field_of(a) == "train.alpha");
  Json b = j;
  b["synth"]["colour"] = 1;
  CHECK(field_of(b) == "synth.colour");
  Json c = j;
  c["representation"] = "full_history";
  CHECK(field_of(c) == "algorithm");
  Json d = j;
  d["eval"]["n_sample"] = -5;
  CHECK(field_of(d) == "eval.n_sample");
  Json e = j;
  e["transition_forest"]["n_trees"] = 0;
  CHECK(field_of(e) == "transition_forest.n_trees");
  Json f = j;
  f["algorithm"] = "ppo";
  CHECK(field_of(f) == "algorithm");
  Json g = j;
  g["synth"]["salary_mean_eur"] = 1000.0;
  CHECK(field_of(g).starts_with("synth"));
}

TEST_CASE("seed plan streams differ and are stable") {
  const auto a = SeedPlan::derive(1), b = SeedPlan::derive(1), c = SeedPlan::derive(2);
  CHECK(a.train == b.train);
  CHECK(a.train != c.train);
  CHECK(a.synth != a.train);
  CHECK(a.fit_transition != a.fit_salary);
}

TEST_CASE("tabular + full history fails before any work") {
  TempDir dir;
  auto c = small_config(dir / "run");
  c.representation = StateRepresentation::FullHistory;
  c.algorithm = Algorithm::Sarsa;
  CHECK_THROWS_AS(run_pipeline(c), ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir / "run"));
}

TEST_CASE("pipeline end to end") {
  TempDir dir;
  const auto c = small_config(dir / "run");
  std::vector<std::string> log;
  run_pipeline(c, [&](std::string_view line) { log.emplace_back(line); });
  const ArtifactPaths paths{c.output_dir};
  for (const auto& p : {paths.data() / "work_experience.csv", paths.transition_model(), paths.salary_model(),
                        paths.policy(), paths.training_log(), paths.comparison_csv(), paths.comparison_txt(),
                        paths.distribution_csv(), paths.config(), paths.manifest()})
    CHECK(std::filesystem::exists(p));
  CHECK(log.size() >= 10);
  CHECK(verify_manifest(paths.root).empty());
  CHECK(config_from_json(read_json(paths.config())) == c);

  SUBCASE("same seed gives identical reports") {
    auto again = c;
    again.output_dir = (dir / "again").string();
    run_pipeline(again);
    const ArtifactPaths other{again.output_dir};
    CHECK(read_file(paths.comparison_csv()) == read_file(other.comparison_csv()));
    CHECK(read_file(paths.distribution_csv()) == read_file(other.distribution_csv()));
    CHECK(read_file(paths.policy()) == read_file(other.policy()));
  }
  SUBCASE("tampering is detected") {
    testing::write_file(paths.comparison_csv(), "edited\n");
    CHECK(verify_manifest(paths.root).size() == 1);
  }
  SUBCASE("a failing stage leaves earlier artifacts intact") {
    const auto before = read_file(paths.transition_model());
    std::filesystem::remove(paths.salary_model());
    CHECK_THROWS(run_stage(c, Stage::Train));
    CHECK(read_file(paths.transition_model()) == before);
    CHECK(std::filesystem::exists(paths.policy()));
  }
  SUBCASE("stages need their inputs") {
    auto fresh = c;
    fresh.output_dir = (dir / "fresh").string();
    CHECK_THROWS_AS(run_stage(fresh, Stage::Evaluate), std::runtime_error);
  }
  SUBCASE("recommend from artifacts") {
    const auto ds = load_dataset(paths.data());
    const auto model = transition_model_from_json(read_json(paths.transition_model()));
    const JobId start = model.catalog().front();
    testing::write_file(dir / "h.csv", "employee_id,occupation_code,industry_code,start_date,end_date\n"
                                       "me," + std::to_string(start.occupation) + "," +
                                           std::to_string(start.industry) + ",2018-01-01,2020-01-01\n");
    const auto a = recommend_from_artifacts(c, dir / "h.csv", 12);
    const auto b = recommend_from_artifacts(c, dir / "h.csv", 12);
    CHECK(a.steps.size() == 12);
    CHECK(recommendation_text(a) == recommendation_text(b));
    CHECK(a.method == "exact");
    testing::write_file(dir / "bad.csv", "employee_id,occupation_code,industry_code,start_date,end_date\n"
                                         "me,999,999,2018-01-01,2020-01-01\n");
    CHECK_THROWS_AS(recommend_from_artifacts(c, dir / "bad.csv", 12), std::invalid_argument);
  }
}

TEST_CASE("recommend") {
  const std::vector<WorkExperienceRecord> history = {testing::record("me", {0, 0}, "2015-01-01", "2020-01-01")};
  SUBCASE("single-job world stays put") {
    const Env env = testing::table_env({1.0}, {40000.0}, 40);
    GreedyHighestExpectedRewardPolicy her;
    const auto rec = recommend(env, her, history, 40, 1);
    for (const auto& s : rec.steps) CHECK(s.action == JobId{0, 0});
    CHECK(rec.projected_income_eur == doctest::Approx(40 * 10000.0));
    CHECK(rec.expected_income_eur == doctest::Approx(40 * 10000.0));
  }
  SUBCASE("exact expectation agrees with Monte Carlo") {
    const Env env = testing::random_tiny_env(12, 3, 40);
    TrainConfig tc;
    tc.episodes = 3000;
    const TabularPolicy policy(q_learning_train(env, tc), "qlearning");
    const auto rec = recommend(env, policy, history, 40, 5);
    CHECK(rec.method == "exact");
    const double mc = monte_carlo_income(env, policy, history, 40, 6, 10000);
    CHECK(rec.expected_income_eur == doctest::Approx(mc).epsilon(0.02));
  }
  SUBCASE("full history uses simulation") {
    const Env env = testing::table_env({1.0, 0.5, 0.5, 1.0}, {40000.0, 60000.0}, 8, StateRepresentation::FullHistory);
    GreedyHighestExpectedRewardPolicy her;
    const auto rec = recommend(env, her, history, 8, 5, 2000);
    CHECK(rec.method == "monte_carlo");
    CHECK(rec.simulations == 2000);
    const State s = state_from_history(env, history);
    CHECK(s.history.size() == 1);
    CHECK(s.history[0].steps == 20);
  }
  SUBCASE("last job outside the catalog") {
    const Env env = testing::table_env({1.0}, {40000.0}, 40);
    const std::vector<WorkExperienceRecord> other = {testing::record("me", {5, 5}, "2015-01-01", "2020-01-01")};
    GreedyHighestExpectedRewardPolicy her;
    CHECK_THROWS_AS(recommend(env, her, other, 10, 1), std::invalid_argument);
  }
}
