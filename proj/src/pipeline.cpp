#include "careerpath/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace careerpath {

namespace {

constexpr std::string_view kToolVersion = "1.0.0";

void say(const LogFn& log, const std::string& text) {
  if (log) log(text);
}

// Re-labels "<prefix>.<field> must ..." messages from module validators.
[[noreturn]] void rethrow_as_config_error(const std::invalid_argument& e, std::string_view module_prefix,
                                          const std::string& field) {
  std::string msg = e.what();
  std::string path = field;
  if (msg.starts_with(module_prefix)) {
    msg.erase(0, module_prefix.size());
    const auto space = msg.find(' ');
    if (space != std::string::npos && msg.front() == '.') {
      path += msg.substr(0, space);
      msg.erase(0, space + 1);
    } else if (!msg.empty() && msg.front() == ' ') {
      msg.erase(0, 1);
    }
  }
  throw ConfigError(path, msg);
}

template <typename Fn>
void checked(Fn&& fn, std::string_view module_prefix, const std::string& field) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    rethrow_as_config_error(e, module_prefix, field);
  }
}

std::string_view start_name(StartDistribution s) { return s == StartDistribution::Uniform ? "uniform" : "empirical"; }

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Sarsa: return "sarsa";
    case Algorithm::QLearning: return "qlearning";
    case Algorithm::Dqn: return "dqn";
    case Algorithm::A2c: return "a2c";
    case Algorithm::GreedyCommon: return "greedy_common";
    case Algorithm::GreedyHer: return "greedy_her";
  }
  return "qlearning";
}

Algorithm parse_algorithm(std::string_view text) {
  for (auto a : {Algorithm::Sarsa, Algorithm::QLearning, Algorithm::Dqn, Algorithm::A2c, Algorithm::GreedyCommon,
                 Algorithm::GreedyHer})
    if (text == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(text) +
                              "' (expected sarsa, qlearning, dqn, a2c, greedy_common or greedy_her)");
}

bool is_tabular(Algorithm a) { return a == Algorithm::Sarsa || a == Algorithm::QLearning; }

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Generate: return "generate-data";
    case Stage::Fit: return "fit-models";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
    case Stage::Distribution: return "distribution-report";
  }
  return "pipeline";
}

void ExperimentConfig::validate() const {
  checked([&] { synth.validate(); }, "synth", "synth");
  if (synth.n_employees > 10'000'000) throw ConfigError("synth.n_employees", "must be at most 10000000");
  if (plausible_jobs == 0) throw ConfigError("plausible_jobs", "must be positive");
  checked([&] { transition_forest.validate(); }, "forest", "transition_forest");
  checked([&] { salary_forest.validate(); }, "forest", "salary_forest");
  checked([&] { env.validate(); }, "env", "env");
  checked([&] { train.validate(); }, "train", "train");
  checked([&] { net.validate(); }, "net", "net");
  if (!(train_start_empirical >= 0.0 && train_start_empirical <= 1.0))
    throw ConfigError("train_start_empirical", "must be in [0, 1]");
  if (is_tabular(algorithm) && representation != StateRepresentation::LastJob)
    throw ConfigError("algorithm", std::string(to_string(algorithm)) +
                                       " is tabular and needs representation last_job (got full_history)");
  if (train.step_in_state && !is_tabular(algorithm))
    throw ConfigError("train.step_in_state", "only applies to tabular algorithms");
  if (eval.n_sample == 0) throw ConfigError("eval.n_sample", "must be positive");
  if (eval.n_permutations == 0) throw ConfigError("eval.n_permutations", "must be positive");
  if (eval.n_episodes_distribution == 0) throw ConfigError("eval.n_episodes_distribution", "must be positive");
  if (eval.max_months < 0) throw ConfigError("eval.max_months", "must be nonnegative");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "experiment";
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["algorithm"] = to_string(c.algorithm);
  j["representation"] = to_string(c.representation);
  j["plausible_jobs"] = c.plausible_jobs;
  j["synth"] = to_json(c.synth);
  j["transition_forest"] = to_json(c.transition_forest);
  j["salary_forest"] = to_json(c.salary_forest);
  j["env"] = to_json(c.env);
  j["train"] = to_json(c.train);
  j["train_start_empirical"] = c.train_start_empirical;
  j["net"] = to_json(c.net);
  j["eval"] = {{"n_sample", c.eval.n_sample},
               {"n_permutations", c.eval.n_permutations},
               {"n_episodes_distribution", c.eval.n_episodes_distribution},
               {"max_months", c.eval.max_months},
               {"distribution_start", start_name(c.eval.distribution_start)},
               {"threads", c.eval.threads}};
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw FormatError("", "config must be a JSON object");
    if (j.contains("format_version")) {
      if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kFormatVersion)
        throw FormatError("format_version", "unsupported (this build reads " + std::to_string(kFormatVersion) + ")");
    }
    if (j.contains("kind") && j["kind"] != "experiment") throw FormatError("kind", "expected 'experiment'");
    auto number = [&](const char* key, auto& out) {
      if (!j.contains(key)) return;
      using T = std::remove_reference_t<decltype(out)>;
      const Json& v = j[key];
      if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw FormatError(key, "expected a number");
      } else {
        if (!v.is_number_unsigned()) throw FormatError(key, "expected a nonnegative integer");
      }
      out = v.get<T>();
    };
    auto text = [&](const char* key) -> std::optional<std::string> {
      if (!j.contains(key)) return std::nullopt;
      if (!j[key].is_string()) throw FormatError(key, "expected a string");
      return j[key].get<std::string>();
    };
    for (const auto& [key, value] : j.items()) {
      static const std::set<std::string> known = {
          "format_version", "kind",  "master_seed", "output_dir", "algorithm", "representation", "plausible_jobs",
          "synth", "transition_forest", "salary_forest", "env", "train", "train_start_empirical", "net", "eval"};
      if (!known.contains(key)) throw FormatError(key, "unknown field");
    }
    number("master_seed", c.master_seed);
    if (auto s = text("output_dir")) c.output_dir = *s;
    if (auto s = text("algorithm")) {
      try {
        c.algorithm = parse_algorithm(*s);
      } catch (const std::invalid_argument& e) {
        throw FormatError("algorithm", e.what());
      }
    }
    if (auto s = text("representation")) {
      try {
        c.representation = parse_representation(*s);
      } catch (const std::invalid_argument& e) {
        throw FormatError("representation", e.what());
      }
    }
    number("plausible_jobs", c.plausible_jobs);
    number("train_start_empirical", c.train_start_empirical);
    if (j.contains("synth")) from_json(j["synth"], c.synth, "synth");
    if (j.contains("transition_forest")) from_json(j["transition_forest"], c.transition_forest, "transition_forest");
    if (j.contains("salary_forest")) from_json(j["salary_forest"], c.salary_forest, "salary_forest");
    if (j.contains("env")) from_json(j["env"], c.env, "env");
    if (j.contains("train")) from_json(j["train"], c.train, "train");
    if (j.contains("net")) from_json(j["net"], c.net, "net");
    if (j.contains("eval")) {
      const Json& e = j["eval"];
      if (!e.is_object()) throw FormatError("eval", "expected an object");
      for (const auto& [key, value] : e.items()) {
        const std::string field = "eval." + key;
        if (key == "n_sample" || key == "n_permutations" || key == "n_episodes_distribution" || key == "threads") {
          if (!value.is_number_unsigned()) throw FormatError(field, "expected a nonnegative integer");
          if (key == "n_sample") c.eval.n_sample = value.get<std::size_t>();
          if (key == "n_permutations") c.eval.n_permutations = value.get<std::size_t>();
          if (key == "n_episodes_distribution") c.eval.n_episodes_distribution = value.get<std::size_t>();
          if (key == "threads") c.eval.threads = value.get<unsigned>();
        } else if (key == "max_months") {
          if (!value.is_number_integer()) throw FormatError(field, "expected an integer");
          c.eval.max_months = value.get<int>();
        } else if (key == "distribution_start") {
          if (value == "uniform")
            c.eval.distribution_start = StartDistribution::Uniform;
          else if (value == "empirical")
            c.eval.distribution_start = StartDistribution::Empirical;
          else
            throw FormatError(field, "expected uniform or empirical");
        } else {
          throw FormatError(field, "unknown field");
        }
      }
    }
  } catch (const FormatError& e) {
    const std::string what = e.what();
    const std::string prefix = e.field() + ": ";
    throw ConfigError(e.field().empty() ? "config" : e.field(),
                      what.starts_with(prefix) ? what.substr(prefix.size()) : what);
  } catch (const Json::exception& e) {
    throw ConfigError("config", e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

SeedPlan SeedPlan::derive(std::uint64_t master_seed) {
  SeedPlan s;
  s.synth = Rng::derive(master_seed, "synth");
  s.fit_transition = Rng::derive(master_seed, "fit.transition");
  s.fit_salary = Rng::derive(master_seed, "fit.salary");
  s.train = Rng::derive(master_seed, "train");
  s.eval = Rng::derive(master_seed, "eval");
  return s;
}

LoadedEnv load_env(const ArtifactPaths& paths, const EnvConfig& env_config) {
  LoadedEnv out;
  out.transition = std::make_shared<TransitionModel>(transition_model_from_json(read_json(paths.transition_model())));
  out.salary = std::make_shared<SalaryModel>(salary_model_from_json(read_json(paths.salary_model())));
  auto source = std::make_shared<ForestTransitions>(out.transition, env_config);
  out.env = std::make_shared<Env>(env_config, out.transition->catalog(), source, out.salary->table(),
                                  out.transition->representation());
  return out;
}

namespace {

void require_file(const std::filesystem::path& p, Stage needed_by, std::string_view produced_by) {
  if (!std::filesystem::exists(p))
    throw std::runtime_error(std::string(to_string(needed_by)) + ": missing " + p.string() + " (run " +
                             std::string(produced_by) + " first)");
}

MarketDataset load_preprocessed(const ArtifactPaths& paths, Stage stage) {
  require_file(paths.data() / "work_experience.csv", stage, "generate-data");
  return preprocess(load_dataset(paths.data()));
}

std::vector<ObservedPath> observed_paths(const MarketDataset& ds, const SalaryModel& salary, int max_months) {
  std::vector<ObservedPath> out;
  for (const auto& h : employee_histories(ds))
    out.push_back(monthly_income_series(h.records, [&](JobId j) { return salary.monthly(j); }, max_months));
  return out;
}

// Observed start-job frequencies over the env catalog.
std::vector<double> empirical_start_weights(const Env& env, const MarketDataset& ds) {
  std::vector<double> w(env.catalog().size(), 0.0);
  for (const auto& h : employee_histories(ds)) {
    const JobId start = h.records.front().job;
    if (env.in_catalog(start)) w[env.index_of(start)] += 1.0;
  }
  double total = 0.0;
  for (double x : w) total += x;
  if (total > 0.0)
    for (double& x : w) x /= total;
  return w;
}

void stage_generate(const ExperimentConfig& c, const ArtifactPaths& paths, const SeedPlan& seeds, const LogFn& log) {
  SynthConfig synth = c.synth;
  synth.seed = seeds.synth;
  SynthTruth truth;
  const auto ds = generate_synthetic(synth, &truth);
  save_dataset(paths.data(), ds);
  say(log, "generated " + std::to_string(ds.experiences.size()) + " experience records, " +
               std::to_string(ds.vacancies.size()) + " vacancies, " + std::to_string(ds.applications.size()) +
               " applications (" + std::to_string(truth.senior_hires_history_deleted) + " of " +
               std::to_string(truth.senior_hires) + " senior hires lost history)");
}

void stage_fit(const ExperimentConfig& c, const ArtifactPaths& paths, const SeedPlan& seeds, const LogFn& log) {
  const auto ds = load_preprocessed(paths, Stage::Fit);
  const auto plausible = plausible_jobs(ds, c.plausible_jobs);
  if (plausible.fewer_than_requested)
    say(log, "warning: only " + std::to_string(plausible.jobs.size()) + " distinct jobs (requested " +
                 std::to_string(c.plausible_jobs) + ")");
  ForestParams tp = c.transition_forest;
  tp.seed = seeds.fit_transition;
  TransitionTrainingSet diag;
  const auto transition = TransitionModel::fit(ds, c.representation, plausible.jobs, tp, &diag);
  ForestParams sp = c.salary_forest;
  sp.seed = seeds.fit_salary;
  const auto salary = fit_salary_model(ds.vacancies, plausible.jobs, sp);
  write_json(paths.transition_model(), to_json(transition));
  write_json(paths.salary_model(), to_json(salary));
  say(log, "fit transition model on " + std::to_string(diag.labels.size()) + " applications (" +
               std::to_string(diag.skipped_unknown_candidate) + " skipped) and salary model on " +
               std::to_string(ds.vacancies.size()) + " vacancies; catalog " + std::to_string(plausible.jobs.size()) +
               " jobs");
}

void stage_train(const ExperimentConfig& c, const ArtifactPaths& paths, const SeedPlan& seeds, const LogFn& log) {
  require_file(paths.transition_model(), Stage::Train, "fit-models");
  const auto loaded = load_env(paths, c.env);
  const Env& env = *loaded.env;
  if (env.representation() != c.representation)
    throw std::runtime_error("train: fitted models use " + std::string(to_string(env.representation())) +
                             " but the config asks for " + std::string(to_string(c.representation)));

  TrainConfig tc = c.train;
  tc.seed = seeds.train;
  if (c.train_start_empirical > 0.0) {
    const auto ds = load_preprocessed(paths, Stage::Train);
    const auto emp = empirical_start_weights(env, ds);
    const double n = static_cast<double>(emp.size());
    tc.start_weights.resize(emp.size());
    for (std::size_t i = 0; i < emp.size(); ++i)
      tc.start_weights[i] = (1.0 - c.train_start_empirical) / n + c.train_start_empirical * emp[i];
  }

  PolicyArtifact artifact;
  artifact.algorithm = std::string(to_string(c.algorithm));
  artifact.representation = c.representation;
  artifact.catalog = env.catalog();
  artifact.env = c.env;
  Json stats;
  stats["format_version"] = kFormatVersion;
  stats["kind"] = "training_log";
  stats["algorithm"] = artifact.algorithm;
  switch (c.algorithm) {
    case Algorithm::Sarsa:
      artifact.table = sarsa_train(env, tc);
      stats["episodes"] = tc.episodes;
      break;
    case Algorithm::QLearning:
      artifact.table = q_learning_train(env, tc);
      stats["episodes"] = tc.episodes;
      break;
    case Algorithm::Dqn: {
      DqnTrainStats s;
      auto policy = dqn_train(env, tc, c.net, &s);
      artifact.net = policy.net();
      stats["episodes"] = tc.episodes;
      stats["updates"] = s.updates;
      stats["transitions"] = s.transitions;
      stats["last_loss"] = s.last_loss;
      break;
    }
    case Algorithm::A2c: {
      A2cTrainStats s;
      auto policy = a2c_train(env, tc, c.net, &s);
      artifact.net = policy.actor();
      artifact.critic = policy.critic();
      stats["episodes"] = tc.episodes;
      stats["updates"] = s.updates;
      stats["reward_scale"] = s.reward_scale;
      stats["max_softmax_sum_error"] = s.max_softmax_sum_error;
      stats["final_entropy"] = s.final_entropy;
      break;
    }
    case Algorithm::GreedyCommon:
    case Algorithm::GreedyHer:
      stats["episodes"] = 0;
      break;
  }
  write_json(paths.policy(), to_json(artifact));
  write_json(paths.training_log(), stats);
  say(log, "trained " + artifact.algorithm + " on " + std::to_string(env.catalog().size()) + " jobs");
}

PolicyArtifact load_policy(const ArtifactPaths& paths, Stage stage) {
  require_file(paths.policy(), stage, "train");
  return policy_artifact_from_json(read_json(paths.policy()));
}

void stage_evaluate(const ExperimentConfig& c, const ArtifactPaths& paths, const SeedPlan& seeds, const LogFn& log) {
  const auto artifact = load_policy(paths, Stage::Evaluate);
  const auto loaded = load_env(paths, c.env);
  const auto policy = artifact.make_policy();
  const auto ds = load_preprocessed(paths, Stage::Evaluate);
  const auto paths_observed = observed_paths(ds, *loaded.salary, c.eval.max_months);
  CompareConfig cc;
  cc.n_sample = c.eval.n_sample;
  cc.n_permutations = c.eval.n_permutations;
  cc.seed = seeds.eval;
  cc.threads = c.eval.threads;
  const auto report = compare_policies(*policy, *loaded.env, paths_observed, cc);
  std::filesystem::create_directories(paths.comparison_csv().parent_path());
  write_reports_csv(paths.comparison_csv(), std::span(&report, 1));
  std::ofstream txt(paths.comparison_txt(), std::ios::binary);
  txt << report_text(report);
  if (!txt) throw std::runtime_error("cannot write " + paths.comparison_txt().string());
  char line[160];
  std::snprintf(line, sizeof line, "%s: mean FI %.2f, mean CFI %.2f, change %+.2f%%, p=%.4f over %zu paths",
                report.model.c_str(), report.mean_fi_eur, report.mean_cfi_eur, report.change_pct, report.p_value,
                report.n_paths);
  say(log, line);
}

void stage_distribution(const ExperimentConfig& c, const ArtifactPaths& paths, const SeedPlan& seeds,
                        const LogFn& log) {
  const auto artifact = load_policy(paths, Stage::Distribution);
  const auto loaded = load_env(paths, c.env);
  const auto policy = artifact.make_policy();
  std::vector<double> weights;
  if (c.eval.distribution_start == StartDistribution::Empirical)
    weights = empirical_start_weights(*loaded.env, load_preprocessed(paths, Stage::Distribution));
  const auto report = distribution_report(*policy, *loaded.env, c.eval.n_episodes_distribution, weights,
                                          Rng::derive(seeds.eval, "distribution"));
  std::filesystem::create_directories(paths.distribution_csv().parent_path());
  write_distribution_csv(paths.distribution_csv(), report);
  const auto top = report.top_final(1);
  if (!top.empty())
    say(log, "most common final job " + to_string(top.front().job) + " in " + std::to_string(top.front().count) +
                 " of " + std::to_string(report.n_episodes) + " episodes");
}

}  // namespace

void write_manifest(const ExperimentConfig& config) {
  const ArtifactPaths paths{config.output_dir};
  const auto seeds = SeedPlan::derive(config.master_seed);
  Json m;
  m["format_version"] = kFormatVersion;
  m["kind"] = "manifest";
  m["tool_version"] = kToolVersion;
  m["master_seed"] = config.master_seed;
  m["seeds"] = {{"synth", seeds.synth},
                {"fit.transition", seeds.fit_transition},
                {"fit.salary", seeds.fit_salary},
                {"train", seeds.train},
                {"eval", seeds.eval}};
  Json files = Json::array();
  for (const auto& e : scan_artifacts(paths.root))
    files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  m["files"] = std::move(files);
  write_json(paths.manifest(), m);
}

void run_stage(const ExperimentConfig& config, Stage stage, const LogFn& log) {
  config.validate();
  const ArtifactPaths paths{config.output_dir};
  std::filesystem::create_directories(paths.root);
  write_json(paths.config(), to_json(config));
  const auto seeds = SeedPlan::derive(config.master_seed);
  switch (stage) {
    case Stage::Generate: stage_generate(config, paths, seeds, log); break;
    case Stage::Fit: stage_fit(config, paths, seeds, log); break;
    case Stage::Train: stage_train(config, paths, seeds, log); break;
    case Stage::Evaluate: stage_evaluate(config, paths, seeds, log); break;
    case Stage::Distribution: stage_distribution(config, paths, seeds, log); break;
  }
  write_manifest(config);
}

void run_pipeline(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  for (auto s : {Stage::Generate, Stage::Fit, Stage::Train, Stage::Evaluate, Stage::Distribution}) {
    say(log, "[" + std::string(to_string(s)) + "]");
    run_stage(config, s, log);
  }
}

State state_from_history(const Env& env, std::span<const WorkExperienceRecord> history) {
  if (history.empty()) throw std::invalid_argument("recommend: empty history");
  const JobId current = history.back().job;
  if (!env.in_catalog(current))
    throw std::invalid_argument("recommend: last job " + to_string(current) + " is outside the catalog");
  State s = env.reset(current);
  if (env.representation() == StateRepresentation::LastJob) return s;
  // Observed stints in whole env steps; the current job keeps the recorded tenure.
  const double step_days = env.config().step_days();
  s.history.clear();
  for (const auto& r : history) {
    const int steps = std::max(1, static_cast<int>(std::lround(static_cast<double>(r.duration_days()) / step_days)));
    if (!s.history.empty() && s.history.back().job == r.job)
      s.history.back().steps += steps;
    else
      s.history.push_back({r.job, steps});
  }
  return s;
}

namespace {

Env horizon_env(const Env& env, int horizon_steps) {
  if (horizon_steps < 1) throw std::invalid_argument("recommend: horizon must be positive");
  return env.with_horizon(horizon_steps);
}

// Rolls out from an arbitrary state; t restarts at 0.
double rollout_from(const Env& env, const Policy& policy, State s, Rng& rng) {
  double total = 0.0;
  s.t = 0;
  for (int k = 0; k < env.config().horizon_steps; ++k) {
    const auto out = env.step(s, policy.act(env, s, rng), rng);
    total += out.reward_eur;
    s = out.next_state;
  }
  return total;
}

}  // namespace

double monte_carlo_income(const Env& base_env, const Policy& policy, std::span<const WorkExperienceRecord> history,
                          int horizon_steps, std::uint64_t seed, std::size_t simulations) {
  if (simulations == 0) throw std::invalid_argument("recommend: simulations must be positive");
  const Env env = horizon_env(base_env, horizon_steps);
  const State start = state_from_history(env, history);
  double sum = 0.0;
  for (std::size_t i = 0; i < simulations; ++i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    sum += rollout_from(env, policy, start, rng);
  }
  return sum / static_cast<double>(simulations);
}

Recommendation recommend(const Env& base_env, const Policy& policy, std::span<const WorkExperienceRecord> history,
                         int horizon_steps, std::uint64_t seed, std::size_t simulations) {
  const Env env = horizon_env(base_env, horizon_steps);
  State s = state_from_history(env, history);
  s.t = 0;
  Recommendation rec;
  Rng act_rng(Rng::derive(seed, "act"));
  for (int k = 0; k < horizon_steps; ++k) {
    RecommendationStep step;
    step.step = k;
    step.job = s.current_job;
    step.action = policy.act(env, s, act_rng);
    step.hire_probability = env.probability(s, step.action);
    step.hired = step.hire_probability >= 0.5 && step.action != s.current_job;
    State next = s;
    ++next.t;
    if (step.hired) {
      next.current_job = step.action;
      next.history.push_back({step.action, 1});
    } else {
      next.history.back().steps += 1;
    }
    step.reward_eur = env.step_salary(next.current_job);
    rec.projected_income_eur += step.reward_eur;
    rec.steps.push_back(step);
    s = std::move(next);
  }

  if (env.representation() == StateRepresentation::LastJob) {
    // The state is the current job alone, so the job distribution is exact.
    const auto& catalog = env.catalog();
    const std::size_t n = catalog.size();
    std::vector<double> dist(n, 0.0), next(n);
    dist[env.index_of(history.back().job)] = 1.0;
    Rng rng(Rng::derive(seed, "propagate"));
    for (int k = 0; k < horizon_steps; ++k) {
      std::fill(next.begin(), next.end(), 0.0);
      double expected = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] == 0.0) continue;
        State si = env.reset(catalog[i]);
        si.t = k;
        const JobId a = policy.act(env, si, rng);
        const double p = env.probability(si, a);
        const std::size_t ai = env.index_of(a);
        next[ai] += dist[i] * p;
        next[i] += dist[i] * (1.0 - p);
      }
      for (std::size_t i = 0; i < n; ++i) expected += next[i] * env.step_salary(catalog[i]);
      rec.steps[static_cast<std::size_t>(k)].expected_reward_eur = expected;
      rec.expected_income_eur += expected;
      dist.swap(next);
    }
    rec.method = "exact";
  } else {
    const State start = state_from_history(env, history);
    std::vector<double> per_step(static_cast<std::size_t>(horizon_steps), 0.0);
    for (std::size_t i = 0; i < simulations; ++i) {
      Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
      State x = start;
      x.t = 0;
      for (int k = 0; k < horizon_steps; ++k) {
        const auto out = env.step(x, policy.act(env, x, rng), rng);
        per_step[static_cast<std::size_t>(k)] += out.reward_eur;
        x = out.next_state;
      }
    }
    for (int k = 0; k < horizon_steps; ++k) {
      const double v = per_step[static_cast<std::size_t>(k)] / static_cast<double>(simulations);
      rec.steps[static_cast<std::size_t>(k)].expected_reward_eur = v;
      rec.expected_income_eur += v;
    }
    rec.method = "monte_carlo";
    rec.simulations = simulations;
  }
  return rec;
}

void write_recommendation_csv(const std::filesystem::path& path, const Recommendation& rec) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,occupation,industry,action_occupation,action_industry,hire_probability,hired,reward_eur,"
         "expected_reward_eur\n";
  char buf[256];
  for (const auto& s : rec.steps) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%d,%.6f,%d,%.2f,%.2f\n", s.step, s.job.occupation, s.job.industry,
                  s.action.occupation, s.action.industry, s.hire_probability, s.hired ? 1 : 0, s.reward_eur,
                  s.expected_reward_eur);
    out << buf;
  }
}

std::string recommendation_text(const Recommendation& rec) {
  std::ostringstream out;
  char buf[256];
  out << "Recommended path (" << rec.steps.size() << " steps)\n";
  // Consecutive identical steps are printed once as a range.
  for (std::size_t i = 0; i < rec.steps.size();) {
    const auto& s = rec.steps[i];
    std::size_t j = i + 1;
    while (j < rec.steps.size() && rec.steps[j].job == s.job && rec.steps[j].action == s.action &&
           rec.steps[j].hired == s.hired)
      ++j;
    const std::string when = j - i == 1 ? "step " + std::to_string(s.step)
                                        : "steps " + std::to_string(s.step) + "-" + std::to_string(rec.steps[j - 1].step);
    if (s.action == s.job)
      std::snprintf(buf, sizeof buf, "  %-11s stay in %s\n", (when + ":").c_str(), to_string(s.job).c_str());
    else
      std::snprintf(buf, sizeof buf, "  %-11s in %s, apply to %s (p=%.3f) -> %s\n", (when + ":").c_str(),
                    to_string(s.job).c_str(), to_string(s.action).c_str(), s.hire_probability,
                    s.hired ? "hired" : "stay");
    out << buf;
    i = j;
  }
  std::snprintf(buf, sizeof buf, "Projected income along this path: %.2f EUR\n", rec.projected_income_eur);
  out << buf;
  if (rec.method == "exact")
    std::snprintf(buf, sizeof buf, "Expected income under the learned transitions: %.2f EUR (exact)\n",
                  rec.expected_income_eur);
  else
    std::snprintf(buf, sizeof buf, "Expected income under the learned transitions: %.2f EUR (%zu simulations)\n",
                  rec.expected_income_eur, rec.simulations);
  out << buf;
  return out.str();
}

Recommendation recommend_from_artifacts(const ExperimentConfig& config, const std::filesystem::path& history_csv,
                                        int horizon_steps) {
  config.validate();
  const ArtifactPaths paths{config.output_dir};
  require_file(paths.policy(), Stage::Train, "train");
  const auto artifact = policy_artifact_from_json(read_json(paths.policy()));
  const auto loaded = load_env(paths, config.env);
  // Recommendations follow the most probable action.
  const auto policy = artifact.make_policy(/*stochastic=*/false);
  auto table = load_work_experience(history_csv);
  if (table.records.empty()) throw std::invalid_argument("recommend: " + history_csv.string() + " has no records");
  std::stable_sort(table.records.begin(), table.records.end(),
                   [](const auto& a, const auto& b) { return a.start_date < b.start_date; });
  const auto seeds = SeedPlan::derive(config.master_seed);
  return recommend(*loaded.env, *policy, table.records, horizon_steps, Rng::derive(seeds.eval, "recommend"));
}

}  // namespace careerpath
