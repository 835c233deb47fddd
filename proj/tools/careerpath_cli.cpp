// careerpath command line: one subcommand per pipeline stage plus recommend.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "careerpath/careerpath.h"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
  bool quiet = false;
  std::vector<std::string> overrides;  // field=value
  std::string history;
  int horizon = 40;
  std::string recommendation_csv;
};

int exit_code(cp_status s) { return s == CP_OK ? 0 : s == CP_ERR_RUNTIME ? kExitRuntime : kExitValidation; }

int report(cp_status s) {
  if (s != CP_OK) std::fprintf(stderr, "error: %s\n", cp_last_error());
  return exit_code(s);
}

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

// Config from file (or defaults) with command line overrides applied.
cp_status make_config(const Options& o, cp_config** out) {
  *out = nullptr;
  cp_config* config = nullptr;
  cp_status s = o.config_path.empty() ? cp_config_default(&config) : cp_config_load(o.config_path.c_str(), &config);
  if (s != CP_OK) return s;
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      cp_config_free(config);
      std::fprintf(stderr, "error: --set expects field=value, got '%s'\n", kv.c_str());
      return CP_ERR_VALIDATION;
    }
    s = cp_config_set(config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (s != CP_OK) break;
  }
  if (s == CP_OK && o.seed) s = cp_config_set_seed(config, *o.seed);
  if (s == CP_OK && !o.output.empty()) s = cp_config_set_output(config, o.output.c_str());
  if (s == CP_OK) s = cp_config_validate(config);
  if (s != CP_OK) {
    cp_config_free(config);
    return s;
  }
  *out = config;
  return CP_OK;
}

// make_config prints its own message when the library was not involved.
int fail_config(cp_status s) { return cp_last_error()[0] ? report(s) : exit_code(s); }

int run_stage(const Options& o, std::optional<cp_stage> stage) {
  cp_config* config = nullptr;
  if (cp_status s = make_config(o, &config); s != CP_OK) return fail_config(s);
  const cp_log_fn log = o.quiet ? nullptr : print_line;
  const cp_status s = stage ? cp_run_stage(config, *stage, log, nullptr) : cp_run_pipeline(config, log, nullptr);
  cp_config_free(config);
  return report(s);
}

int run_recommend(const Options& o) {
  cp_config* config = nullptr;
  if (cp_status s = make_config(o, &config); s != CP_OK) return fail_config(s);
  char* text = nullptr;
  const cp_status s = cp_recommend(config, o.history.c_str(), o.horizon,
                                   o.recommendation_csv.empty() ? nullptr : o.recommendation_csv.c_str(), &text);
  cp_config_free(config);
  if (s == CP_OK && !o.quiet) std::fputs(text, stdout);
  cp_string_free(text);
  return report(s);
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd->add_option("--output", o.output, "Artifact directory (overrides the config)");
  cmd->add_flag("--quiet", o.quiet, "Only print errors");
  cmd->add_option("--set", o.overrides, "Override a config field, e.g. --set train.episodes=5000");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Career path recommendation: synthetic market data, fitted environment, RL agents"};
  app.set_version_flag("--version", std::string(cp_version()));
  app.require_subcommand(1);
  Options o;

  struct StageCommand {
    const char* name;
    const char* help;
    std::optional<cp_stage> stage;
  };
  const StageCommand stages[] = {
      {"generate-data", "Generate a synthetic labour-market dataset", CP_STAGE_GENERATE},
      {"fit-models", "Fit the transition and salary forests", CP_STAGE_FIT},
      {"train", "Train the configured agent", CP_STAGE_TRAIN},
      {"evaluate", "Compare observed and recommended incomes", CP_STAGE_EVALUATE},
      {"distribution-report", "Roll out the policy and count visited jobs", CP_STAGE_DISTRIBUTION},
      {"pipeline", "Run every stage in order", std::nullopt},
  };
  std::optional<cp_stage> chosen;
  bool pipeline = false;
  for (const auto& sc : stages) {
    auto* cmd = app.add_subcommand(sc.name, sc.help);
    add_common(cmd, o);
    cmd->callback([&chosen, &pipeline, sc] {
      chosen = sc.stage;
      pipeline = !sc.stage;
    });
  }
  auto* rec = app.add_subcommand("recommend", "Recommend a career path for a work history");
  add_common(rec, o);
  rec->add_option("--history", o.history, "Work history CSV (work_experience.csv columns)")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--horizon", o.horizon, "Steps to plan ahead")->check(CLI::PositiveNumber);
  rec->add_option("--csv", o.recommendation_csv, "Also write the path as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  if (rec->parsed()) return run_recommend(o);
  return run_stage(o, pipeline ? std::nullopt : chosen);
}
