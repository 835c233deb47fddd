#include "careerpath/careerpath.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "careerpath/pipeline.hpp"

struct cp_config {
  careerpath::ExperimentConfig value;
};

namespace {

using namespace careerpath;

thread_local std::string g_error;
thread_local std::string g_error_field;

cp_status fail(cp_status status, std::string message, std::string field = {}) {
  g_error = std::move(message);
  g_error_field = std::move(field);
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
cp_status guarded(Fn&& fn) noexcept {
  g_error.clear();
  g_error_field.clear();
  try {
    fn();
    return CP_OK;
  } catch (const ConfigError& e) {
    return fail(CP_ERR_VALIDATION, e.what(), e.field());
  } catch (const ParseError& e) {
    return fail(CP_ERR_VALIDATION, e.what());
  } catch (const MissingColumnError& e) {
    return fail(CP_ERR_VALIDATION, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CP_ERR_VALIDATION, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CP_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(CP_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(CP_ERR_RUNTIME, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

LogFn adapt(cp_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](std::string_view line) {
    const std::string copy(line);
    log(copy.c_str(), user);
  };
}

Stage to_stage(cp_stage s) {
  switch (s) {
    case CP_STAGE_GENERATE: return Stage::Generate;
    case CP_STAGE_FIT: return Stage::Fit;
    case CP_STAGE_TRAIN: return Stage::Train;
    case CP_STAGE_EVALUATE: return Stage::Evaluate;
    case CP_STAGE_DISTRIBUTION: return Stage::Distribution;
  }
  throw std::invalid_argument("unknown stage " + std::to_string(static_cast<int>(s)));
}

}  // namespace

#define CP_REQUIRE(ptr) \
  if (!(ptr)) return fail(CP_ERR_ARGUMENT, #ptr " is null")

extern "C" {

const char* cp_version(void) { return "1.0.0"; }

const char* cp_last_error(void) { return g_error.c_str(); }

const char* cp_last_error_field(void) { return g_error_field.c_str(); }

cp_status cp_config_default(cp_config** out) {
  CP_REQUIRE(out);
  return guarded([&] { *out = new cp_config{}; });
}

cp_status cp_config_load(const char* path, cp_config** out) {
  CP_REQUIRE(path);
  CP_REQUIRE(out);
  return guarded([&] { *out = new cp_config{load_config(path)}; });
}

cp_status cp_config_from_json(const char* json, cp_config** out) {
  CP_REQUIRE(json);
  CP_REQUIRE(out);
  return guarded([&] {
    Json j;
    try {
      j = Json::parse(json);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config", e.what());
    }
    *out = new cp_config{config_from_json(j)};
  });
}

void cp_config_free(cp_config* config) { delete config; }

cp_status cp_config_set_seed(cp_config* config, uint64_t seed) {
  CP_REQUIRE(config);
  config->value.master_seed = seed;
  return CP_OK;
}

cp_status cp_config_set_output(cp_config* config, const char* dir) {
  CP_REQUIRE(config);
  CP_REQUIRE(dir);
  return guarded([&] { config->value.output_dir = dir; });
}

cp_status cp_config_set(cp_config* config, const char* field, const char* json_value) {
  CP_REQUIRE(config);
  CP_REQUIRE(field);
  CP_REQUIRE(json_value);
  return guarded([&] {
    Json value;
    try {
      value = Json::parse(json_value);
    } catch (const Json::parse_error&) {
      // Bare words are taken as strings.
      value = std::string(json_value);
    }
    Json doc = to_json(config->value);
    Json* node = &doc;
    std::string_view rest = field;
    std::string path;
    while (true) {
      const auto dot = rest.find('.');
      const std::string key(rest.substr(0, dot));
      path += path.empty() ? key : "." + key;
      if (key.empty() || !node->is_object() || !node->contains(key))
        throw ConfigError(path, "unknown field");
      node = &(*node)[key];
      if (dot == std::string_view::npos) break;
      rest.remove_prefix(dot + 1);
    }
    *node = std::move(value);
    config->value = config_from_json(doc);
  });
}

cp_status cp_config_validate(const cp_config* config) {
  CP_REQUIRE(config);
  return guarded([&] { config->value.validate(); });
}

cp_status cp_config_to_json(const cp_config* config, char** out) {
  CP_REQUIRE(config);
  CP_REQUIRE(out);
  return guarded([&] { *out = dup_string(to_json(config->value).dump(2) + "\n"); });
}

void cp_string_free(char* s) { delete[] s; }

cp_status cp_run_stage(const cp_config* config, cp_stage stage, cp_log_fn log, void* user) {
  CP_REQUIRE(config);
  return guarded([&] { run_stage(config->value, to_stage(stage), adapt(log, user)); });
}

cp_status cp_run_pipeline(const cp_config* config, cp_log_fn log, void* user) {
  CP_REQUIRE(config);
  return guarded([&] { run_pipeline(config->value, adapt(log, user)); });
}

cp_status cp_recommend(const cp_config* config, const char* history_csv, int horizon_steps, const char* csv_path,
                       char** text_out) {
  CP_REQUIRE(config);
  CP_REQUIRE(history_csv);
  return guarded([&] {
    const auto rec = recommend_from_artifacts(config->value, history_csv, horizon_steps);
    if (csv_path) write_recommendation_csv(csv_path, rec);
    if (text_out) *text_out = dup_string(recommendation_text(rec));
  });
}

cp_status cp_verify_manifest(const char* dir, size_t* n_problems, char** report_out) {
  CP_REQUIRE(dir);
  CP_REQUIRE(n_problems);
  return guarded([&] {
    const auto problems = verify_manifest(dir);
    *n_problems = problems.size();
    if (report_out) {
      std::string report;
      for (const auto& p : problems) report += p + "\n";
      *report_out = dup_string(report);
    }
  });
}

}  // extern "C"
