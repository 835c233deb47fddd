/* C interface to the careerpath library. Every call returns a cp_status;
 * on failure cp_last_error() describes the problem for the calling thread. */
#ifndef CAREERPATH_H
#define CAREERPATH_H

#include <stddef.h>
#include <stdint.h>

#if defined(CAREERPATH_BUILDING_LIBRARY)
#define CP_API __attribute__((visibility("default")))
#else
#define CP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cp_status {
  CP_OK = 0,
  CP_ERR_VALIDATION = 1, /* bad configuration or input data */
  CP_ERR_RUNTIME = 2,    /* I/O failure, missing or corrupt artifacts */
  CP_ERR_ARGUMENT = 3    /* null handle or pointer */
} cp_status;

typedef enum cp_stage {
  CP_STAGE_GENERATE = 0,
  CP_STAGE_FIT = 1,
  CP_STAGE_TRAIN = 2,
  CP_STAGE_EVALUATE = 3,
  CP_STAGE_DISTRIBUTION = 4
} cp_stage;

typedef struct cp_config cp_config;

/* Receives progress lines; `line` is valid only during the call. */
typedef void (*cp_log_fn)(const char* line, void* user);

CP_API const char* cp_version(void);

/* Message of the last failed call on this thread ("" if none). */
CP_API const char* cp_last_error(void);
/* Dotted config field of the last validation error ("" if not field specific). */
CP_API const char* cp_last_error_field(void);

CP_API cp_status cp_config_default(cp_config** out);
CP_API cp_status cp_config_load(const char* path, cp_config** out);
CP_API cp_status cp_config_from_json(const char* json, cp_config** out);
CP_API void cp_config_free(cp_config* config);

CP_API cp_status cp_config_set_seed(cp_config* config, uint64_t seed);
CP_API cp_status cp_config_set_output(cp_config* config, const char* dir);
/* Sets one field from a JSON literal, e.g. ("train.episodes", "5000"). */
CP_API cp_status cp_config_set(cp_config* config, const char* field, const char* json_value);
CP_API cp_status cp_config_validate(const cp_config* config);
/* Caller frees *out with cp_string_free. */
CP_API cp_status cp_config_to_json(const cp_config* config, char** out);

CP_API void cp_string_free(char* s);

CP_API cp_status cp_run_stage(const cp_config* config, cp_stage stage, cp_log_fn log, void* user);
CP_API cp_status cp_run_pipeline(const cp_config* config, cp_log_fn log, void* user);

/* Recommendation for the work history in `history_csv` (work_experience.csv
 * layout) using the artifacts under the config's output directory.
 * `csv_path` may be null; *text_out (optional) gets a readable summary. */
CP_API cp_status cp_recommend(const cp_config* config, const char* history_csv, int horizon_steps,
                              const char* csv_path, char** text_out);

/* Checks files under `dir` against its manifest.json. *n_problems receives
 * the number of mismatches; *report_out (optional) lists them, one per line. */
CP_API cp_status cp_verify_manifest(const char* dir, size_t* n_problems, char** report_out);

#ifdef __cplusplus
}
#endif

#endif
