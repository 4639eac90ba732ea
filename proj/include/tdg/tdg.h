/* Copyright (c) 2026 The tdg Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the tdg library. Every call returns a tdg_status; on
 * failure tdg_last_error() holds a message for the calling thread until its
 * next call. Strings returned through char** are owned by the caller and
 * released with tdg_string_free. JSON documents use the same schemas as the
 * command-line tool.
 */
#ifndef TDG_TDG_H_
#define TDG_TDG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TDG_BUILDING_LIBRARY)
#define TDG_API __attribute__((visibility("default")))
#else
#define TDG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tdg_status {
  TDG_OK = 0,
  TDG_E_INVALID_ARGUMENT = 1,
  TDG_E_IO = 2,
  TDG_E_BAD_MAGIC = 3,
  TDG_E_UNSUPPORTED_VERSION = 4,
  TDG_E_TRUNCATED = 5,
  TDG_E_INVARIANT = 6,
  TDG_E_MISSING_KEYFRAME = 7,
  TDG_E_DIMENSION_MISMATCH = 8,
  TDG_E_SINGLE_CLASS = 9,
  TDG_E_NUMERIC = 10,
  TDG_E_STATE = 11,
  TDG_E_CONFIG = 12,
  TDG_E_INTERNAL = 99
} tdg_status;

typedef struct tdg_trace tdg_trace;
typedef struct tdg_model tdg_model;

TDG_API const char* tdg_version(void);
TDG_API const char* tdg_last_error(void);
/* Stable lower-case identifier, e.g. "bad_magic". */
TDG_API const char* tdg_status_name(tdg_status status);
TDG_API void tdg_string_free(char* s);

/* Traces */
TDG_API tdg_status tdg_trace_load(const char* path, tdg_trace** out);
TDG_API tdg_status tdg_trace_save(const tdg_trace* trace, const char* path);
TDG_API void tdg_trace_free(tdg_trace* trace);
TDG_API tdg_status tdg_trace_dims(const tdg_trace* trace, uint32_t* prompt_len,
                                  uint32_t* resp_len, uint32_t* steps, uint32_t* hidden_dim);

/* Validates a blob, and its manifest line when manifest_path is non-NULL.
 * Violations are not errors: *valid is set to 0 and listed in report_json. */
TDG_API tdg_status tdg_validate_files(const char* trace_path, const char* manifest_path,
                                      int* valid, char** report_json);

/* Models */
/* Untrained model from a train config (JSON, "{}" or NULL for defaults);
 * feat_dim = D + 1. */
TDG_API tdg_status tdg_model_init(const char* config_json, uint32_t feat_dim, tdg_model** out);
TDG_API tdg_status tdg_model_load(const char* path, tdg_model** out);
TDG_API tdg_status tdg_model_save(const tdg_model* model, const char* path);
TDG_API void tdg_model_free(tdg_model* model);
TDG_API tdg_status tdg_model_num_params(const tdg_model* model, size_t* count);

/* {"response_prob": p, "token_probs": [...] | null} */
TDG_API tdg_status tdg_predict(const tdg_model* model, const tdg_trace* trace, char** out_json);

/* Pipeline */
/* spec_json may be NULL for defaults; seed overrides the spec's seed. */
TDG_API tdg_status tdg_synth(const char* out_dir, size_t n, uint64_t seed, const char* spec_json,
                             char** manifest_path);
/* Writes the best-validation model and a CSV history; history_path may be
 * NULL for MODEL.history.csv. */
TDG_API tdg_status tdg_train(const char* data_dir, const char* config_json, const char* model_out,
                             const char* history_path, unsigned jobs, char** summary_json);
/* space_json may carry a "base" train config; budget 0 trains every config. */
TDG_API tdg_status tdg_gridsearch(const char* data_dir, const char* space_json, size_t budget,
                                  unsigned jobs, char** leaderboard_json);
TDG_API tdg_status tdg_grid_size(const char* space_json, size_t* count);
TDG_API tdg_status tdg_eval(const char* model_path, const char* data_dir, const char* split,
                            unsigned jobs, char** report_json);
/* modes: comma-separated subset of static,no-graph,token-baselines. */
TDG_API tdg_status tdg_ablate(const char* data_dir, const char* model_path, const char* modes,
                              unsigned jobs, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* TDG_TDG_H_ */
