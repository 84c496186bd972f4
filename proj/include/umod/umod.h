/* Copyright (c) 2026 The umod Authors
 * SPDX-License-Identifier: Apache-2.0 */

/* Stable C interface to the umod library. Every function returns a status code;
 * on failure umod_last_error() describes the problem for the calling thread.
 * Strings returned through `char**` out-parameters are owned by the caller and
 * must be released with umod_string_free. */

#ifndef UMOD_UMOD_H
#define UMOD_UMOD_H

#include <stddef.h>
#include <stdint.h>

#if defined(UMOD_BUILDING_LIBRARY)
#define UMOD_API __attribute__((visibility("default")))
#else
#define UMOD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum umod_status {
  UMOD_OK = 0,
  UMOD_ERR_CONFIG = 1,   /* invalid configuration or arguments */
  UMOD_ERR_IO = 2,       /* file system failure */
  UMOD_ERR_DATA = 3,     /* malformed or inconsistent input data */
  UMOD_ERR_NUMERIC = 4,  /* non-finite values */
  UMOD_ERR_INTERNAL = 5
} umod_status;

typedef struct umod_dataset umod_dataset;
typedef struct umod_model umod_model;

UMOD_API const char* umod_version(void);
UMOD_API const char* umod_last_error(void);
UMOD_API const char* umod_status_name(umod_status status);
UMOD_API void umod_string_free(char* s);

/* Commands: "gen-data", "train", "eval", "export-embeddings", "plot-loss",
 * "shift". `config_json` is a JSON object of command options; the fully
 * resolved configuration is written to config.lock.json beside the outputs.
 * `result_json` (may be NULL) receives a JSON summary. */
UMOD_API umod_status umod_run_command(const char* command, const char* config_json,
                                      char** result_json);

/* Resolves defaults without running; `resolved_json` receives the lock config. */
UMOD_API umod_status umod_resolve_config(const char* command, const char* config_json,
                                         char** resolved_json);

/* Reads a config or lock file. `command` receives the locked command name, or an
 * empty string for a plain config object. */
UMOD_API umod_status umod_read_config_file(const char* path, char** command, char** config_json);

/* Datasets. */
UMOD_API umod_status umod_dataset_generate(int64_t n, uint64_t seed, int image_size, int patch_size,
                                           const char* palette, const char* out_dir,
                                           umod_dataset** out);
UMOD_API umod_status umod_dataset_load(const char* dir, umod_dataset** out);
UMOD_API int64_t umod_dataset_size(const umod_dataset* dataset);
UMOD_API umod_status umod_dataset_split_size(const umod_dataset* dataset, const char* split,
                                             int64_t* count);
UMOD_API umod_status umod_dataset_text(const umod_dataset* dataset, int64_t sample_id, char** text);
UMOD_API void umod_dataset_free(umod_dataset* dataset);

/* Models. */
UMOD_API umod_status umod_model_init(const char* model_config_json, uint64_t seed, umod_model** out);
UMOD_API umod_status umod_model_load(const char* checkpoint_path, umod_model** out);
UMOD_API umod_status umod_model_save(const umod_model* model, const char* checkpoint_path);
UMOD_API umod_status umod_model_config(const umod_model* model, char** config_json);
UMOD_API size_t umod_model_parameter_count(const umod_model* model);
UMOD_API void umod_model_free(umod_model* model);

/* Embeds one split and scores top-1 text-to-image retrieval. */
UMOD_API umod_status umod_evaluate(const umod_model* model, const umod_dataset* dataset,
                                   const char* split, const char* class_attribute,
                                   char** report_json);
UMOD_API umod_status umod_export_embeddings(const umod_model* model, const umod_dataset* dataset,
                                            const char* split, const char* path);

/* Losses on caller-owned row-major buffers. */
UMOD_API umod_status umod_contrastive_loss(const double* similarity, size_t n, double tau,
                                           double* loss);
UMOD_API umod_status umod_mim_loss(const double* logits, size_t num_patches, size_t vocab,
                                   const int* targets, const int* mask, size_t mask_len,
                                   double* loss);

#ifdef __cplusplus
}
#endif

#endif /* UMOD_UMOD_H */
