/* crossrank: multi-stage cross-market ranking pipeline.
 *
 * C interface to the pipeline library. All functions are thread-compatible:
 * distinct pipeline handles may be used from distinct threads, one handle
 * must not be shared without external synchronization.
 *
 * Every fallible call returns a crossrank_status; on failure,
 * crossrank_pipeline_last_error() holds a message until the next call on the
 * same handle.
 */
#ifndef CROSSRANK_H
#define CROSSRANK_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum crossrank_status {
  CROSSRANK_OK = 0,
  CROSSRANK_ERR_INVALID_ARGUMENT = 1,
  CROSSRANK_ERR_CONFIG = 2,
  CROSSRANK_ERR_IO = 3,
  CROSSRANK_ERR_PARSE = 4,
  CROSSRANK_ERR_MISSING_DEPENDENCY = 5,
  CROSSRANK_ERR_NUMERIC = 6,
  CROSSRANK_ERR_INTERNAL = 7
} crossrank_status;

/* Opaque pipeline handle bound to one configuration file. */
typedef struct crossrank_pipeline crossrank_pipeline;

const char* crossrank_version(void);
const char* crossrank_status_name(crossrank_status status);

/* Loads the JSON configuration at config_path. On success *out owns the
 * handle and must be released with crossrank_pipeline_close(). */
crossrank_status crossrank_pipeline_open(const char* config_path,
                                         crossrank_pipeline** out);
void crossrank_pipeline_close(crossrank_pipeline* pipeline);

/* Message for the most recent failing call on this handle ("" if none).
 * Owned by the handle; valid until the next call. */
const char* crossrank_pipeline_last_error(const crossrank_pipeline* pipeline);

/* Overrides applied on top of the loaded configuration. */
crossrank_status crossrank_pipeline_set_jobs(crossrank_pipeline* pipeline,
                                             int32_t jobs);
crossrank_status crossrank_pipeline_set_seed(crossrank_pipeline* pipeline,
                                             uint64_t seed);
crossrank_status crossrank_pipeline_set_combo_filter(
    crossrank_pipeline* pipeline, const char* expr);
crossrank_status crossrank_pipeline_set_cache_dir(crossrank_pipeline* pipeline,
                                                  const char* dir);

/* Pipeline stages. Each stage requires the previous stage's cache; all
 * artifact writes are atomic and cached by content hash, so rerunning a
 * stage with unchanged inputs performs no work. */
crossrank_status crossrank_pipeline_synth(crossrank_pipeline* pipeline);
crossrank_status crossrank_pipeline_prepare(crossrank_pipeline* pipeline);
crossrank_status crossrank_pipeline_stage1(crossrank_pipeline* pipeline);
crossrank_status crossrank_pipeline_stage2(crossrank_pipeline* pipeline);
crossrank_status crossrank_pipeline_stage3(crossrank_pipeline* pipeline);

/* Writes one submission file per target market into the output directory. */
crossrank_status crossrank_pipeline_submit(crossrank_pipeline* pipeline);

/* Builds the per-dataset validation report. On success *report_text owns a
 * NUL-terminated string; release it with crossrank_string_free(). */
crossrank_status crossrank_pipeline_evaluate(crossrank_pipeline* pipeline,
                                             char** report_text);

void crossrank_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CROSSRANK_H */
