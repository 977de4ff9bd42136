#ifndef CHORUS_H
#define CHORUS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by fallible functions.
 */
typedef enum ChorusStatus {
  CHORUS_STATUS_OK = 0,
  CHORUS_STATUS_NULL_ARGUMENT = 1,
  /**
   * Unknown key, unparsable value, or invalid UTF-8.
   */
  CHORUS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The configuration violates an engine or model invariant.
   */
  CHORUS_STATUS_INVALID_CONFIG = 3,
  /**
   * Path or token index outside the trace.
   */
  CHORUS_STATUS_OUT_OF_RANGE = 4,
  /**
   * The requested value does not exist (e.g. no aggregate answer).
   */
  CHORUS_STATUS_NO_VALUE = 5,
  CHORUS_STATUS_IO_ERROR = 6,
} ChorusStatus;

/**
 * Opaque session setup: engine config, simulated-model spec, prompt label.
 */
typedef struct ChorusConfig {
  uint8_t _private[0];
} ChorusConfig;

/**
 * Opaque completed-session trace.
 */
typedef struct ChorusTrace {
  uint8_t _private[0];
} ChorusTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * New setup with the library defaults. Free with `chorus_config_free`.
 */
struct ChorusConfig *chorus_config_new(void);

void chorus_config_free(struct ChorusConfig *config);

/**
 * Set one field by its flat-grammar key: engine keys (`num_paths`,
 * `suffix_len`, `max_draft_len`, `edit_tolerance`, `alpha`, `temperature`,
 * `max_seq_len`, `rng_seed`, `pool_structure`, `fuzzy`), model keys
 * (`model.vocab_size`, `model.order`, `model.transition_seed`,
 * `model.base_concentration`, `model.eos_token`, `model.eos_prob`), or
 * `prompt`. Values are strings, e.g. `chorus_config_set(c, "alpha", "0.5")`.
 *
 * # Safety
 * `key` and `value` must be NUL-terminated strings valid for the call, or
 * NULL; `config` must be a live handle from `chorus_config_new` or NULL.
 */
enum ChorusStatus chorus_config_set(struct ChorusConfig *config,
                                    const char *key,
                                    const char *value);

/**
 * Run a session on the simulated model. `drafting = false` runs the
 * one-token-per-step baseline; under the same seed both produce identical
 * token sequences. On success `*out_trace` owns the trace; free it with
 * `chorus_trace_free`.
 *
 * # Safety
 * `config` must be a live handle or NULL; `out_trace` must point to
 * writable storage for one pointer, or be NULL.
 */
enum ChorusStatus chorus_run(const struct ChorusConfig *config,
                             bool drafting,
                             struct ChorusTrace **out_trace);

void chorus_trace_free(struct ChorusTrace *trace);

/**
 * Number of paths in the trace; 0 for NULL.
 */
uint32_t chorus_trace_num_paths(const struct ChorusTrace *trace);

/**
 * Number of decode steps recorded; 0 for NULL.
 */
uint64_t chorus_trace_step_count(const struct ChorusTrace *trace);

/**
 * Mean accepted draft length per step (the accept-length metric).
 */
double chorus_trace_mean_accept_len(const struct ChorusTrace *trace);

/**
 * Mean tokens emitted per step.
 */
double chorus_trace_tokens_per_step(const struct ChorusTrace *trace);

/**
 * Token count of one path.
 *
 * # Safety
 * `trace` must be a live handle or NULL; `out_len` must be writable or NULL.
 */
enum ChorusStatus chorus_trace_path_len(const struct ChorusTrace *trace,
                                        uint32_t path,
                                        uint64_t *out_len);

/**
 * Token `index` of path `path`.
 *
 * # Safety
 * `trace` must be a live handle or NULL; `out_token` must be writable or
 * NULL.
 */
enum ChorusStatus chorus_trace_path_token(const struct ChorusTrace *trace,
                                          uint32_t path,
                                          uint64_t index,
                                          uint32_t *out_token);

/**
 * Majority-vote answer label of the session, when one exists.
 *
 * # Safety
 * `trace` must be a live handle or NULL; `out_answer` must be writable or
 * NULL.
 */
enum ChorusStatus chorus_trace_answer(const struct ChorusTrace *trace, uint32_t *out_answer);

/**
 * Write the trace in the line-delimited JSON schema to `path`.
 *
 * # Safety
 * `trace` must be a live handle or NULL; `path` must be a NUL-terminated
 * string valid for the call, or NULL.
 */
enum ChorusStatus chorus_trace_write_jsonl(const struct ChorusTrace *trace, const char *path);

/**
 * Static description of a status code.
 */
const char *chorus_status_message(enum ChorusStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHORUS_H */
