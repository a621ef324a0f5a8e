#ifndef SDNMC_H
#define SDNMC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of a fallible call.
 */
typedef enum SdnmcStatus {
  SDNMC_STATUS_OK = 0,
  SDNMC_STATUS_NULL_ARGUMENT = 1,
  SDNMC_STATUS_INVALID_UTF8 = 2,
  SDNMC_STATUS_IO = 3,
  SDNMC_STATUS_SCENARIO = 4,
  SDNMC_STATUS_EXPLORE = 5,
  SDNMC_STATUS_PANIC = 6,
} SdnmcStatus;

typedef enum SdnmcVerdict {
  SDNMC_VERDICT_HOLDS = 0,
  SDNMC_VERDICT_VIOLATED = 1,
  SDNMC_VERDICT_RESOURCE_LIMIT = 2,
} SdnmcVerdict;

/**
 * Outcome of one run.
 */
typedef struct SdnmcResult SdnmcResult;

/**
 * A parsed and compiled scenario.
 */
typedef struct SdnmcScenario SdnmcScenario;

/**
 * Overrides for a run. Negative or zero fields keep the scenario's value.
 */
typedef struct SdnmcOptions {
  /**
   * 1 on, 0 off, -1 scenario default.
   */
  int32_t por;
  /**
   * 1 on, 0 off, -1 scenario default.
   */
  int32_t merge_chains;
  uint32_t threads;
  uint64_t max_states;
  uint64_t time_limit_secs;
} SdnmcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default overrides: everything taken from the scenario.
 */
struct SdnmcOptions sdnmc_options_default(void);

/**
 * Parses scenario text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum SdnmcStatus sdnmc_scenario_parse(const char *text, struct SdnmcScenario **out);

/**
 * Reads and parses a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SdnmcStatus sdnmc_scenario_load(const char *path, struct SdnmcScenario **out);

/**
 * # Safety
 * `sc` must come from `sdnmc_scenario_parse` or `sdnmc_scenario_load`, or be null.
 */
void sdnmc_scenario_free(struct SdnmcScenario *sc);

/**
 * Explores the scenario. `opts` may be null.
 *
 * # Safety
 * `sc` must be a live scenario handle; `out` must be writable.
 */
enum SdnmcStatus sdnmc_check(const struct SdnmcScenario *sc,
                             const struct SdnmcOptions *opts,
                             struct SdnmcResult **out);

/**
 * # Safety
 * `r` must be a live result handle.
 */
enum SdnmcVerdict sdnmc_result_verdict(const struct SdnmcResult *r);

/**
 * # Safety
 * `r` must be a live result handle.
 */
uint64_t sdnmc_result_visited(const struct SdnmcResult *r);

/**
 * # Safety
 * `r` must be a live result handle.
 */
uint64_t sdnmc_result_transitions(const struct SdnmcResult *r);

/**
 * # Safety
 * `r` must be a live result handle.
 */
double sdnmc_result_bytes_per_state(const struct SdnmcResult *r);

/**
 * Counterexample as JSON, or null when the property holds. Release with
 * `sdnmc_string_free`.
 *
 * # Safety
 * `r` must be a live result handle.
 */
char *sdnmc_result_trace_json(const struct SdnmcResult *r);

/**
 * Counterexample as `step N:` lines, or null. Release with `sdnmc_string_free`.
 *
 * # Safety
 * `r` must be a live result handle.
 */
char *sdnmc_result_trace_text(const struct SdnmcResult *r);

/**
 * # Safety
 * `r` must come from `sdnmc_check`, or be null.
 */
void sdnmc_result_free(struct SdnmcResult *r);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void sdnmc_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *sdnmc_last_error_message(void);

const char *sdnmc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDNMC_H */
