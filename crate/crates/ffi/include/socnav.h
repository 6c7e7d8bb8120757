#ifndef SOCNAV_H
#define SOCNAV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SocnavStatus {
  SOCNAV_STATUS_OK = 0,
  SOCNAV_STATUS_NULL_ARGUMENT = 1,
  SOCNAV_STATUS_INVALID_UTF8 = 2,
  SOCNAV_STATUS_PARSE_ERROR = 3,
  SOCNAV_STATUS_INVALID_ARGUMENT = 4,
  SOCNAV_STATUS_COMPUTE_ERROR = 5,
  SOCNAV_STATUS_UNKNOWN_SCENARIO = 6,
  SOCNAV_STATUS_NOT_FOUND = 7,
  /**
   * The metric exists but is undefined for this episode.
   */
  SOCNAV_STATUS_UNDEFINED = 8,
  SOCNAV_STATUS_PANIC = 9,
} SocnavStatus;

/**
 * A parsed or simulated episode.
 */
typedef struct SocnavEpisode SocnavEpisode;

/**
 * A computed metric report.
 */
typedef struct SocnavReport SocnavReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *socnav_version(void);

/**
 * Message describing the last failure on this thread; empty after success.
 * Valid until the next socnav call on the same thread.
 */
const char *socnav_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void socnav_string_free(char *s);

/**
 * Parses an episode document of `len` bytes.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum SocnavStatus socnav_episode_parse(const uint8_t *data, size_t len, struct SocnavEpisode **out);

/**
 * Writes the canonical serialization of `episode` to `out_json`.
 *
 * # Safety
 * `episode` must be a live handle; `out_json` must be writable.
 */
enum SocnavStatus socnav_episode_serialize(const struct SocnavEpisode *episode, char **out_json);

/**
 * # Safety
 * `episode` must be a live handle; `out` must be writable.
 */
enum SocnavStatus socnav_episode_agent_count(const struct SocnavEpisode *episode, size_t *out);

/**
 * # Safety
 * `episode` must be null or a handle not yet freed.
 */
void socnav_episode_free(struct SocnavEpisode *episode);

/**
 * Simulates the named scenario layout with the given variation seed.
 *
 * # Safety
 * `scenario` must be a NUL-terminated string; `out` must be writable.
 */
enum SocnavStatus socnav_simulate(const char *scenario, uint64_t seed, struct SocnavEpisode **out);

/**
 * Computes the metric suite. `params_json` may be null for defaults; a
 * non-positive `dt` selects the robot's median sampling interval.
 *
 * # Safety
 * `episode` must be a live handle, `params_json` null or NUL-terminated,
 * `out` writable.
 */
enum SocnavStatus socnav_compute(const struct SocnavEpisode *episode,
                                 const char *params_json,
                                 double dt,
                                 bool stepwise,
                                 struct SocnavReport **out);

/**
 * Canonical JSON of the report.
 *
 * # Safety
 * `report` must be a live handle; `out_json` must be writable.
 */
enum SocnavStatus socnav_report_to_json(const struct SocnavReport *report, char **out_json);

/**
 * Numeric value of a taskwise metric; booleans read as 0 or 1.
 * Returns `Undefined` for metrics without a value and `NotFound` for
 * unknown names.
 *
 * # Safety
 * `report` must be a live handle, `metric` NUL-terminated, `out` writable.
 */
enum SocnavStatus socnav_report_get_real(const struct SocnavReport *report,
                                         const char *metric,
                                         double *out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void socnav_report_free(struct SocnavReport *report);

/**
 * Scenario labels from the built-in cards, as a JSON array.
 *
 * # Safety
 * `episode` must be a live handle; `out_json` must be writable.
 */
enum SocnavStatus socnav_classify(const struct SocnavEpisode *episode, char **out_json);

/**
 * Validates an episode document. Stores the number of errors in
 * `out_errors` and, when `out_issues_json` is not null, all issues as a
 * JSON array.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out_errors` must be writable;
 * `out_issues_json` null or writable.
 */
enum SocnavStatus socnav_validate(const uint8_t *data,
                                  size_t len,
                                  size_t *out_errors,
                                  char **out_issues_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCNAV_H */
