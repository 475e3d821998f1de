#ifndef QUDIT_BELL_H
#define QUDIT_BELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QbStatus {
  QB_STATUS_OK = 0,
  QB_STATUS_INVALID_ARGUMENT = 1,
  // Enumeration budget or size limit exceeded.
  QB_STATUS_BUDGET_EXCEEDED = 2,
  QB_STATUS_NULL_POINTER = 3,
  // Malformed JSON or text input.
  QB_STATUS_PARSE = 4,
  QB_STATUS_PANIC = 5,
} QbStatus;

// Phase-shifter settings for every party.
typedef struct QbPhases QbPhases;

// A `(N, d)` scenario.
typedef struct QbScenario QbScenario;

// A joint probability table.
typedef struct QbTable QbTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *qb_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qb_version(void);

// # Safety
// `out` must be valid for writes.
enum QbStatus qb_scenario_new(size_t n_parties, size_t dimension, struct QbScenario **out);

// # Safety
// `scenario` must be NULL or a handle from [`qb_scenario_new`] not yet freed.
void qb_scenario_free(struct QbScenario *scenario);

// Prescribed optimal phases for `scenario`.
//
// # Safety
// `scenario` must be a live handle and `out` valid for writes.
enum QbStatus qb_phases_prescribed(const struct QbScenario *scenario, struct QbPhases **out);

// All-zero phases.
//
// # Safety
// `scenario` must be a live handle and `out` valid for writes.
enum QbStatus qb_phases_zero(const struct QbScenario *scenario, struct QbPhases **out);

// Sets the `len` phases of zero-based `party` for `setting` (1 or 2).
//
// # Safety
// `phases` must be a live handle and `values` must point to `len` doubles.
enum QbStatus qb_phases_set(struct QbPhases *phases,
                            size_t party,
                            uint8_t setting,
                            const double *values,
                            size_t len);

// # Safety
// `phases` must be NULL or a live handle.
void qb_phases_free(struct QbPhases *phases);

// Joint probabilities of `V |GHZ><GHZ| + (1 - V) 1/d^N` measured with
// `phases`.
//
// # Safety
// `phases` must be a live handle and `out` valid for writes.
enum QbStatus qb_table_ghz(const struct QbPhases *phases, double visibility, struct QbTable **out);

// Parses a probability table from JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writes.
enum QbStatus qb_table_from_json(const char *json, struct QbTable **out);

// Serializes a table; release the string with [`qb_string_free`].
//
// # Safety
// `table` must be a live handle and `out` valid for writes.
enum QbStatus qb_table_to_json(const struct QbTable *table, char **out);

// # Safety
// `table` must be NULL or a live handle.
void qb_table_free(struct QbTable *table);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void qb_string_free(char *s);

// # Safety
// `table` must be a live handle and `out` valid for writes.
enum QbStatus qb_bell_value(const struct QbTable *table, double *out);

// Correlation `Q` for a setting string such as `"121"`.
//
// # Safety
// `table` must be a live handle, `setting` NUL-terminated, `out` writable.
enum QbStatus qb_correlation(const struct QbTable *table, const char *setting, double *out);

// Two-party CGLMP value; fails unless the table has two parties.
//
// # Safety
// `table` must be a live handle and `out` valid for writes.
enum QbStatus qb_cglmp_value(const struct QbTable *table, double *out);

// Exhaustive hybrid bound for `partition` (e.g. `"1,2/3"`), as the exact
// fraction `numerator / denominator`. `budget` of 0 selects the default.
//
// # Safety
// `scenario` must be a live handle, `partition` NUL-terminated, and the
// three output pointers valid for writes.
enum QbStatus qb_hlnhv_bound(const struct QbScenario *scenario,
                             const char *partition,
                             uint64_t budget,
                             int64_t *numerator,
                             int64_t *denominator,
                             uint64_t *enumerated);

// Exhaustive fully local bound; see [`qb_hlnhv_bound`].
//
// # Safety
// `scenario` must be a live handle and the output pointers valid for writes.
enum QbStatus qb_lhv_bound(const struct QbScenario *scenario,
                           uint64_t budget,
                           int64_t *numerator,
                           int64_t *denominator,
                           uint64_t *enumerated);

// Closed-form maximal GHZ value.
//
// # Safety
// `scenario` must be a live handle and `out` valid for writes.
enum QbStatus qb_max_violation(const struct QbScenario *scenario, double *out);

// Critical visibility `2^{N-1} / max`.
//
// # Safety
// `scenario` must be a live handle and `out` valid for writes.
enum QbStatus qb_critical_visibility(const struct QbScenario *scenario, double *out);

// Two-party maximum for dimension `d`.
//
// # Safety
// `out` must be valid for writes.
enum QbStatus qb_cglmp_max(size_t dimension, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUDIT_BELL_H */
