/* C interface to the qwqram quantum-walk qRAM simulator. */

#ifndef QWQRAM_H
#define QWQRAM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum qwqram_status {
  QWQRAM_OK = 0,
  // Null pointer, non-UTF-8 text, or an index out of bounds.
  QWQRAM_ERR_ARGUMENT = 1,
  // Malformed input content (bad lines, duplicates, zero-norm input).
  QWQRAM_ERR_PARSE = 2,
  // Shape or range violations (widths, levels, addresses, data words).
  QWQRAM_ERR_DOMAIN = 3,
  // Dense dimension above the configured cap.
  QWQRAM_ERR_RESOURCE = 4,
  // A verification check exceeded its tolerance.
  QWQRAM_ERR_VERIFICATION = 5,
  // Unexpected internal failure.
  QWQRAM_ERR_INTERNAL = 6,
} qwqram_status;

// Opaque classical memory table.
typedef struct qwqram_memory qwqram_memory;

// Opaque sparse state.
typedef struct qwqram_state qwqram_state;

// Opaque address-superposition builder (raw terms; canonicalized when a
// run consumes it).
typedef struct qwqram_superposition qwqram_superposition;

// Opaque trace of one memory call.
typedef struct qwqram_trace qwqram_trace;

// Summary filled in by [`qwqram_verify`].
typedef struct qwqram_verify_report {
  size_t checks;
  double max_unitary_deviation;
  double max_adjoint_deviation;
  double max_equivalence_deviation;
  bool all_permutation;
} qwqram_verify_report;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread; do not free it.
const char *qwqram_last_error_message(void);

// Frees a string returned by any `_serialize`, `_to_json`, or `_label`
// function.
//
// # Safety
// `text` must have been returned by this library and not freed before.
void qwqram_string_free(char *text);

// Creates an all-zero memory table for address width `n` and data width
// `m`.
//
// # Safety
// `out` must point to writable storage for one pointer.
enum qwqram_status qwqram_memory_new(uint32_t n, uint32_t m, struct qwqram_memory **out);

// Stores `value` in cell `address`.
//
// # Safety
// `memory` must be a live handle from `qwqram_memory_new`/`_parse`.
enum qwqram_status qwqram_memory_set(struct qwqram_memory *memory,
                                     uint64_t address,
                                     uint64_t value);

// Parses `ADDRESS<TAB>DATA` text into a new memory table.
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
enum qwqram_status qwqram_memory_parse(uint32_t n,
                                       uint32_t m,
                                       const char *text,
                                       struct qwqram_memory **out);

// # Safety
// `memory` must be a live handle or null; it is consumed.
void qwqram_memory_free(struct qwqram_memory *memory);

// Creates an empty superposition builder for address width `n`; push
// terms into it before running.
//
// # Safety
// `out` must be writable.
enum qwqram_status qwqram_superposition_new(uint32_t n, struct qwqram_superposition **out);

// Appends one `(address, re + i·im)` term.
//
// # Safety
// `superposition` must be a live handle.
enum qwqram_status qwqram_superposition_push(struct qwqram_superposition *superposition,
                                             uint64_t address,
                                             double re,
                                             double im);

// Parses `ADDRESS<TAB>RE[<TAB>IM]` text; the result is canonicalized and,
// when `normalize` is set, rescaled to unit norm.
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
enum qwqram_status qwqram_superposition_parse(uint32_t n,
                                              const char *text,
                                              bool normalize,
                                              struct qwqram_superposition **out);

// # Safety
// `superposition` must be a live handle or null; it is consumed.
void qwqram_superposition_free(struct qwqram_superposition *superposition);

// One full memory call; writes the final state to `out`.
//
// # Safety
// All handles must be live; `out` must be writable.
enum qwqram_status qwqram_run(uint32_t n,
                              uint32_t m,
                              const struct qwqram_memory *memory,
                              const struct qwqram_superposition *superposition,
                              bool normalize,
                              bool parallel,
                              struct qwqram_state **out);

// As [`qwqram_run`], also returning the labeled trace.
//
// # Safety
// All handles must be live; `out_state` and `out_trace` must be writable.
enum qwqram_status qwqram_run_traced(uint32_t n,
                                     uint32_t m,
                                     const struct qwqram_memory *memory,
                                     const struct qwqram_superposition *superposition,
                                     bool normalize,
                                     bool parallel,
                                     struct qwqram_state **out_state,
                                     struct qwqram_trace **out_trace);

// Parses a state dump produced by `qwqram_state_serialize` (or the CLI).
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
enum qwqram_status qwqram_state_parse(const char *text, struct qwqram_state **out);

// Number of nonzero entries, or 0 for a null handle.
//
// # Safety
// `state` must be a live handle or null.
size_t qwqram_state_entry_count(const struct qwqram_state *state);

// Writes ∑ |amplitude|² to `out`.
//
// # Safety
// `state` must be live; `out` must be writable.
enum qwqram_status qwqram_state_norm_squared(const struct qwqram_state *state, double *out);

// Canonical text dump; free with [`qwqram_string_free`]. Null on a null
// handle.
//
// # Safety
// `state` must be a live handle or null.
char *qwqram_state_serialize(const struct qwqram_state *state);

// JSON mirror of the dump; free with [`qwqram_string_free`].
//
// # Safety
// `state` must be a live handle or null.
char *qwqram_state_to_json(const struct qwqram_state *state);

// # Safety
// `state` must be a live handle or null; it is consumed.
void qwqram_state_free(struct qwqram_state *state);

// Number of recorded steps (2n+2 for a full call).
//
// # Safety
// `trace` must be a live handle or null.
size_t qwqram_trace_step_count(const struct qwqram_trace *trace);

// Label of step `index` (`psi0_0` … `psix_0`); free with
// [`qwqram_string_free`]. Null when out of range.
//
// # Safety
// `trace` must be a live handle or null.
char *qwqram_trace_label(const struct qwqram_trace *trace, size_t index);

// Copies the state recorded at step `index` into a fresh handle.
//
// # Safety
// `trace` must be live; `out` must be writable.
enum qwqram_status qwqram_trace_state(const struct qwqram_trace *trace,
                                      size_t index,
                                      struct qwqram_state **out);

// Full trace document; free with [`qwqram_string_free`].
//
// # Safety
// `trace` must be a live handle or null.
char *qwqram_trace_serialize(const struct qwqram_trace *trace);

// # Safety
// `trace` must be a live handle or null; it is consumed.
void qwqram_trace_free(struct qwqram_trace *trace);

// Runs the dense-oracle checks (unitarity, permutation structure,
// adjointness, sparse/dense equivalence) for the given shape. Fills
// `report` when non-null. Returns `QWQRAM_OK` when every check passes,
// `QWQRAM_ERR_VERIFICATION` on a tolerance violation, and
// `QWQRAM_ERR_RESOURCE` when the dense dimension exceeds `cap`.
//
// # Safety
// `report` must be null or point to writable storage.
enum qwqram_status qwqram_verify(uint32_t n,
                                 uint32_t m,
                                 size_t trials,
                                 uint64_t seed,
                                 size_t cap,
                                 struct qwqram_verify_report *report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWQRAM_H */
