#ifndef HISTGEN_H
#define HISTGEN_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Outcome of a call.
 */
typedef enum HistgenStatus {
  HISTGEN_STATUS_OK = 0,
  /*
   A null pointer or non-UTF-8 string was passed.
   */
  HISTGEN_STATUS_INVALID_ARGUMENT = 1,
  /*
   Bad configuration, inputs or initial system.
   */
  HISTGEN_STATUS_CONFIG = 2,
  /*
   Writing or reading a history failed.
   */
  HISTGEN_STATUS_IO = 3,
  /*
   The directory is not a readable history.
   */
  HISTGEN_STATUS_INVALID_HISTORY = 4,
  /*
   A panic was caught at the boundary.
   */
  HISTGEN_STATUS_INTERNAL = 5,
} HistgenStatus;

/*
 Opaque run configuration.
 */
typedef struct HistgenConfig HistgenConfig;

/*
 Opaque validation report.
 */
typedef struct HistgenReport HistgenReport;

/*
 Counters of a finished generation.
 */
typedef struct HistgenRunSummary {
  uint64_t iterations;
  uint64_t committed;
  uint64_t skipped;
  uint64_t rolled_back;
  uint64_t consumed_tests;
} HistgenRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into the library from the same thread.
 */
const char *histgen_last_error(void);

/*
 Configuration of a named preset (`uniform-generators`,
 `uniform-operations` or `growing-system`).

 # Safety
 `name` is a NUL-terminated string; `out` is a valid pointer.
 */
enum HistgenStatus histgen_config_from_preset(const char *name, struct HistgenConfig **out);

/*
 Parses a TOML configuration overlaid on `growing-system`.

 # Safety
 `toml` is a NUL-terminated string; `out` is a valid pointer.
 */
enum HistgenStatus histgen_config_from_toml(const char *toml, struct HistgenConfig **out);

/*
 # Safety
 `config` is a handle from this library.
 */
enum HistgenStatus histgen_config_set_seed(struct HistgenConfig *config, uint64_t seed);

/*
 # Safety
 `config` is a handle from this library.
 */
enum HistgenStatus histgen_config_set_max_iterations(struct HistgenConfig *config, uint64_t n);

/*
 # Safety
 `config` is null or a handle from this library, not used afterwards.
 */
void histgen_config_free(struct HistgenConfig *config);

/*
 Generates a history into `out_dir`, which must be absent or empty.
 `summary` may be null.

 # Safety
 Strings are NUL-terminated; `donors` holds `donor_count` of them (or is
 null when the count is 0).
 */
enum HistgenStatus histgen_generate(const struct HistgenConfig *config,
                                    const char *system_dir,
                                    const char *const *donors,
                                    size_t donor_count,
                                    const char *out_dir,
                                    struct HistgenRunSummary *summary);

/*
 Audits a history directory. The call succeeds even when violations are
 found; inspect the report.

 # Safety
 `out_dir` is NUL-terminated; `report` is a valid pointer.
 */
enum HistgenStatus histgen_validate(const char *out_dir, struct HistgenReport **report);

/*
 Number of violations in a report; 0 for a null handle.

 # Safety
 `report` is null or a handle from this library.
 */
size_t histgen_report_violation_count(const struct HistgenReport *report);

/*
 The report as JSON; release with `histgen_string_free`.

 # Safety
 `report` is a handle from this library; `json` is a valid pointer.
 */
enum HistgenStatus histgen_report_json(const struct HistgenReport *report, char **json);

/*
 # Safety
 `report` is null or a handle from this library, not used afterwards.
 */
void histgen_report_free(struct HistgenReport *report);

/*
 Per-revision metrics as CSV (`long_format` selects the
 `revision,metric,key,value` layout); release with `histgen_string_free`.

 # Safety
 `out_dir` is NUL-terminated; `csv` is a valid pointer.
 */
enum HistgenStatus histgen_stats(const char *out_dir, bool long_format, char **csv);

/*
 # Safety
 `s` is null or a string returned by this library, not used afterwards.
 */
void histgen_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HISTGEN_H */
