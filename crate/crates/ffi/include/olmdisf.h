#ifndef OLMDISF_H
#define OLMDISF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OlmdisfStatus {
  OLMDISF_STATUS_OK = 0,
  OLMDISF_STATUS_NULL_ARGUMENT = 1,
  OLMDISF_STATUS_INVALID_UTF8 = 2,
  OLMDISF_STATUS_INVALID_CONFIG = 3,
  OLMDISF_STATUS_INVALID_DATA = 4,
  OLMDISF_STATUS_IO = 5,
  OLMDISF_STATUS_INTERNAL = 6,
  OLMDISF_STATUS_PANIC = 7,
} OlmdisfStatus;

/*
 Opaque online model.
 */
typedef struct OlmdisfModel OlmdisfModel;

/*
 What the model reported for one instance.
 */
typedef struct OlmdisfStep {
  /*
   `+1` or `-1`.
   */
  int32_t prediction;
  double margin;
  /*
   Ensemble weight on the observed-space learner after the step.
   */
  double alpha1;
  double entropy;
  double mismatch;
  /*
   1 when a drift was detected at this step.
   */
  int32_t drift;
  /*
   Proposed label for an unlabeled instance, 0 when none.
   */
  int32_t pseudo_label;
  double pseudo_confidence;
} OlmdisfStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *olmdisf_last_error(void);

/*
 Builds a model from a JSON model config (`{}` for defaults) and a JSON
 feature schema (`{"features": [{"id": 0, "kind": {"kind":
 "continuous"}, "level_values": []}, ...]}`).

 # Safety
 String arguments must be NUL-terminated; `out` must be writable.
 */
enum OlmdisfStatus olmdisf_model_new(const char *config_json,
                                     const char *schema_json,
                                     struct OlmdisfModel **out);

/*
 Predicts one instance and then learns from it. `ids` and `values` hold
 `n_observed` observed features. `label` is `+1`, `-1`, or 0 when the
 label is hidden.

 # Safety
 `model` must come from [`olmdisf_model_new`]; `ids` and `values` must
 point to `n_observed` elements (may be null when it is 0); `out` must
 be writable.
 */
enum OlmdisfStatus olmdisf_model_step(struct OlmdisfModel *model,
                                      size_t t,
                                      const size_t *ids,
                                      const double *values,
                                      size_t n_observed,
                                      int32_t label,
                                      struct OlmdisfStep *out);

/*
 Writes the two ensemble weights to `out[0]` and `out[1]`.

 # Safety
 `model` must come from [`olmdisf_model_new`]; `out` must hold two
 doubles.
 */
enum OlmdisfStatus olmdisf_model_alpha(const struct OlmdisfModel *model, double *out);

/*
 Releases a model; null is ignored.

 # Safety
 `model` must come from [`olmdisf_model_new`] and not be used afterwards.
 */
void olmdisf_model_free(struct OlmdisfModel *model);

/*
 Runs one experiment described by a TOML run config and returns a JSON
 summary (run id, final CER, per-step CER and weight trajectories, drift
 events) through `out_json`.

 # Safety
 `config_toml` must be NUL-terminated; `out_json` must be writable.
 */
enum OlmdisfStatus olmdisf_run_experiment(const char *config_toml, char **out_json);

/*
 Releases a string returned by this library; null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void olmdisf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OLMDISF_H */
