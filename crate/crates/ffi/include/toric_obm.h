#ifndef TORIC_OBM_H
#define TORIC_OBM_H

/* Generated by cbindgen from toric-obm-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define TOBM_OK 0

#define TOBM_ERR_DOMAIN 1

#define TOBM_ERR_PARSE 2

#define TOBM_ERR_NULL 3

/**
 * Opaque fan handle.
 */
typedef struct TobmFan TobmFan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a fan file (JSON text). Returns null on error; inspect
 * `tobm_last_error_message`.
 */
struct TobmFan *tobm_fan_parse(const char *json);

void tobm_fan_free(struct TobmFan *fan);

/**
 * Serialize the fan back to its JSON file form.
 */
char *tobm_fan_to_json(const struct TobmFan *fan);

/**
 * 1 if every cone is smooth, 0 otherwise, -TOBM_ERR_NULL on null.
 */
int tobm_fan_is_smooth(const struct TobmFan *fan);

/**
 * 1 if the fan is complete, 0 otherwise, -TOBM_ERR_NULL on null.
 */
int tobm_fan_is_complete(const struct TobmFan *fan);

/**
 * Toric resolution; returns a new handle (the input stays valid).
 */
struct TobmFan *tobm_fan_resolve(const struct TobmFan *fan);

/**
 * Presentation of the homology of the toric variety (descent for singular
 * input). `truncation` 0 means the fan rank; `beta` scales the
 * multiplicative law. The JSON report is written to `*out`.
 */
int tobm_present(const struct TobmFan *fan,
                 const char *theory,
                 uint32_t truncation,
                 int64_t beta,
                 char **out);

/**
 * Equivariant presentation (smooth fans only).
 */
int tobm_present_equivariant(const struct TobmFan *fan,
                             const char *theory,
                             uint32_t truncation,
                             int64_t beta,
                             char **out);

/**
 * Kronecker-dual module report.
 */
int tobm_dual(const struct TobmFan *fan,
              const char *theory,
              uint32_t truncation,
              int64_t beta,
              int allow_noncomplete,
              char **out);

/**
 * Künneth comparison for two fans: writes 1 (holds) or 0 to `*holds`.
 */
int tobm_kunneth_check(const struct TobmFan *fan_x,
                       const struct TobmFan *fan_y,
                       const char *theory,
                       int64_t beta,
                       int *holds);

/**
 * Release a string returned by this library.
 */
void tobm_string_free(char *s);

/**
 * The last error message on this thread (owned by the caller).
 */
char *tobm_last_error_message(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TORIC_OBM_H */
