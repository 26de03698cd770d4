#ifndef CDWHITNEY_H
#define CDWHITNEY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CdwStatus {
  CDW_STATUS_OK = 0,
  CDW_STATUS_NULL_POINTER = 1,
  CDW_STATUS_INVALID_ARGUMENT = 2,
  CDW_STATUS_DOMAIN = 3,
  CDW_STATUS_UNSUPPORTED_LEVEL = 4,
  CDW_STATUS_PARSE = 5,
  CDW_STATUS_NOT_COVERED = 6,
  CDW_STATUS_VALIDATION_FAILED = 7,
  CDW_STATUS_JET_REJECTED = 8,
  CDW_STATUS_IO = 9,
  CDW_STATUS_INTERNAL = 10,
  CDW_STATUS_PANIC = 11,
  CDW_STATUS_BUFFER_TOO_SMALL = 12,
} CdwStatus;

// A fitted extension of a jet.
typedef struct CdwExtension CdwExtension;

// A Whitney jet on a finite point cloud.
typedef struct CdwJet CdwJet;

// An element of a real Cayley-Dickson algebra.
typedef struct CdwNumber CdwNumber;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length including the NUL.
size_t cdw_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *cdw_version(void);

// Creates an element of A_level from its `2^level` coefficients.
enum CdwStatus cdw_number_new(uint32_t level,
                              const double *coeffs,
                              size_t len,
                              struct CdwNumber **out);

void cdw_number_free(struct CdwNumber *z);

// Number of real coefficients, or 0 for a null handle.
size_t cdw_number_dim(const struct CdwNumber *z);

enum CdwStatus cdw_number_coeffs(const struct CdwNumber *z, double *buf, size_t len);

// Doubling product `a b`.
enum CdwStatus cdw_number_mul(const struct CdwNumber *a,
                              const struct CdwNumber *b,
                              struct CdwNumber **out);

enum CdwStatus cdw_number_conj(const struct CdwNumber *a, struct CdwNumber **out);

enum CdwStatus cdw_number_norm(const struct CdwNumber *a, double *out);

// The `j`-th coordinate recovered through algebra operations (level >= 2).
enum CdwStatus cdw_pi_j(const struct CdwNumber *a, size_t j, double *out);

// Smallest kappa with `1 - Φ(κ δ) < eps / (4 k_h)`.
enum CdwStatus cdw_choose_kappa(double eps,
                                double delta,
                                double k_h,
                                uint32_t level,
                                size_t arity,
                                double *out);

// Parses a jet from its JSON form.
enum CdwStatus cdw_jet_from_json(const char *json, struct CdwJet **out);

void cdw_jet_free(struct CdwJet *jet);

// Coordinates per point, or 0 for a null handle.
size_t cdw_jet_dim(const struct CdwJet *jet);

// Real channels per value, or 0 for a null handle.
size_t cdw_jet_channels(const struct CdwJet *jet);

// Whitney compatibility check; `passed` is 1 or 0 and `worst_ratio` the largest remainder ratio.
enum CdwStatus cdw_jet_check(const struct CdwJet *jet,
                             double eps,
                             double delta,
                             int32_t *passed,
                             double *worst_ratio);

// Fits an extension that reproduces the jet on its points and is smooth off them.
// `kappas` holds one smoothing parameter per stage. `shell_outer` is the outer
// radius of the first distance shell around the points.
enum CdwStatus cdw_extension_new(const struct CdwJet *jet,
                                 double eps,
                                 double delta,
                                 double shell_outer,
                                 const double *kappas,
                                 size_t stages,
                                 uint64_t seed,
                                 struct CdwExtension **out);

void cdw_extension_free(struct CdwExtension *ext);

// Evaluates the extension at `z` (length `n`) into `out` (capacity `out_len`).
enum CdwStatus cdw_extension_eval(const struct CdwExtension *ext,
                                  const double *z,
                                  size_t n,
                                  double *out,
                                  size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDWHITNEY_H */
