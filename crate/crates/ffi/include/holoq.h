#ifndef HOLOQ_H
#define HOLOQ_H

#include <stddef.h>
#include <stdint.h>

typedef enum HqStatus {
  HQ_STATUS_OK = 0,
  HQ_STATUS_NULL_POINTER = 1,
  HQ_STATUS_INVALID_ARGUMENT = 2,
  // Frame construction failed: defective, near-defective or singular.
  HQ_STATUS_NON_DIAGONALIZABLE = 3,
  // Any other numerical failure.
  HQ_STATUS_NUMERICAL = 4,
  HQ_STATUS_PANIC = 5,
} HqStatus;

// Opaque biorthonormal frame.
typedef struct HqFrame HqFrame;

// Opaque model handle.
typedef struct HqModel HqModel;

typedef struct HqComplex {
  double re;
  double im;
} HqComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Dirac model with non-Hermiticity strength `s`. Never null.
struct HqModel *hq_model_dirac(double s);

// Two-band Bogoliubov-de Gennes model. Never null.
struct HqModel *hq_model_bdg(void);

// # Safety
// `model` must come from an `hq_model_*` constructor and not be used afterwards.
void hq_model_free(struct HqModel *model);

// Hilbert-space dimension, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live model handle.
uintptr_t hq_model_dim(const struct HqModel *model);

// Writes `H(R)` (dim*dim entries, row-major) into `out`.
//
// # Safety
// `r` points to 3 doubles; `out` has room for dim*dim values.
enum HqStatus hq_model_hamiltonian(const struct HqModel *model,
                                   const double *r,
                                   struct HqComplex *out);

// Eigenvalues of `H(R)`, descending real part then descending imaginary part.
//
// # Safety
// `r` points to 3 doubles; `out` has room for dim values.
enum HqStatus hq_spectrum(const struct HqModel *model, const double *r, struct HqComplex *out);

// Builds the balanced-gauge biorthonormal frame at `R` with default tolerances.
//
// # Safety
// `r` points to 3 doubles; `out` is a valid location for a handle. On failure `*out` is null.
enum HqStatus hq_frame_build(const struct HqModel *model, const double *r, struct HqFrame **out);

// # Safety
// `frame` must come from [`hq_frame_build`] and not be used afterwards.
void hq_frame_free(struct HqFrame *frame);

// # Safety
// `out` has room for dim values.
enum HqStatus hq_frame_energies(const struct HqFrame *frame, struct HqComplex *out);

// Metric `X = sum_j |phi^j><phi^j|`, row-major.
//
// # Safety
// `out` has room for dim*dim values.
enum HqStatus hq_frame_metric(const struct HqFrame *frame, struct HqComplex *out);

// `<psi|X|psi>` for a state of `dim` components.
//
// # Safety
// `state` points to dim values; `out` to one double.
enum HqStatus hq_frame_pseudo_norm(const struct HqFrame *frame,
                                   const struct HqComplex *state,
                                   double *out);

// Discrete holonomy of band `band` around a circle of `vertices` points in the plane of
// axes (`axis_a`, `axis_b`).
//
// # Safety
// `center` points to 3 doubles; `out` to one value.
enum HqStatus hq_holonomy_circle(const struct HqModel *model,
                                 const double *center,
                                 double radius,
                                 uint32_t axis_a,
                                 uint32_t axis_b,
                                 uintptr_t vertices,
                                 uintptr_t band,
                                 struct HqComplex *out);

// Plaquette Berry curvature of band `band` at `R` in the plane (`axis_a`, `axis_b`).
//
// # Safety
// `r` points to 3 doubles; `out` to one value.
enum HqStatus hq_curvature_plaquette(const struct HqModel *model,
                                     const double *r,
                                     uint32_t axis_a,
                                     uint32_t axis_b,
                                     double h,
                                     uintptr_t band,
                                     struct HqComplex *out);

// Copies the calling thread's last error message into `buf` (NUL-terminated, truncated to
// `len`). Returns the full message length including the terminator, or 0 when none is set.
//
// # Safety
// `buf` is null or has room for `len` bytes.
uintptr_t hq_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *hq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOLOQ_H */
