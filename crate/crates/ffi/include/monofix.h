#ifndef MONOFIX_H
#define MONOFIX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MFX_STATUS_OK = 0,
  MFX_STATUS_INVALID_ARGUMENT = 1,
  MFX_STATUS_CERTIFICATE_REFUSED = 2,
  MFX_STATUS_NOT_CONVERGED = 3,
  MFX_STATUS_NULL_POINTER = 4,
  MFX_STATUS_INTERNAL = 5,
} MfxStatus;

typedef enum {
  MFX_VERDICT_CERTIFIED = 0,
  MFX_VERDICT_REFUTED = 1,
  MFX_VERDICT_INCONCLUSIVE = 2,
} MfxVerdict;

// Nyström problem under construction on a midpoint grid.
typedef struct MfxFredholm MfxFredholm;

// Outcome of a solve: termination, iterate count, fixed point and the
// JSON trace.
typedef struct MfxTrace MfxTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Spectral radius of a non-negative `n×n` row-major matrix by power
// iteration to relative tolerance `1e-13`.
//
// # Safety
// `mat` must point to `n*n` doubles; `out_radius` must be writable.
MfxStatus mfx_spectral_radius(const double *mat, size_t n, double *out_radius);

// Certificate for `λ = L·` on `ℝⁿ₊`: certified when `ρ(L) < 1` with margin.
// Writes the verdict and the bracket `[lower, upper]` on `ρ(L)`.
//
// # Safety
// `mat` must point to `n*n` doubles; the out pointers must be writable.
MfxStatus mfx_matrix_certificate(const double *mat,
                                 size_t n,
                                 MfxVerdict *out_verdict,
                                 double *out_lower,
                                 double *out_upper);

// Picard iteration for `x ↦ A·x + b` on `ℝⁿ` with the vector distance.
// `lambda` is the `n×n` contraction matrix, or null for `|A|`. Stops when
// two consecutive step distances are below `2^-eps_level`.
//
// `*out` receives a trace whenever the status is `MFX_STATUS_OK`,
// `MFX_STATUS_CERTIFICATE_REFUSED` or `MFX_STATUS_NOT_CONVERGED`.
//
// # Safety
// `a` and `lambda` (if not null) point to `n*n` doubles, `b` and `x0` to
// `n` doubles; `out` must be writable.
MfxStatus mfx_affine_solve(const double *a,
                           const double *b,
                           const double *x0,
                           size_t n,
                           const double *lambda,
                           uint32_t eps_level,
                           uint32_t max_iter,
                           bool override_certificate,
                           MfxTrace **out);

// True when the run converged. False for null.
//
// # Safety
// `trace` is null or a live handle.
bool mfx_trace_converged(const MfxTrace *trace);

// Iterations performed. Zero for null.
//
// # Safety
// `trace` is null or a live handle.
size_t mfx_trace_iterations(const MfxTrace *trace);

// Length of the fixed point, zero when the run did not converge.
//
// # Safety
// `trace` is null or a live handle.
size_t mfx_trace_solution_len(const MfxTrace *trace);

// Copies the fixed point into `out`, which holds `len` doubles.
//
// # Safety
// `trace` is a live handle and `out` points to `len` writable doubles.
MfxStatus mfx_trace_solution(const MfxTrace *trace, double *out, size_t len);

// JSON trace, valid until the handle is freed. Null for null.
//
// # Safety
// `trace` is null or a live handle.
const char *mfx_trace_json(const MfxTrace *trace);

// # Safety
// `trace` is null or a handle not yet freed.
void mfx_trace_free(MfxTrace *trace);

// Midpoint grid with `nodes` cells on `[a, b]`. Null on invalid input.
MfxFredholm *mfx_fredholm_new(double a, double b, size_t nodes);

// Number of quadrature nodes; zero for null.
//
// # Safety
// `h` is null or a live handle.
size_t mfx_fredholm_node_count(const MfxFredholm *h);

// Copies the quadrature nodes into `out`.
//
// # Safety
// `h` is a live handle and `out` points to `len` writable doubles.
MfxStatus mfx_fredholm_nodes(const MfxFredholm *h, double *out, size_t len);

// Linear kernel `K(tᵢ, sⱼ)` at the nodes, `n×n` row-major; `|K|` is the
// dominating bound.
//
// # Safety
// `h` is a live handle and `k` points to `n*n` doubles.
MfxStatus mfx_fredholm_set_kernel(MfxFredholm *h, const double *k, size_t n);

// Right-hand side `f(tᵢ)` at the nodes.
//
// # Safety
// `h` is a live handle and `f` points to `n` doubles.
MfxStatus mfx_fredholm_set_rhs(MfxFredholm *h, const double *f, size_t n);

// Certifies and solves the configured problem. `*out` receives a trace
// under the same rule as [`mfx_affine_solve`]; the solution holds one value
// per node.
//
// # Safety
// `h` is a live handle and `out` is writable.
MfxStatus mfx_fredholm_solve(const MfxFredholm *h,
                             uint32_t eps_level,
                             bool override_certificate,
                             MfxTrace **out);

// # Safety
// `h` is null or a handle not yet freed.
void mfx_fredholm_free(MfxFredholm *h);

// Runs the command-line pipeline and returns its exit code: 0 converged or
// verified, 1 input error, 2 certificate refused, 3 not converged or
// verification failed. `seed < 0` selects the default seed; `eps_level`
// and `max_iter` of 0 keep the problem file's values.
//
// # Safety
// `mode`, `problem` and `out_dir` are NUL-terminated UTF-8 strings.
int32_t mfx_run(const char *mode,
                const char *problem,
                const char *out_dir,
                int64_t seed,
                uint32_t eps_level,
                uint32_t max_iter,
                bool override_certificate);

// Message for the last failure on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *mfx_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOFIX_H */
