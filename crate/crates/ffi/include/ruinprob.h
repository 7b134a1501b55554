/* C interface to the ruinprob library: ruin probabilities for renewal risk
 * models with surplus-dependent premiums.
 *
 * Conventions: every function except rp_model_free, rp_last_error, and
 * rp_version returns a status code (RP_OK on success) and writes results
 * through out-pointers.  Model handles are opaque; create them with
 * rp_model_new and release them with rp_model_free.  On failure,
 * rp_last_error() returns a message for the most recent failing call on the
 * calling thread (valid until the next failure on that thread).
 */
#ifndef RUINPROB_H
#define RUINPROB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
#define RP_OK 0
#define RP_ERR_INVALID_ARGUMENT 1 /* bad pointer, code, or parameter */
#define RP_ERR_NUMERICAL 2        /* solver/diagnostic failure */
#define RP_ERR_UNSUPPORTED 3      /* no such route for this model */
#define RP_ERR_INTERNAL 4         /* contained internal panic */

/* Model cases: interarrival / claim-size distributions. */
#define RP_CASE_EXP_EXP 0      /* Exp(lambda) / Exp(mu)       */
#define RP_CASE_ERLANG2_EXP 1  /* Erlang(2,lambda) / Exp(mu)  */
#define RP_CASE_EXP_ERLANG2 2  /* Exp(lambda) / Erlang(2,mu)  */

/* Premium kinds and their parameter layouts for rp_model_new:
 *   RP_PREMIUM_CONST  [c]          p(u) = c
 *   RP_PREMIUM_LINEAR [c, eps]     p(u) = c + eps*u
 *   RP_PREMIUM_POLY   [c, e1, ...] p(u) = c + e1*u + e2*u^2 + ...
 *   RP_PREMIUM_RATL   [c, a]       p(u) = c + a/(1 + u)
 */
#define RP_PREMIUM_CONST 0
#define RP_PREMIUM_LINEAR 1
#define RP_PREMIUM_POLY 2
#define RP_PREMIUM_RATL 3

/* Tail regimes reported by rp_safe_load. */
#define RP_REGIME_NONE 0
#define RP_REGIME_ONE_ROOT 1
#define RP_REGIME_TWO_ROOT 2

/* Opaque model handle. */
typedef struct RpModel RpModel;

/* Simulation summary. */
typedef struct RpSimResult {
    double psi_hat;       /* ruin-probability estimate */
    double half_width_95; /* half-width of the 95% confidence interval */
    uint64_t n_paths;     /* paths simulated */
    uint64_t ruined_paths;
    double horizon;       /* time horizon actually used */
    int truncated;        /* 1 if the horizon likely truncated the estimate */
} RpSimResult;

/* Message for the most recent failure on the calling thread (empty string
 * if none).  Do not free; invalidated by the next failure on this thread. */
const char *rp_last_error(void);

/* Library version, e.g. "0.1.0".  Static storage; do not free. */
const char *rp_version(void);

/* Creates a model.  params points to n_params doubles laid out according
 * to premium_kind (see table above).  Writes the handle to *out. */
int rp_model_new(int case_code, double lambda, double mu, int premium_kind,
                 const double *params, size_t n_params, RpModel **out);

/* Releases a model handle.  Null is a no-op. */
void rp_model_free(RpModel *model);

/* Ruin probability by the closed-form route.  RP_ERR_UNSUPPORTED when the
 * case/premium pair has no closed form. */
int rp_ruin_exact(const RpModel *model, double u, double *out_psi);

/* Ruin curve by the boundary-value solver on n_cells uniform cells over
 * [0, u_max]; writes n_cells + 1 entries to each non-null output array.
 * tol is the target absolute error (0 selects the default 1e-8). */
int rp_ruin_curve_bvp(const RpModel *model, double u_max, size_t n_cells,
                      double tol, double *out_u, double *out_psi,
                      double *out_err);

/* Monte Carlo estimate from reserve u.  Identical inputs give identical
 * results regardless of thread count. */
int rp_simulate(const RpModel *model, double u, double horizon,
                uint64_t n_paths, uint64_t seed, RpSimResult *out);

/* Safe-load (net profit) verdict: writes 1/0, the margin (possibly
 * infinite), and an RP_REGIME_* code; null outputs are skipped.
 * RP_ERR_NUMERICAL on the degenerate boundary. */
int rp_safe_load(const RpModel *model, int *out_satisfied, double *out_margin,
                 int *out_regime);

/* Characteristic roots of the second-order equation at reserve u, smaller
 * then larger.  RP_ERR_UNSUPPORTED for the first-order exp/exp case. */
int rp_roots(const RpModel *model, double u, double *out_lo, double *out_hi);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RUINPROB_H */
