#ifndef KZSIM_H
#define KZSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum KzStatus {
  KZ_STATUS_OK = 0,
  KZ_STATUS_NULL_POINTER = 1,
  KZ_STATUS_INVALID_ARGUMENT = 2,
  KZ_STATUS_NUMERICAL = 3,
  KZ_STATUS_INSUFFICIENT_DATA = 4,
  KZ_STATUS_IO = 5,
  KZ_STATUS_BUFFER_TOO_SMALL = 6,
  KZ_STATUS_PANIC = 7,
} KzStatus;

/**
 * Which chain terms receive disorder.
 */
typedef enum KzTargets {
  KZ_TARGETS_COUPLINGS = 0,
  KZ_TARGETS_FIELDS = 1,
  KZ_TARGETS_BOTH = 2,
} KzTargets;

/**
 * BdG state at the end of an anneal (opaque).
 */
typedef struct KzBdgState KzBdgState;

/**
 * Ising chain with per-bond couplings and per-site fields (opaque).
 */
typedef struct KzChain KzChain;

/**
 * Anneal schedule (opaque).
 */
typedef struct KzSchedule KzSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *kzsim_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Owned by the library and valid
 * until the next failing call on this thread.
 */
const char *kzsim_last_error(void);

void kzsim_clear_error(void);

/**
 * Γ = β(1−s), 𝒥 = βs in GHz.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KzStatus kzsim_schedule_linear(double beta_ghz, struct KzSchedule **out);

/**
 * Γ = 4β(1−s)², 𝒥 = 4βs² in GHz.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KzStatus kzsim_schedule_quadratic(double beta_ghz, struct KzSchedule **out);

/**
 * Piecewise-linear schedule through `n` knots, s strictly increasing.
 *
 * # Safety
 * The three arrays must hold `n` values; `out` must be valid.
 */
enum KzStatus kzsim_schedule_tabulated(const double *s,
                                       const double *gamma_ghz,
                                       const double *jcal_ghz,
                                       size_t n,
                                       struct KzSchedule **out);

/**
 * # Safety
 * `sch` must come from a `kzsim_schedule_*` constructor and not be used afterwards.
 */
void kzsim_schedule_free(struct KzSchedule *sch);

/**
 * Γ and 𝒥 in GHz at `s`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum KzStatus kzsim_schedule_eval(const struct KzSchedule *sch,
                                  double s,
                                  double *gamma_ghz,
                                  double *jcal_ghz);

/**
 * Critical point s_c and quench constant b (1/ns) for coupling `j`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum KzStatus kzsim_schedule_critical(const struct KzSchedule *sch,
                                      double j,
                                      double *s_c,
                                      double *b);

/**
 * Uniform periodic chain of `l` sites with coupling `j` and no fields.
 *
 * # Safety
 * `out` must be valid.
 */
enum KzStatus kzsim_chain_uniform(size_t l, double j, struct KzChain **out);

/**
 * # Safety
 * `chain` must come from a chain constructor and not be used afterwards.
 */
void kzsim_chain_free(struct KzChain *chain);

/**
 * Number of sites, 0 for NULL.
 *
 * # Safety
 * `chain` must be NULL or valid.
 */
size_t kzsim_chain_len(const struct KzChain *chain);

/**
 * Replaces the bond couplings; bond `i` joins sites `i` and `i+1 mod L`.
 *
 * # Safety
 * `values` must hold `n` doubles.
 */
enum KzStatus kzsim_chain_set_couplings(struct KzChain *chain, const double *values, size_t n);

/**
 * Replaces the longitudinal fields.
 *
 * # Safety
 * `values` must hold `n` doubles.
 */
enum KzStatus kzsim_chain_set_fields(struct KzChain *chain, const double *values, size_t n);

/**
 * Realization `index` of Gaussian disorder of width `sigma` around `nominal`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum KzStatus kzsim_chain_disorder(const struct KzChain *nominal,
                                   double sigma,
                                   enum KzTargets targets,
                                   uint64_t master_seed,
                                   size_t index,
                                   struct KzChain **out);

/**
 * Uniform chain through the momentum-mode solver: kink-density cumulants and ground-state
 * probability. Any output pointer may be NULL.
 *
 * # Safety
 * `sch` must be valid; non-NULL outputs must be writable.
 */
enum KzStatus kzsim_modes_run(const struct KzSchedule *sch,
                              double j,
                              double t_a,
                              size_t l,
                              double *kappa1,
                              double *kappa2,
                              double *kappa3,
                              double *p_gs);

/**
 * Real-space BdG anneal over the full schedule.
 *
 * # Safety
 * Pointers must be valid.
 */
enum KzStatus kzsim_bdg_evolve(const struct KzChain *chain,
                               const struct KzSchedule *sch,
                               double t_a,
                               struct KzBdgState **out);

/**
 * # Safety
 * `state` must come from [`kzsim_bdg_evolve`] and not be used afterwards.
 */
void kzsim_bdg_free(struct KzBdgState *state);

/**
 * Kink density and C^KK_r for r = 1..=n_r, written to `ckk[0..n_r]`.
 *
 * # Safety
 * `ckk` must hold `n_r` doubles; other pointers valid. `chain` must be the evolved chain.
 */
enum KzStatus kzsim_bdg_kinks(const struct KzBdgState *state,
                              const struct KzChain *chain,
                              size_t n_r,
                              double *n_bar,
                              double *ckk);

/**
 * Overlap with the instantaneous ground state at the end of the schedule.
 *
 * # Safety
 * Pointers must be valid.
 */
enum KzStatus kzsim_bdg_ground_state_probability(const struct KzBdgState *state,
                                                 const struct KzChain *chain,
                                                 const struct KzSchedule *sch,
                                                 double *p_gs);

/**
 * TEBD anneal with bond dimension `bond_dim` and Trotter step `dt` (ns). Writes n̄, C^KK_r for
 * r = 1..=n_r, the largest bond entropy and the total discarded weight.
 *
 * # Safety
 * `ckk` must hold `n_r` doubles; other pointers valid.
 */
enum KzStatus kzsim_tebd_run(const struct KzChain *chain,
                             const struct KzSchedule *sch,
                             double t_a,
                             size_t bond_dim,
                             double dt,
                             size_t n_r,
                             double *n_bar,
                             double *ckk,
                             double *max_entropy,
                             double *discarded_weight);

/**
 * Exact state-vector anneal for small chains (L ≤ 12).
 *
 * # Safety
 * Pointers must be valid.
 */
enum KzStatus kzsim_dense_run(const struct KzChain *chain,
                              const struct KzSchedule *sch,
                              double t_a,
                              double *n_bar,
                              double *p_gs);

/**
 * Simulated annealing with a geometric β ramp from `beta_from` to `beta_to`. Writes
 * `n_samples` rows of L spins (±1) into `spins`, which must hold `capacity` bytes.
 *
 * # Safety
 * `spins` must hold `capacity` bytes; `chain` valid.
 */
enum KzStatus kzsim_sa_sample(const struct KzChain *chain,
                              size_t sweeps,
                              double beta_from,
                              double beta_to,
                              size_t n_samples,
                              uint64_t seed,
                              int8_t *spins,
                              size_t capacity);

/**
 * Cumulants of the kink density over `n_samples` rows of `l` spins.
 *
 * # Safety
 * `spins` must hold `n_samples·l` values of ±1; outputs valid.
 */
enum KzStatus kzsim_kink_cumulants(const int8_t *spins,
                                   size_t n_samples,
                                   size_t l,
                                   double j_sign,
                                   double *kappa1,
                                   double *kappa2,
                                   double *kappa3);

/**
 * Kibble-Zurek density `t_a^{-1/2}/(2π√(2b))`.
 *
 * # Safety
 * `out` must be valid.
 */
enum KzStatus kzsim_predict_density(double b, double t_a, double *out);

/**
 * Landau-Zener rate `2π³b/L²`.
 *
 * # Safety
 * `out` must be valid.
 */
enum KzStatus kzsim_lz_rate(double b, size_t l, double *out);

/**
 * Runs a CLI command (`run`, `analyze`, `theory`, `fit` or `shim`) from a config file.
 * `out_dir` may be NULL to use the config's `out`. `failures` receives the number of grid
 * units that failed.
 *
 * # Safety
 * Strings must be NUL-terminated UTF-8; `failures` may be NULL.
 */
enum KzStatus kzsim_run_command(const char *command,
                                const char *config_path,
                                const char *out_dir,
                                size_t *failures);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KZSIM_H */
