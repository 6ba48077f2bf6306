#ifndef CPB_OPTOMECH_H
#define CPB_OPTOMECH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpbStatus {
  CPB_STATUS_OK = 0,
  CPB_STATUS_NULL_POINTER = 1,
  CPB_STATUS_INVALID_ARGUMENT = 2,
  CPB_STATUS_INVALID_PARAMS = 3,
  CPB_STATUS_CONFIG_INVALID = 4,
  /**
   * The evaluation ran but the point is flagged; outputs hold NaN where undefined.
   */
  CPB_STATUS_NUMERICAL = 5,
  CPB_STATUS_IO = 6,
  CPB_STATUS_PANIC = 7,
} CpbStatus;

typedef enum CpbModel {
  CPB_MODEL_CIRCUIT = 0,
  CPB_MODEL_PERTURBATIVE2 = 1,
  CPB_MODEL_PERTURBATIVE3 = 2,
  CPB_MODEL_FOCK_ORACLE = 3,
} CpbModel;

/**
 * Opaque parameter set.
 */
typedef struct CpbParams CpbParams;

/**
 * Derived device quantities, SI units.
 */
typedef struct CpbDerived {
  double e_c;
  double e_j;
  double c_sigma1;
  double z0;
  double omega_c0;
} CpbDerived;

/**
 * Couplings at one bias point, rad/s.
 */
typedef struct CpbCoupling {
  double omega_c;
  double g_rp;
  double g_0;
  double g_ck;
  double enhancement;
} CpbCoupling;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success. Valid until
 * the next call on the same thread.
 */
const char *cpb_last_error(void);

/**
 * The reference device.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum CpbStatus cpb_params_reference(struct CpbParams **out);

/**
 * Parameters from the JSON parameter object used in sweep configs.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum CpbStatus cpb_params_from_json(const char *json, struct CpbParams **out);

/**
 * Energy form: E_C and E_J in GHz, junction asymmetry d and the gate's share of the
 * island capacitance; everything else at the reference device.
 *
 * # Safety
 * `out` must be writable.
 */
enum CpbStatus cpb_params_from_energies(double e_c_ghz,
                                        double e_j_ghz,
                                        double asymmetry,
                                        double gate_fraction,
                                        struct CpbParams **out);

/**
 * # Safety
 * `params` must be null or a handle from this library that has not been freed.
 */
void cpb_params_free(struct CpbParams *params);

/**
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum CpbStatus cpb_params_derived(const struct CpbParams *params, struct CpbDerived *out);

/**
 * One model at one bias point. A flagged point returns `CPB_STATUS_NUMERICAL` with the
 * flag name as the error message and NaN in the undefined fields of `out`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum CpbStatus cpb_evaluate(const struct CpbParams *params,
                            double n_g,
                            double f,
                            enum CpbModel model,
                            struct CpbCoupling *out);

/**
 * Runs a sweep config and returns its CSV; in ratio mode the tables follow each other
 * separated by a blank line. `jobs` = 0 uses every core. Free with `cpb_string_free`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
enum CpbStatus cpb_sweep_csv(const char *config_json, uint32_t jobs, char **out);

/**
 * As `cpb_sweep_csv`, returning the JSON document with the config fingerprint.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
enum CpbStatus cpb_sweep_json(const char *config_json, uint32_t jobs, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed.
 */
void cpb_string_free(char *s);

/**
 * Library version, static storage.
 */
const char *cpb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPB_OPTOMECH_H */
