/* C interface to the fusion-planning core. All functions return FP_OK or an
 * error status; fp_last_error() holds a thread-local diagnostic for the most
 * recent failure. Strings returned through char** are heap-allocated and
 * must be released with fp_string_free(). */
#ifndef FUSEPLAN_H
#define FUSEPLAN_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  FP_OK = 0,
  FP_ERR_INFEASIBLE = 1,
  FP_ERR_INPUT = 2,
  FP_ERR_INTERNAL = 3
} fp_status;

typedef struct fp_pipeline fp_pipeline;
typedef struct fp_device fp_device;
typedef struct fp_plan fp_plan;

const char* fp_last_error(void);
void fp_string_free(char* s);

/* --- inputs ------------------------------------------------------------ */

fp_status fp_pipeline_parse(const char* json_text, fp_pipeline** out);
fp_status fp_pipeline_load(const char* path, fp_pipeline** out);
void fp_pipeline_free(fp_pipeline* p);

fp_status fp_device_parse(const char* json_text, fp_device** out);
/* Accepts a path, or a bare profile name resolved under $FUSEPLAN_DEVICE_DIR. */
fp_status fp_device_load(const char* path_or_name, fp_device** out);
void fp_device_free(fp_device* d);

/* --- planning -----------------------------------------------------------
 * options_json (may be NULL) accepts:
 *   {"halo_mode": "cumulative"|"paper-max",
 *    "transfer_variant": "exact"|"paper",
 *    "force_partition": "1-2,3-5",
 *    "tile": {"x": 32, "y": 32, "t": 4}}
 */

fp_status fp_plan_create(const fp_pipeline* p, const fp_device* d,
                         const char* options_json, fp_plan** out);
void fp_plan_free(fp_plan* plan);
fp_status fp_plan_render_json(const fp_plan* plan, char** out);

/* --- reports ------------------------------------------------------------
 * format: "text" | "json" | "csv"; with_timestamp: 0 or 1.
 */

fp_status fp_analyze_report(const fp_pipeline* p, const char* format,
                            int with_timestamp, char** out);

fp_status fp_plan_report(const fp_plan* plan, const char* format,
                         int with_timestamp, char** out);

/* halo: {x_lo, x_hi, y_lo, y_hi, t_lo, t_hi}. Sweeps x = y in 1..max_x,
 * t in 1..max_t against the device SHMEM budget. */
fp_status fp_tile_sweep(const fp_device* d, const int halo[6], int max_x,
                        int max_t, const char* format, char** out);

/* Writes one <name>_group<k>.genkernel per fused group into out_dir and
 * returns the manifest JSON. */
fp_status fp_codegen(const fp_pipeline* p, const fp_device* d,
                     const char* options_json, const char* name,
                     const char* out_dir, char** manifest_out);

/* Runs the sequential oracle and the tiled plan, compares outputs, and
 * reports analytic vs measured traffic for the No/Two/Full fusion options.
 * Exactly one of video_path / synth_json must be given. synth_json:
 *   {"width","height","frames","channels","noise_sigma","background","seed",
 *    "markers":[{"x","y","vx","vy","radius","intensity"}]}
 * When track_csv_path is non-NULL and the pipeline ends in a global
 * aggregation stage on a synthetic scene, trajectories are written there. */
fp_status fp_simulate(const fp_pipeline* p, const fp_device* d,
                      const char* options_json, const char* video_path,
                      const char* synth_json, const char* track_csv_path,
                      const char* format, int with_timestamp, char** out);

/* measurements_csv columns: n_kernels,blocks,tile_x,tile_y,tile_t,
 * halo_x_lo,halo_x_hi,halo_y_lo,halo_y_hi,halo_t_lo,halo_t_hi,measured_time.
 * Returns {"params": {...}, "residual_rms": ...}. */
fp_status fp_calibrate_csv(const char* measurements_csv, char** result_json);

/* Re-renders the device profile with the cost block replaced by the fitted
 * params JSON (the "params" object returned by fp_calibrate_csv). */
fp_status fp_device_render_with_cost(const fp_device* d,
                                     const char* params_json, char** out);

#ifdef __cplusplus
}
#endif

#endif /* FUSEPLAN_H */
