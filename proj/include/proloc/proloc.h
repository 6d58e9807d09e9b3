/* ProLoc C API: location-proof engine over device encounter histories.
 *
 * All functions return PROLOC_OK on success or an error code; the message for
 * the most recent failure on the calling thread is available via
 * proloc_last_error(). Objects returned through out-parameters are owned by
 * the caller and released with the matching *_free function. Handles are
 * opaque; immutable objects (networks, stores, graphs, scores) may be shared
 * across threads.
 */
#ifndef PROLOC_H
#define PROLOC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PROLOC_API __declspec(dllexport)
#else
#define PROLOC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum proloc_status {
  PROLOC_OK = 0,
  PROLOC_ERR_INVALID_ARGUMENT,
  PROLOC_ERR_INVALID_SEED,
  PROLOC_ERR_INVALID_BUDGET,
  PROLOC_ERR_INVALID_RADIUS,
  PROLOC_ERR_INVALID_DIMENSIONS,
  PROLOC_ERR_NETWORK_MISMATCH,
  PROLOC_ERR_UNKNOWN_DEVICE,
  PROLOC_ERR_NO_ANCHORS,
  PROLOC_ERR_UNKNOWN_ANCHOR,
  PROLOC_ERR_NO_SCENARIOS,
  PROLOC_ERR_MISSING_SELF_REPORT,
  PROLOC_ERR_WITNESS_WITHOUT_REPORTS,
  PROLOC_ERR_CONFIG,
  PROLOC_ERR_IO,
  PROLOC_ERR_PARSE,
  PROLOC_ERR_INTERNAL
} proloc_status;

/* Message for the most recent error on this thread; empty string if none. */
PROLOC_API const char* proloc_last_error(void);

/* ---- Transport network and region algebra ---- */

typedef struct proloc_network proloc_network;
typedef struct proloc_region proloc_region;

PROLOC_API proloc_status proloc_network_grid(uint32_t width, uint32_t height,
                                             double pitch_m, double speed_mps,
                                             proloc_network** out);
PROLOC_API proloc_status proloc_network_load(const char* path, proloc_network** out);
PROLOC_API proloc_status proloc_network_save(const proloc_network* net, const char* path);
PROLOC_API void proloc_network_free(proloc_network* net);
PROLOC_API uint32_t proloc_network_node_count(const proloc_network* net);
PROLOC_API double proloc_network_avg_speed(const proloc_network* net);
PROLOC_API proloc_status proloc_network_node_position(const proloc_network* net,
                                                      uint32_t node, double* x,
                                                      double* y);

PROLOC_API proloc_status proloc_region_from_nodes(const proloc_network* net,
                                                  const uint32_t* nodes, size_t count,
                                                  proloc_region** out);
PROLOC_API proloc_status proloc_isochrone(const proloc_network* net,
                                          const proloc_region* seed, double budget_s,
                                          proloc_region** out);
PROLOC_API proloc_status proloc_grow_region(const proloc_network* net,
                                            const proloc_region* region,
                                            double radius_m, proloc_region** out);
PROLOC_API proloc_status proloc_region_intersect(const proloc_region* a,
                                                 const proloc_region* b,
                                                 proloc_region** out);
PROLOC_API proloc_status proloc_region_union(const proloc_region* a,
                                             const proloc_region* b,
                                             proloc_region** out);
PROLOC_API proloc_status proloc_region_contains(const proloc_region* outer,
                                                const proloc_region* inner,
                                                int* out_contains);
PROLOC_API proloc_status proloc_region_max_distance(const proloc_network* net,
                                                    const proloc_region* region,
                                                    double x, double y,
                                                    double* out_meters);
PROLOC_API size_t proloc_region_node_count(const proloc_region* region);
/* Copies up to capacity node ids into out; *out_written gets the full size. */
PROLOC_API proloc_status proloc_region_nodes(const proloc_region* region,
                                             uint32_t* out, size_t capacity,
                                             size_t* out_written);
PROLOC_API void proloc_region_free(proloc_region* region);

/* ---- Device histories ---- */

typedef struct proloc_store proloc_store;

/* Loads a JSON-Lines dataset and derives encounters. Pass 0 for any of the
 * parameters to use the defaults (600 s deadline, 300 s minimum co-location,
 * 120 s gap tolerance). */
PROLOC_API proloc_status proloc_store_load(const char* dataset_path,
                                           double upload_deadline_s,
                                           double min_duration_s,
                                           double gap_tolerance_s,
                                           proloc_store** out);
PROLOC_API void proloc_store_free(proloc_store* store);
PROLOC_API size_t proloc_store_device_count(const proloc_store* store);
PROLOC_API size_t proloc_store_encounter_count(const proloc_store* store);

/* Bracketing report queries. *out_found is 0 when no such report exists. */
PROLOC_API proloc_status proloc_store_prev_report(const proloc_store* store,
                                                  uint32_t device, double t,
                                                  double* out_t, double* out_x,
                                                  double* out_y, int* out_found);
PROLOC_API proloc_status proloc_store_next_report(const proloc_store* store,
                                                  uint32_t device, double t,
                                                  double* out_t, double* out_x,
                                                  double* out_y, int* out_found);
/* Number of timely encounters of device within [t-a, t+a]. */
PROLOC_API proloc_status proloc_store_encounters_in_window(const proloc_store* store,
                                                           uint32_t device, double t,
                                                           double a, size_t* out_count);

/* ---- Trust ---- */

typedef struct proloc_graph proloc_graph;
typedef struct proloc_scores proloc_scores;

PROLOC_API proloc_status proloc_graph_discrete(const proloc_store* store,
                                               double epoch_len_s, double exponent_l,
                                               double weight_cap, proloc_graph** out);
PROLOC_API proloc_status proloc_graph_continuous(const proloc_store* store,
                                                 double window_s, double exponent_l,
                                                 double weight_cap, proloc_graph** out);
PROLOC_API void proloc_graph_free(proloc_graph* graph);
PROLOC_API size_t proloc_graph_node_count(const proloc_graph* graph);
PROLOC_API size_t proloc_graph_edge_count(const proloc_graph* graph);
PROLOC_API proloc_status proloc_graph_edge_weight(const proloc_graph* graph,
                                                  uint32_t receiver, uint32_t sender,
                                                  double* out_weight);
PROLOC_API proloc_status proloc_graph_export_csv(const proloc_graph* graph,
                                                 const char* path);

PROLOC_API proloc_status proloc_trustrank(const proloc_graph* graph,
                                          const uint32_t* anchors, size_t anchor_count,
                                          double alpha, double tolerance,
                                          proloc_scores** out);
PROLOC_API void proloc_scores_free(proloc_scores* scores);
PROLOC_API proloc_status proloc_scores_get(const proloc_scores* scores,
                                           uint32_t device, double* out_score);
PROLOC_API double proloc_scores_sum(const proloc_scores* scores);
/* labels_csv_path may be NULL; labels then default to "unknown". */
PROLOC_API proloc_status proloc_scores_export_csv(const proloc_scores* scores,
                                                  const char* labels_csv_path,
                                                  const char* path);

/* ---- Batch pipeline (the CLI front end drives these) ---- */

/* Generates dataset files under out_dir from a simulate config JSON.
 * seed_override is applied when has_seed_override is non-zero. */
PROLOC_API proloc_status proloc_run_simulate(const char* config_path,
                                             const char* out_dir,
                                             int has_seed_override,
                                             uint64_t seed_override);

/* params_json (optional, may be NULL) keys: alpha, L, epoch_len, window,
 * weight_cap_discrete, weight_cap_continuous, solver_tolerance,
 * variant ("discrete"|"continuous").
 * anchors_csv (optional) is a comma-separated device list; when NULL,
 * anchor_count devices are picked deterministically from anchor_seed. */
PROLOC_API proloc_status proloc_run_trustrank(const char* dataset_path,
                                              const char* labels_path,
                                              const char* anchors_csv,
                                              uint32_t anchor_count,
                                              uint64_t anchor_seed,
                                              const char* params_json,
                                              const char* scores_out_path,
                                              const char* graph_out_path);

PROLOC_API proloc_status proloc_run_calibrate(const char* const* scores_paths,
                                              const char* const* labels_paths,
                                              size_t scenario_count,
                                              const char* out_json_path,
                                              double* out_threshold);

/* threshold_path may be NULL; threshold_value is used instead (devices with
 * score <= threshold are suspicious). out_ok receives the proof boolean. */
PROLOC_API proloc_status proloc_run_prove(const char* dataset_dir,
                                          const char* request_json_path,
                                          const char* threshold_path,
                                          double threshold_value,
                                          const char* params_json,
                                          const char* out_json_path,
                                          int* out_ok);

/* threads_override > 0 replaces the config's thread count. */
PROLOC_API proloc_status proloc_run_eval(const char* config_path,
                                         const char* out_dir,
                                         int has_seed_override,
                                         uint64_t seed_override,
                                         int threads_override);

#ifdef __cplusplus
}
#endif

#endif /* PROLOC_H */
