#ifndef FDNET_H
#define FDNET_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Stable C interface to the fully dense segmentation network library.
 * Every function returns a status code; on failure fdnet_last_error() holds
 * a human-readable diagnostic (thread-local, valid until the next call on
 * the same thread). Strings returned through char** are heap-allocated and
 * must be released with fdnet_string_free(). */

typedef enum fdnet_status {
  FDNET_OK = 0,
  FDNET_ERR_RUNTIME = 1,
  FDNET_ERR_INVALID_CONFIG = 2,
  FDNET_ERR_IO = 3,
  FDNET_ERR_SHAPE = 4
} fdnet_status;

const char* fdnet_last_error(void);
void fdnet_string_free(char* s);

typedef struct fdnet_network fdnet_network;
typedef struct fdnet_dataset fdnet_dataset;

/* network_spec_json: the `network` section of a run config (may be "{}" for
 * the defaults). Parameters are initialized deterministically from seed. */
fdnet_status fdnet_network_create(const char* network_spec_json, uint64_t seed,
                                  fdnet_network** out);
fdnet_status fdnet_network_load(const char* checkpoint_path, fdnet_network** out);
fdnet_status fdnet_network_save(const fdnet_network* net, const char* checkpoint_path);
void fdnet_network_free(fdnet_network* net);

fdnet_status fdnet_network_param_count(const fdnet_network* net, uint64_t* out);
/* Aggregation wiring as text, one line per stage plus a trailing edge count. */
fdnet_status fdnet_network_connectivity(const fdnet_network* net, char** out_text);

/* synthetic_spec_json: seed, count, canvas, class_count, min_shapes,
 * max_shapes, min_size, max_size, noise (all optional). Writes
 * images/NNNN.ppm, labels/NNNN.pgm and manifest.json under out_dir. */
fdnet_status fdnet_dataset_generate(const char* synthetic_spec_json, const char* out_dir);
fdnet_status fdnet_dataset_open(const char* dir, fdnet_dataset** out);
void fdnet_dataset_free(fdnet_dataset* ds);
fdnet_status fdnet_dataset_size(const fdnet_dataset* ds, int64_t* out);

/* run_config_json: sections network/train/loss/data; data.dir must point at
 * a generated dataset. Writes checkpoints and train_log.csv into out_dir.
 * out_summary_json (optional) receives checkpoint/log paths and final loss. */
fdnet_status fdnet_train(const char* run_config_json, const char* out_dir,
                         char** out_summary_json);

/* options_json (optional): {"scales":[...], "flip":bool,
 * "trimap_widths":[...]}. Metrics JSON mirrors the evaluation report. */
fdnet_status fdnet_evaluate(const char* checkpoint_path, const char* data_dir,
                            const char* options_json, char** out_metrics_json);

/* options_json (optional): {"scales":[...], "flip":bool, "means":[r,g,b]}.
 * Padding means default to the input image's own channel means. */
fdnet_status fdnet_predict_file(const char* checkpoint_path, const char* image_ppm,
                                const char* out_pgm, const char* options_json);

/* selector: "all" or one op name; out: [{"op":..., "max_rel_err":...}] */
fdnet_status fdnet_gradcheck(const char* selector, char** out_report_json);
fdnet_status fdnet_gradcheck_ops(char** out_names_json);

/* options_json (optional): {"kernels":[...], "ignore_value":int}. Renders the
 * boundary-band partition of a label raster, band index scaled by 50. */
fdnet_status fdnet_bands_render(const char* labels_pgm, const char* options_json,
                                const char* out_pgm);

#ifdef __cplusplus
}
#endif

#endif /* FDNET_H */
