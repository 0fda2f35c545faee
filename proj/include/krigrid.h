/* krigrid C API: kriging-based weed gridmaps and discrete map representations.
 *
 * Every function that can fail returns a status code (KRG_OK on success) and
 * writes its result through out-parameters. On failure the out-parameters are
 * left untouched and krg_last_error() returns a message for the calling
 * thread. Handles are opaque; each krg_*_free accepts NULL.
 */
#ifndef KRIGRID_H
#define KRIGRID_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* --- status ---------------------------------------------------------------- */

#define KRG_OK 0
#define KRG_ERR_INVALID_ARGUMENT 1
#define KRG_ERR_DECODE 2
#define KRG_ERR_IO 3
#define KRG_ERR_SINGULAR 4
#define KRG_ERR_DEGENERATE 5
#define KRG_ERR_BAD_FORMAT 6
#define KRG_ERR_UNKNOWN 7

/* Message for the most recent failure on this thread ("" when none). The
 * pointer stays valid until the next failing call on the same thread. */
const char* krg_last_error(void);

/* Library version, e.g. "0.1.0". */
const char* krg_version(void);

/* --- opaque handles ---------------------------------------------------------- */

typedef struct krg_raster krg_raster;   /* semantic weed mask */
typedef struct krg_samples krg_samples; /* sampled weed fractions */
typedef struct krg_field krg_field;     /* dense scalar grid */
typedef struct krg_kriging krg_kriging; /* fitted interpolator */
typedef struct krg_repr krg_repr;       /* discrete representation */

/* --- semantic raster ---------------------------------------------------------- */

/* Load a semantic PNG; pixels exactly matching (r, g, b) become weed cells. */
int krg_raster_load_png(const char* path, uint8_t r, uint8_t g, uint8_t b, krg_raster** out);
int krg_raster_size(const krg_raster* raster, int* width, int* height);
int krg_raster_weed_count(const krg_raster* raster, uint64_t* count);
void krg_raster_free(krg_raster* raster);

/* --- sampling ------------------------------------------------------------------ */

/* n uniform cell positions (seeded, reproducible); each sample's value is the
 * weed fraction of the window x window box around it, clipped at borders. */
int krg_sample_uniform(const krg_raster* raster, int n, int window, uint64_t seed,
                       krg_samples** out);
int krg_samples_new(const double* xs, const double* ys, const double* values, size_t n,
                    krg_samples** out);
int krg_samples_count(const krg_samples* samples, size_t* count);
int krg_samples_get(const krg_samples* samples, size_t index, double* x, double* y,
                    double* value);
int krg_samples_write_csv(const krg_samples* samples, const char* path);
int krg_samples_read_csv(const char* path, krg_samples** out);
void krg_samples_free(krg_samples* samples);

/* --- variogram ------------------------------------------------------------------ */

#define KRG_VARIOGRAM_EXPONENTIAL 0
#define KRG_VARIOGRAM_SPHERICAL 1
#define KRG_VARIOGRAM_GAUSSIAN 2
#define KRG_VARIOGRAM_LINEAR 3
#define KRG_VARIOGRAM_POWER 4
#define KRG_VARIOGRAM_HOLE_EFFECT 5

typedef struct krg_variogram {
    int kind;
    double sill;     /* plateau variance; scale for the power kind */
    double range;    /* lag scale; unused by linear and power */
    double nugget;
    double exponent; /* power kind only */
    double slope;    /* linear kind only */
    int degenerate;  /* 1 when the data could not constrain the fit */
} krg_variogram;

int krg_variogram_kind_from_name(const char* name, int* kind);
const char* krg_variogram_kind_name(int kind); /* NULL for unknown kinds */

/* Weighted-least-squares fit against an empirical variogram with n_lags
 * equal-width bins (pass 0 for the default of 24). */
int krg_fit_variogram(const krg_samples* samples, int kind, int n_lags, krg_variogram* out);
int krg_semivariance(const krg_variogram* model, double lag, double* gamma);
int krg_variogram_write_file(const krg_variogram* model, const char* path);
int krg_variogram_read_file(const char* path, krg_variogram* out);

/* --- kriging ---------------------------------------------------------------------- */

typedef struct krg_prediction {
    double mean;
    double variance;
} krg_prediction;

typedef struct krg_qstats {
    double q1; /* mean normalised CV residual, ~0 when calibrated */
    double q2; /* mean squared normalised CV residual, ~1 when calibrated */
    double cr; /* variance-scale diagnostic */
} krg_qstats;

int krg_kriging_new(const krg_samples* samples, const krg_variogram* model, krg_kriging** out);
int krg_kriging_predict(const krg_kriging* kriging, double x, double y, krg_prediction* out);
/* Sequential leave-previous-out cross-validation statistics. */
int krg_kriging_cross_validate(const krg_kriging* kriging, krg_qstats* out);
/* Render the mean surface on a width x height grid over the extent
 * [x0, x1) x [y0, y1), clamped to [0, 1]. threads = 0 picks automatically. */
int krg_kriging_render(const krg_kriging* kriging, int width, int height, double x0, double y0,
                       double x1, double y1, int threads, krg_field** out);
void krg_kriging_free(krg_kriging* kriging);

/* --- scalar fields ------------------------------------------------------------------ */

int krg_field_create(int width, int height, const double* values /* nullable */,
                     krg_field** out);
int krg_field_size(const krg_field* field, int* width, int* height);
/* Row-major cell values; valid until the field is freed or mutated. */
const double* krg_field_values(const krg_field* field);
int krg_field_write_png(const krg_field* field, const char* path);
int krg_field_read_png(const char* path, krg_field** out);
int krg_field_write_gpf(const krg_field* field, const char* path);
int krg_field_read_gpf(const char* path, krg_field** out);
void krg_field_free(krg_field* field);

/* --- discrete representations --------------------------------------------------------- */

#define KRG_REPR_QUADTREE 0
#define KRG_REPR_WEDGELET 1
#define KRG_REPR_BSP_LSE 2
#define KRG_REPR_BSP_REGION 3
#define KRG_REPR_HEXMAP 4

int krg_repr_kind_from_name(const char* name, int* kind);
const char* krg_repr_kind_name(int kind); /* NULL for unknown kinds */

int krg_build_quadtree(const krg_field* field, int max_depth, double hom_thresh, krg_repr** out);
int krg_build_wedgelet(const krg_field* field, int max_depth, double hom_thresh,
                       double line_thresh, krg_repr** out);
int krg_build_bsp_lse(const krg_field* field, int max_depth, double hom_thresh,
                      int angle_step_deg, int offset_step, int prune_keep, krg_repr** out);
int krg_build_bsp_region(const krg_field* field, int min_region_px, int quantisation,
                         krg_repr** out);
int krg_build_hexmap(const krg_field* field, double base_edge, int levels,
                     const double* error_thresholds, krg_repr** out);

int krg_repr_kind(const krg_repr* repr, int* kind);
int krg_repr_size(const krg_repr* repr, int* width, int* height);
int krg_repr_leaf_count(const krg_repr* repr, uint64_t* count);
int krg_repr_build_time(const krg_repr* repr, double* seconds);
/* Attach a build time recorded elsewhere (e.g. loaded from a sidecar). */
int krg_repr_set_build_time(krg_repr* repr, double seconds);
int krg_repr_render(const krg_repr* repr, krg_field** out);
/* Serialise to the GPDR byte format; free the buffer with krg_bytes_free. */
int krg_repr_serialize(const krg_repr* repr, uint8_t** bytes, size_t* size);
int krg_repr_deserialize(const uint8_t* bytes, size_t size, krg_repr** out);
int krg_repr_write_file(const krg_repr* repr, const char* path);
int krg_repr_read_file(const char* path, krg_repr** out);
void krg_repr_free(krg_repr* repr);
void krg_bytes_free(uint8_t* bytes);

/* --- metrics ------------------------------------------------------------------------------ */

typedef struct krg_metric_report {
    double one_minus_ssim;
    int hamming;    /* perceptual-hash Hamming distance, 0..4096 */
    double mse;     /* over 8-bit quantised values */
    double build_time;
    uint64_t size_bytes;
    uint64_t leaf_count;
} krg_metric_report;

/* Render the representation from its serialised form and score it against the
 * reference field. */
int krg_evaluate(const krg_field* reference, const krg_repr* repr, krg_metric_report* out);
int krg_mse(const krg_field* a, const krg_field* b, double* out);
int krg_ssim(const krg_field* a, const krg_field* b, double* out);
int krg_hash_distance(const krg_field* a, const krg_field* b, int* out);

/* --- spatial features ----------------------------------------------------------------------- */

typedef struct krg_feature_config {
    int connectivity;      /* 4 or 8, patch labelling */
    int dbscan_downsample; /* mask downsample factor before clustering */
    double dbscan_eps;
    int dbscan_min_pts;
    int agg_grid;          /* coarse grid for the autocorrelation statistics */
    double z_thresh;
    uint64_t perm_seed;
    int permutations;
} krg_feature_config;

void krg_feature_config_default(krg_feature_config* config);

typedef struct krg_field_features {
    double weed_coverage_ratio;
    uint64_t weed_patches;
    uint64_t largest_patch_size;
    double avg_patch_size;
    double patch_size_std;
    uint64_t dbscan_num_clusters;
    double dbscan_avg_cluster_size;
    /* has_* is 0 when the statistic is undefined (zero-variance grid). */
    int has_global_autocorrelation;
    double global_autocorrelation;
    int has_hotspot_to_coldspot_ratio;
    double hotspot_to_coldspot_ratio;
    int has_hot_to_cold_outlier_ratio;
    double hot_to_cold_outlier_ratio;
} krg_field_features;

int krg_compute_features(const krg_raster* raster, const krg_feature_config* config /* nullable */,
                         krg_field_features* out);

/* --- correlation --------------------------------------------------------------------------------- */

/* Spearman rank correlation (mean ranks for ties). Fails with
 * KRG_ERR_DEGENERATE when either list has zero rank variance. */
int krg_spearman(const double* xs, const double* ys, size_t n, double* rho);

#ifdef __cplusplus
}
#endif

#endif /* KRIGRID_H */
