#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "krigrid.h"

#include "core/correlation.hpp"
#include "core/error.hpp"
#include "core/kriging.hpp"
#include "core/metrics.hpp"
#include "core/raster_io.hpp"
#include "core/representation.hpp"
#include "core/spatial_features.hpp"
#include "core/variogram.hpp"

struct krg_raster {
    krigrid::SemanticRaster raster;
};
struct krg_samples {
    std::vector<krigrid::SamplePoint> samples;
};
struct krg_field {
    krigrid::ScalarField field;
};
struct krg_kriging {
    krigrid::KrigingModel model;
};
struct krg_repr {
    krigrid::DiscreteRepresentation repr;
};

namespace {

std::string& last_error_slot() {
    thread_local std::string message;
    return message;
}

template <typename Fn>
int wrap(Fn&& fn) noexcept {
    try {
        fn();
        return KRG_OK;
    } catch (const krigrid::Error& e) {
        last_error_slot() = e.what();
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        last_error_slot() = e.what();
        return KRG_ERR_UNKNOWN;
    } catch (...) {
        last_error_slot() = "unknown error";
        return KRG_ERR_UNKNOWN;
    }
}

void check(const void* ptr, const char* what) {
    krigrid::require(ptr != nullptr, krigrid::ErrorCode::invalid_argument,
                     std::string(what) + " must not be null");
}

krigrid::VariogramModel to_model(const krg_variogram& v) {
    krigrid::require(v.kind >= 0 && v.kind <= KRG_VARIOGRAM_HOLE_EFFECT,
                     krigrid::ErrorCode::invalid_argument, "unknown variogram kind");
    krigrid::VariogramModel m;
    m.kind = static_cast<krigrid::VariogramKind>(v.kind);
    m.sill = v.sill;
    m.range = v.range;
    m.nugget = v.nugget;
    m.exponent = v.exponent;
    m.slope = v.slope;
    return m;
}

krg_variogram from_fit(const krigrid::VariogramFit& fit) {
    krg_variogram v{};
    v.kind = static_cast<int>(fit.model.kind);
    v.sill = fit.model.sill;
    v.range = fit.model.range;
    v.nugget = fit.model.nugget;
    v.exponent = fit.model.exponent;
    v.slope = fit.model.slope;
    v.degenerate = fit.degenerate ? 1 : 0;
    return v;
}

} // namespace

extern "C" {

const char* krg_last_error(void) {
    return last_error_slot().c_str();
}

const char* krg_version(void) {
    return "0.1.0";
}

/* --- semantic raster --- */

int krg_raster_load_png(const char* path, uint8_t r, uint8_t g, uint8_t b, krg_raster** out) {
    return wrap([&] {
        check(path, "path");
        check(out, "out");
        auto raster = krigrid::load_orthomosaic_file(path, {r, g, b});
        *out = new krg_raster{std::move(raster)};
    });
}

int krg_raster_size(const krg_raster* raster, int* width, int* height) {
    return wrap([&] {
        check(raster, "raster");
        if (width != nullptr)
            *width = raster->raster.width;
        if (height != nullptr)
            *height = raster->raster.height;
    });
}

int krg_raster_weed_count(const krg_raster* raster, uint64_t* count) {
    return wrap([&] {
        check(raster, "raster");
        check(count, "count");
        uint64_t n = 0;
        for (std::uint8_t m : raster->raster.weed_mask)
            n += m ? 1 : 0;
        *count = n;
    });
}

void krg_raster_free(krg_raster* raster) {
    delete raster;
}

/* --- sampling --- */

int krg_sample_uniform(const krg_raster* raster, int n, int window, uint64_t seed,
                       krg_samples** out) {
    return wrap([&] {
        check(raster, "raster");
        check(out, "out");
        *out = new krg_samples{krigrid::sample_uniform(raster->raster, n, window, seed)};
    });
}

int krg_samples_new(const double* xs, const double* ys, const double* values, size_t n,
                    krg_samples** out) {
    return wrap([&] {
        check(out, "out");
        if (n > 0) {
            check(xs, "xs");
            check(ys, "ys");
            check(values, "values");
        }
        std::vector<krigrid::SamplePoint> samples(n);
        for (size_t i = 0; i < n; ++i)
            samples[i] = {xs[i], ys[i], values[i]};
        *out = new krg_samples{std::move(samples)};
    });
}

int krg_samples_count(const krg_samples* samples, size_t* count) {
    return wrap([&] {
        check(samples, "samples");
        check(count, "count");
        *count = samples->samples.size();
    });
}

int krg_samples_get(const krg_samples* samples, size_t index, double* x, double* y,
                    double* value) {
    return wrap([&] {
        check(samples, "samples");
        krigrid::require(index < samples->samples.size(), krigrid::ErrorCode::invalid_argument,
                         "sample index out of range");
        const krigrid::SamplePoint& s = samples->samples[index];
        if (x != nullptr)
            *x = s.x;
        if (y != nullptr)
            *y = s.y;
        if (value != nullptr)
            *value = s.value;
    });
}

int krg_samples_write_csv(const krg_samples* samples, const char* path) {
    return wrap([&] {
        check(samples, "samples");
        check(path, "path");
        krigrid::write_samples_csv_file(samples->samples, path);
    });
}

int krg_samples_read_csv(const char* path, krg_samples** out) {
    return wrap([&] {
        check(path, "path");
        check(out, "out");
        *out = new krg_samples{krigrid::read_samples_csv_file(path)};
    });
}

void krg_samples_free(krg_samples* samples) {
    delete samples;
}

/* --- variogram --- */

int krg_variogram_kind_from_name(const char* name, int* kind) {
    return wrap([&] {
        check(name, "name");
        check(kind, "kind");
        *kind = static_cast<int>(krigrid::variogram_kind_from_string(name));
    });
}

const char* krg_variogram_kind_name(int kind) {
    if (kind < 0 || kind > KRG_VARIOGRAM_HOLE_EFFECT)
        return nullptr;
    return krigrid::to_string(static_cast<krigrid::VariogramKind>(kind));
}

int krg_fit_variogram(const krg_samples* samples, int kind, int n_lags, krg_variogram* out) {
    return wrap([&] {
        check(samples, "samples");
        check(out, "out");
        krigrid::require(kind >= 0 && kind <= KRG_VARIOGRAM_HOLE_EFFECT,
                         krigrid::ErrorCode::invalid_argument, "unknown variogram kind");
        auto fit = krigrid::fit_variogram(samples->samples,
                                          static_cast<krigrid::VariogramKind>(kind),
                                          n_lags == 0 ? 24 : n_lags);
        *out = from_fit(fit);
    });
}

int krg_semivariance(const krg_variogram* model, double lag, double* gamma) {
    return wrap([&] {
        check(model, "model");
        check(gamma, "gamma");
        *gamma = krigrid::semivariance(to_model(*model), lag);
    });
}

int krg_variogram_write_file(const krg_variogram* model, const char* path) {
    return wrap([&] {
        check(model, "model");
        check(path, "path");
        krigrid::VariogramFit fit;
        fit.model = to_model(*model);
        fit.degenerate = model->degenerate != 0;
        std::ofstream out(path);
        krigrid::require(out.good(), krigrid::ErrorCode::io_failure,
                         std::string("cannot open for writing: ") + path);
        krigrid::write_variogram_text(fit, out);
        krigrid::require(out.good(), krigrid::ErrorCode::io_failure,
                         std::string("write failed: ") + path);
    });
}

int krg_variogram_read_file(const char* path, krg_variogram* out) {
    return wrap([&] {
        check(path, "path");
        check(out, "out");
        std::ifstream in(path);
        krigrid::require(in.good(), krigrid::ErrorCode::io_failure,
                         std::string("cannot open: ") + path);
        *out = from_fit(krigrid::variogram_from_text(in));
    });
}

/* --- kriging --- */

int krg_kriging_new(const krg_samples* samples, const krg_variogram* model, krg_kriging** out) {
    return wrap([&] {
        check(samples, "samples");
        check(model, "model");
        check(out, "out");
        *out = new krg_kriging{krigrid::KrigingModel(samples->samples, to_model(*model))};
    });
}

int krg_kriging_predict(const krg_kriging* kriging, double x, double y, krg_prediction* out) {
    return wrap([&] {
        check(kriging, "kriging");
        check(out, "out");
        auto p = kriging->model.predict(x, y);
        out->mean = p.mean;
        out->variance = p.variance;
    });
}

int krg_kriging_cross_validate(const krg_kriging* kriging, krg_qstats* out) {
    return wrap([&] {
        check(kriging, "kriging");
        check(out, "out");
        auto q = kriging->model.cross_validate();
        out->q1 = q.q1;
        out->q2 = q.q2;
        out->cr = q.cr;
    });
}

int krg_kriging_render(const krg_kriging* kriging, int width, int height, double x0, double y0,
                       double x1, double y1, int threads, krg_field** out) {
    return wrap([&] {
        check(kriging, "kriging");
        check(out, "out");
        auto field =
            krigrid::render_field(kriging->model, width, height, {x0, y0, x1, y1}, threads);
        *out = new krg_field{std::move(field)};
    });
}

void krg_kriging_free(krg_kriging* kriging) {
    delete kriging;
}

/* --- scalar fields --- */

int krg_field_create(int width, int height, const double* values, krg_field** out) {
    return wrap([&] {
        check(out, "out");
        krigrid::ScalarField field(width, height, 0.0);
        if (values != nullptr)
            std::memcpy(field.values.data(), values, field.cell_count() * sizeof(double));
        *out = new krg_field{std::move(field)};
    });
}

int krg_field_size(const krg_field* field, int* width, int* height) {
    return wrap([&] {
        check(field, "field");
        if (width != nullptr)
            *width = field->field.width;
        if (height != nullptr)
            *height = field->field.height;
    });
}

const double* krg_field_values(const krg_field* field) {
    return field == nullptr ? nullptr : field->field.values.data();
}

int krg_field_write_png(const krg_field* field, const char* path) {
    return wrap([&] {
        check(field, "field");
        check(path, "path");
        krigrid::write_field_png(field->field, path);
    });
}

int krg_field_read_png(const char* path, krg_field** out) {
    return wrap([&] {
        check(path, "path");
        check(out, "out");
        *out = new krg_field{krigrid::read_field_png(path)};
    });
}

int krg_field_write_gpf(const krg_field* field, const char* path) {
    return wrap([&] {
        check(field, "field");
        check(path, "path");
        krigrid::write_field_gpf(field->field, path);
    });
}

int krg_field_read_gpf(const char* path, krg_field** out) {
    return wrap([&] {
        check(path, "path");
        check(out, "out");
        *out = new krg_field{krigrid::read_field_gpf(path)};
    });
}

void krg_field_free(krg_field* field) {
    delete field;
}

/* --- discrete representations --- */

int krg_repr_kind_from_name(const char* name, int* kind) {
    return wrap([&] {
        check(name, "name");
        check(kind, "kind");
        *kind = static_cast<int>(krigrid::repr_kind_from_string(name));
    });
}

const char* krg_repr_kind_name(int kind) {
    if (kind < 0 || kind > KRG_REPR_HEXMAP)
        return nullptr;
    return krigrid::to_string(static_cast<krigrid::ReprKind>(kind));
}

int krg_build_quadtree(const krg_field* field, int max_depth, double hom_thresh, krg_repr** out) {
    return wrap([&] {
        check(field, "field");
        check(out, "out");
        *out = new krg_repr{krigrid::build_quadtree(field->field, max_depth, hom_thresh)};
    });
}

int krg_build_wedgelet(const krg_field* field, int max_depth, double hom_thresh,
                       double line_thresh, krg_repr** out) {
    return wrap([&] {
        check(field, "field");
        check(out, "out");
        *out = new krg_repr{
            krigrid::build_wedgelet(field->field, max_depth, hom_thresh, line_thresh)};
    });
}

int krg_build_bsp_lse(const krg_field* field, int max_depth, double hom_thresh,
                      int angle_step_deg, int offset_step, int prune_keep, krg_repr** out) {
    return wrap([&] {
        check(field, "field");
        check(out, "out");
        *out = new krg_repr{krigrid::build_bsp_lse(field->field, max_depth, hom_thresh,
                                                   angle_step_deg, offset_step, prune_keep)};
    });
}

int krg_build_bsp_region(const krg_field* field, int min_region_px, int quantisation,
                         krg_repr** out) {
    return wrap([&] {
        check(field, "field");
        check(out, "out");
        *out = new krg_repr{krigrid::build_bsp_region(field->field, min_region_px, quantisation)};
    });
}

int krg_build_hexmap(const krg_field* field, double base_edge, int levels,
                     const double* error_thresholds, krg_repr** out) {
    return wrap([&] {
        check(field, "field");
        check(error_thresholds, "error_thresholds");
        check(out, "out");
        krigrid::require(levels >= 1, krigrid::ErrorCode::invalid_argument,
                         "levels must be >= 1");
        std::vector<double> thresholds(error_thresholds,
                                       error_thresholds + static_cast<size_t>(levels));
        *out = new krg_repr{krigrid::build_hexmap(field->field, base_edge, levels, thresholds)};
    });
}

int krg_repr_kind(const krg_repr* repr, int* kind) {
    return wrap([&] {
        check(repr, "repr");
        check(kind, "kind");
        *kind = static_cast<int>(repr->repr.kind);
    });
}

int krg_repr_size(const krg_repr* repr, int* width, int* height) {
    return wrap([&] {
        check(repr, "repr");
        if (width != nullptr)
            *width = repr->repr.width;
        if (height != nullptr)
            *height = repr->repr.height;
    });
}

int krg_repr_leaf_count(const krg_repr* repr, uint64_t* count) {
    return wrap([&] {
        check(repr, "repr");
        check(count, "count");
        *count = repr->repr.leaf_count();
    });
}

int krg_repr_build_time(const krg_repr* repr, double* seconds) {
    return wrap([&] {
        check(repr, "repr");
        check(seconds, "seconds");
        *seconds = repr->repr.build_time;
    });
}

int krg_repr_set_build_time(krg_repr* repr, double seconds) {
    return wrap([&] {
        check(repr, "repr");
        repr->repr.build_time = seconds;
    });
}

int krg_repr_render(const krg_repr* repr, krg_field** out) {
    return wrap([&] {
        check(repr, "repr");
        check(out, "out");
        *out = new krg_field{krigrid::render_repr(repr->repr, repr->repr.width,
                                                  repr->repr.height)};
    });
}

int krg_repr_serialize(const krg_repr* repr, uint8_t** bytes, size_t* size) {
    return wrap([&] {
        check(repr, "repr");
        check(bytes, "bytes");
        check(size, "size");
        auto data = krigrid::serialize_repr(repr->repr);
        auto* buf = static_cast<uint8_t*>(std::malloc(data.size()));
        krigrid::require(buf != nullptr, krigrid::ErrorCode::io_failure, "out of memory");
        std::memcpy(buf, data.data(), data.size());
        *bytes = buf;
        *size = data.size();
    });
}

int krg_repr_deserialize(const uint8_t* bytes, size_t size, krg_repr** out) {
    return wrap([&] {
        check(bytes, "bytes");
        check(out, "out");
        *out = new krg_repr{krigrid::deserialize_repr(bytes, size)};
    });
}

int krg_repr_write_file(const krg_repr* repr, const char* path) {
    return wrap([&] {
        check(repr, "repr");
        check(path, "path");
        krigrid::write_repr_file(repr->repr, path);
    });
}

int krg_repr_read_file(const char* path, krg_repr** out) {
    return wrap([&] {
        check(path, "path");
        check(out, "out");
        *out = new krg_repr{krigrid::read_repr_file(path)};
    });
}

void krg_repr_free(krg_repr* repr) {
    delete repr;
}

void krg_bytes_free(uint8_t* bytes) {
    std::free(bytes);
}

/* --- metrics --- */

int krg_evaluate(const krg_field* reference, const krg_repr* repr, krg_metric_report* out) {
    return wrap([&] {
        check(reference, "reference");
        check(repr, "repr");
        check(out, "out");
        auto report = krigrid::evaluate_representation(reference->field, repr->repr);
        out->one_minus_ssim = report.one_minus_ssim;
        out->hamming = report.hamming;
        out->mse = report.mse;
        out->build_time = report.build_time;
        out->size_bytes = report.size_bytes;
        out->leaf_count = report.leaf_count;
    });
}

int krg_mse(const krg_field* a, const krg_field* b, double* out) {
    return wrap([&] {
        check(a, "a");
        check(b, "b");
        check(out, "out");
        *out = krigrid::mse_u8(a->field, b->field);
    });
}

int krg_ssim(const krg_field* a, const krg_field* b, double* out) {
    return wrap([&] {
        check(a, "a");
        check(b, "b");
        check(out, "out");
        *out = krigrid::ssim_u8(a->field, b->field);
    });
}

int krg_hash_distance(const krg_field* a, const krg_field* b, int* out) {
    return wrap([&] {
        check(a, "a");
        check(b, "b");
        check(out, "out");
        *out = krigrid::hamming_distance(krigrid::perceptual_hash(a->field),
                                         krigrid::perceptual_hash(b->field));
    });
}

/* --- spatial features --- */

void krg_feature_config_default(krg_feature_config* config) {
    if (config == nullptr)
        return;
    krigrid::FeatureConfig defaults;
    config->connectivity = defaults.connectivity;
    config->dbscan_downsample = defaults.dbscan_downsample;
    config->dbscan_eps = defaults.dbscan_eps;
    config->dbscan_min_pts = defaults.dbscan_min_pts;
    config->agg_grid = defaults.agg_grid;
    config->z_thresh = defaults.z_thresh;
    config->perm_seed = defaults.perm_seed;
    config->permutations = defaults.permutations;
}

int krg_compute_features(const krg_raster* raster, const krg_feature_config* config,
                         krg_field_features* out) {
    return wrap([&] {
        check(raster, "raster");
        check(out, "out");
        krigrid::FeatureConfig cfg;
        if (config != nullptr) {
            cfg.connectivity = config->connectivity;
            cfg.dbscan_downsample = config->dbscan_downsample;
            cfg.dbscan_eps = config->dbscan_eps;
            cfg.dbscan_min_pts = config->dbscan_min_pts;
            cfg.agg_grid = config->agg_grid;
            cfg.z_thresh = config->z_thresh;
            cfg.perm_seed = config->perm_seed;
            cfg.permutations = config->permutations;
        }
        auto f = krigrid::compute_features(raster->raster, cfg);
        krg_field_features r{};
        r.weed_coverage_ratio = f.weed_coverage_ratio;
        r.weed_patches = f.weed_patches;
        r.largest_patch_size = f.largest_patch_size;
        r.avg_patch_size = f.avg_patch_size;
        r.patch_size_std = f.patch_size_std;
        r.dbscan_num_clusters = f.dbscan_num_clusters;
        r.dbscan_avg_cluster_size = f.dbscan_avg_cluster_size;
        r.has_global_autocorrelation = f.global_autocorrelation.has_value() ? 1 : 0;
        r.global_autocorrelation = f.global_autocorrelation.value_or(0.0);
        r.has_hotspot_to_coldspot_ratio = f.hotspot_to_coldspot_ratio.has_value() ? 1 : 0;
        r.hotspot_to_coldspot_ratio = f.hotspot_to_coldspot_ratio.value_or(0.0);
        r.has_hot_to_cold_outlier_ratio = f.hot_to_cold_outlier_ratio.has_value() ? 1 : 0;
        r.hot_to_cold_outlier_ratio = f.hot_to_cold_outlier_ratio.value_or(0.0);
        *out = r;
    });
}

/* --- correlation --- */

int krg_spearman(const double* xs, const double* ys, size_t n, double* rho) {
    return wrap([&] {
        check(rho, "rho");
        if (n > 0) {
            check(xs, "xs");
            check(ys, "ys");
        }
        std::vector<double> vx(xs, xs + n), vy(ys, ys + n);
        *rho = krigrid::spearman(vx, vy);
    });
}

} // extern "C"
