#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// Exercises the shared library strictly through its public C interface.

#include <krigrid.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#define REQUIRE_OK(call) REQUIRE_MESSAGE((call) == KRG_OK, krg_last_error())

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("krg_capi_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const char* name) const { return (path / name).string(); }
};

// 24x20 binary mask with one 6x5 block and one 3x3 block of weeds (39 cells).
krg_field* make_mask_field() {
    std::vector<double> values(24 * 20, 0.0);
    for (int j = 2; j < 7; ++j)
        for (int i = 3; i < 9; ++i)
            values[static_cast<std::size_t>(j) * 24 + i] = 1.0;
    for (int j = 12; j < 15; ++j)
        for (int i = 16; i < 19; ++i)
            values[static_cast<std::size_t>(j) * 24 + i] = 1.0;
    krg_field* field = nullptr;
    REQUIRE_OK(krg_field_create(24, 20, values.data(), &field));
    return field;
}

// Two-tone field large enough for SSIM (>= 11 on both sides).
krg_field* make_two_tone_field() {
    std::vector<double> values(24 * 20);
    for (int j = 0; j < 20; ++j)
        for (int i = 0; i < 24; ++i)
            values[static_cast<std::size_t>(j) * 24 + i] = i < 12 ? 0.25 : 0.75;
    krg_field* field = nullptr;
    REQUIRE_OK(krg_field_create(24, 20, values.data(), &field));
    return field;
}

} // namespace

TEST_CASE("version and error state start clean") {
    const char* version = krg_version();
    REQUIRE(version != nullptr);
    CHECK(std::strlen(version) >= 5);
    const char* message = krg_last_error();
    REQUIRE(message != nullptr);
    CHECK(std::string(message).empty());
}

TEST_CASE("null and invalid arguments return typed status codes") {
    krg_raster* raster = nullptr;
    CHECK(krg_raster_load_png(nullptr, 255, 0, 0, &raster) == KRG_ERR_INVALID_ARGUMENT);
    CHECK(krg_raster_load_png("/no/such/file.png", 255, 0, 0, nullptr) ==
          KRG_ERR_INVALID_ARGUMENT);
    CHECK(krg_raster_load_png("/no/such/file.png", 255, 0, 0, &raster) == KRG_ERR_IO);
    CHECK(raster == nullptr); // untouched on failure
    CHECK(!std::string(krg_last_error()).empty());

    int w = 0, h = 0;
    CHECK(krg_raster_size(nullptr, &w, &h) == KRG_ERR_INVALID_ARGUMENT);

    krg_field* field = nullptr;
    CHECK(krg_field_create(0, 5, nullptr, &field) == KRG_ERR_INVALID_ARGUMENT);
    CHECK(krg_field_create(4, 4, nullptr, nullptr) == KRG_ERR_INVALID_ARGUMENT);
    CHECK(krg_field_values(nullptr) == nullptr);

    krg_samples* samples = nullptr;
    double xs = 1.0;
    CHECK(krg_samples_new(nullptr, &xs, &xs, 1, &samples) == KRG_ERR_INVALID_ARGUMENT);

    // frees tolerate NULL
    krg_raster_free(nullptr);
    krg_samples_free(nullptr);
    krg_field_free(nullptr);
    krg_kriging_free(nullptr);
    krg_repr_free(nullptr);
    krg_bytes_free(nullptr);
}

TEST_CASE("fields round-trip through PNG and the binary grid format") {
    TempDir dir;
    std::vector<double> values(12 * 9);
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] = static_cast<double>((k * 37) % 256) / 255.0; // quantisation-exact
    krg_field* field = nullptr;
    REQUIRE_OK(krg_field_create(12, 9, values.data(), &field));

    int w = 0, h = 0;
    REQUIRE_OK(krg_field_size(field, &w, &h));
    CHECK(w == 12);
    CHECK(h == 9);
    const double* stored = krg_field_values(field);
    REQUIRE(stored != nullptr);
    for (std::size_t k = 0; k < values.size(); ++k)
        CHECK(stored[k] == values[k]);

    REQUIRE_OK(krg_field_write_png(field, dir.file("grid.png").c_str()));
    krg_field* from_png = nullptr;
    REQUIRE_OK(krg_field_read_png(dir.file("grid.png").c_str(), &from_png));
    const double* png_values = krg_field_values(from_png);
    for (std::size_t k = 0; k < values.size(); ++k)
        CHECK(png_values[k] == doctest::Approx(values[k]).epsilon(1e-12));

    REQUIRE_OK(krg_field_write_gpf(field, dir.file("grid.gpf").c_str()));
    krg_field* from_gpf = nullptr;
    REQUIRE_OK(krg_field_read_gpf(dir.file("grid.gpf").c_str(), &from_gpf));
    const double* gpf_values = krg_field_values(from_gpf);
    for (std::size_t k = 0; k < values.size(); ++k)
        CHECK(gpf_values[k] == values[k]); // bit-exact

    krg_field_free(from_gpf);
    krg_field_free(from_png);
    krg_field_free(field);
}

TEST_CASE("raster loading, sampling and the samples CSV round-trip") {
    TempDir dir;
    krg_field* mask = make_mask_field();
    REQUIRE_OK(krg_field_write_png(mask, dir.file("map.png").c_str()));

    // 1.0 cells quantise to pure white
    krg_raster* raster = nullptr;
    REQUIRE_OK(krg_raster_load_png(dir.file("map.png").c_str(), 255, 255, 255, &raster));
    int w = 0, h = 0;
    REQUIRE_OK(krg_raster_size(raster, &w, &h));
    CHECK(w == 24);
    CHECK(h == 20);
    uint64_t weeds = 0;
    REQUIRE_OK(krg_raster_weed_count(raster, &weeds));
    CHECK(weeds == 39); // 6*5 + 3*3

    krg_samples* samples = nullptr;
    REQUIRE_OK(krg_sample_uniform(raster, 60, 5, 9, &samples));
    size_t count = 0;
    REQUIRE_OK(krg_samples_count(samples, &count));
    CHECK(count == 60);
    for (size_t k = 0; k < count; ++k) {
        double x = -1, y = -1, v = -1;
        REQUIRE_OK(krg_samples_get(samples, k, &x, &y, &v));
        CHECK(x >= 0.0);
        CHECK(x < 24.0);
        CHECK(y >= 0.0);
        CHECK(y < 20.0);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    double x = 0, y = 0, v = 0;
    CHECK(krg_samples_get(samples, count, &x, &y, &v) == KRG_ERR_INVALID_ARGUMENT);

    // same seed reproduces the draw exactly
    krg_samples* again = nullptr;
    REQUIRE_OK(krg_sample_uniform(raster, 60, 5, 9, &again));
    for (size_t k = 0; k < count; ++k) {
        double x1, y1, v1, x2, y2, v2;
        REQUIRE_OK(krg_samples_get(samples, k, &x1, &y1, &v1));
        REQUIRE_OK(krg_samples_get(again, k, &x2, &y2, &v2));
        CHECK(x1 == x2);
        CHECK(y1 == y2);
        CHECK(v1 == v2);
    }
    krg_samples_free(again);

    REQUIRE_OK(krg_samples_write_csv(samples, dir.file("samples.csv").c_str()));
    krg_samples* loaded = nullptr;
    REQUIRE_OK(krg_samples_read_csv(dir.file("samples.csv").c_str(), &loaded));
    size_t loaded_count = 0;
    REQUIRE_OK(krg_samples_count(loaded, &loaded_count));
    REQUIRE(loaded_count == count);
    for (size_t k = 0; k < count; ++k) {
        double x1, y1, v1, x2, y2, v2;
        REQUIRE_OK(krg_samples_get(samples, k, &x1, &y1, &v1));
        REQUIRE_OK(krg_samples_get(loaded, k, &x2, &y2, &v2));
        CHECK(x1 == x2);
        CHECK(y1 == y2);
        CHECK(v1 == v2);
    }

    krg_samples_free(loaded);
    krg_samples_free(samples);
    krg_raster_free(raster);
    krg_field_free(mask);
}

TEST_CASE("variogram kinds, fitting and the text format") {
    TempDir dir;
    int kind = -1;
    REQUIRE_OK(krg_variogram_kind_from_name("hole-effect", &kind));
    CHECK(kind == KRG_VARIOGRAM_HOLE_EFFECT);
    REQUIRE_OK(krg_variogram_kind_from_name("spherical", &kind));
    CHECK(kind == KRG_VARIOGRAM_SPHERICAL);
    CHECK(krg_variogram_kind_from_name("sombrero", &kind) != KRG_OK);
    CHECK(std::string(krg_variogram_kind_name(KRG_VARIOGRAM_GAUSSIAN)) == "gaussian");
    CHECK(krg_variogram_kind_name(99) == nullptr);

    // fit on a smooth synthetic sample set
    std::vector<double> sx, sy, sv;
    for (int k = 0; k < 80; ++k) {
        double px = (k * 29) % 37, py = (k * 17) % 31;
        sx.push_back(px);
        sy.push_back(py);
        sv.push_back(0.5 + 0.4 * std::sin(px / 6.0) * std::cos(py / 5.0));
    }
    krg_samples* samples = nullptr;
    REQUIRE_OK(krg_samples_new(sx.data(), sy.data(), sv.data(), sx.size(), &samples));
    krg_variogram fitted;
    REQUIRE_OK(krg_fit_variogram(samples, KRG_VARIOGRAM_EXPONENTIAL, 0, &fitted));
    CHECK(fitted.kind == KRG_VARIOGRAM_EXPONENTIAL);
    CHECK(fitted.degenerate == 0);
    CHECK(fitted.sill > 0.0);
    CHECK(fitted.range > 0.0);

    double gamma = -1.0;
    REQUIRE_OK(krg_semivariance(&fitted, 0.0, &gamma));
    CHECK(gamma == 0.0); // exact zero at zero lag by construction
    REQUIRE_OK(krg_semivariance(&fitted, 3.0, &gamma));
    CHECK(gamma > 0.0);

    REQUIRE_OK(krg_variogram_write_file(&fitted, dir.file("model.vg").c_str()));
    krg_variogram loaded;
    REQUIRE_OK(krg_variogram_read_file(dir.file("model.vg").c_str(), &loaded));
    CHECK(loaded.kind == fitted.kind);
    CHECK(loaded.sill == fitted.sill);
    CHECK(loaded.range == fitted.range);
    CHECK(loaded.nugget == fitted.nugget);

    krg_samples_free(samples);
}

TEST_CASE("kriging through the C API reproduces the reference prediction") {
    double xs[] = {1.0, 6.0, 3.0};
    double ys[] = {1.0, 2.0, 7.0};
    double vs[] = {0.2, 0.8, 0.5};
    krg_samples* samples = nullptr;
    REQUIRE_OK(krg_samples_new(xs, ys, vs, 3, &samples));

    krg_variogram model;
    model.kind = KRG_VARIOGRAM_EXPONENTIAL;
    model.sill = 1.0;
    model.range = 5.0;
    model.nugget = 0.1;
    model.exponent = 1.0;
    model.slope = 0.0;
    model.degenerate = 0;

    krg_kriging* kriging = nullptr;
    REQUIRE_OK(krg_kriging_new(samples, &model, &kriging));

    // cross-checked against an independent dense solve of the kriging system
    krg_prediction pred;
    REQUIRE_OK(krg_kriging_predict(kriging, 4.0, 4.0, &pred));
    CHECK(pred.mean == doctest::Approx(0.5523170927715282).epsilon(1e-12));
    CHECK(pred.variance == doctest::Approx(0.6469313128530817).epsilon(1e-12));

    krg_qstats stats;
    REQUIRE_OK(krg_kriging_cross_validate(kriging, &stats));
    CHECK(std::isfinite(stats.q1));
    CHECK(std::isfinite(stats.q2));
    CHECK(stats.q2 >= 0.0);
    CHECK(stats.cr > 0.0);

    krg_field* surface = nullptr;
    REQUIRE_OK(krg_kriging_render(kriging, 16, 12, 0.0, 0.0, 8.0, 8.0, 1, &surface));
    int w = 0, h = 0;
    REQUIRE_OK(krg_field_size(surface, &w, &h));
    CHECK(w == 16);
    CHECK(h == 12);
    const double* cells = krg_field_values(surface);
    for (int k = 0; k < 16 * 12; ++k) {
        CHECK(cells[k] >= 0.0);
        CHECK(cells[k] <= 1.0);
    }

    // automatic thread count must not change the surface
    krg_field* surface_auto = nullptr;
    REQUIRE_OK(krg_kriging_render(kriging, 16, 12, 0.0, 0.0, 8.0, 8.0, 0, &surface_auto));
    const double* auto_cells = krg_field_values(surface_auto);
    for (int k = 0; k < 16 * 12; ++k)
        CHECK(cells[k] == auto_cells[k]);

    krg_field_free(surface_auto);
    krg_field_free(surface);
    krg_kriging_free(kriging);
    krg_samples_free(samples);
}

TEST_CASE("all five representation builders work through the C API") {
    TempDir dir;
    krg_field* field = make_two_tone_field();

    krg_repr* reprs[5] = {};
    REQUIRE_OK(krg_build_quadtree(field, 6, 1e-4, &reprs[0]));
    REQUIRE_OK(krg_build_wedgelet(field, 6, 1e-4, 1e-4, &reprs[1]));
    REQUIRE_OK(krg_build_bsp_lse(field, 6, 1e-4, 15, 2, 8, &reprs[2]));
    REQUIRE_OK(krg_build_bsp_region(field, 4, 64, &reprs[3]));
    double thresholds[3] = {0.0, 1e-3, 1e-3};
    REQUIRE_OK(krg_build_hexmap(field, 2.0, 3, thresholds, &reprs[4]));

    for (int r = 0; r < 5; ++r) {
        CAPTURE(r);
        int kind = -1;
        REQUIRE_OK(krg_repr_kind(reprs[r], &kind));
        CHECK(kind == r);
        int w = 0, h = 0;
        REQUIRE_OK(krg_repr_size(reprs[r], &w, &h));
        CHECK(w == 24);
        CHECK(h == 20);
        uint64_t leaves = 0;
        REQUIRE_OK(krg_repr_leaf_count(reprs[r], &leaves));
        CHECK(leaves >= 1);

        uint8_t* bytes = nullptr;
        size_t size = 0;
        REQUIRE_OK(krg_repr_serialize(reprs[r], &bytes, &size));
        REQUIRE(bytes != nullptr);
        REQUIRE(size > 14);
        CHECK(std::memcmp(bytes, "GPDR", 4) == 0);

        krg_repr* copy = nullptr;
        REQUIRE_OK(krg_repr_deserialize(bytes, size, &copy));
        uint64_t copy_leaves = 0;
        REQUIRE_OK(krg_repr_leaf_count(copy, &copy_leaves));
        CHECK(copy_leaves == leaves);

        krg_field* rendered = nullptr;
        REQUIRE_OK(krg_repr_render(copy, &rendered));
        int rw = 0, rh = 0;
        REQUIRE_OK(krg_field_size(rendered, &rw, &rh));
        CHECK(rw == 24);
        CHECK(rh == 20);
        krg_field_free(rendered);
        krg_repr_free(copy);
        krg_bytes_free(bytes);

        std::string path = dir.file(("repr" + std::to_string(r) + ".gpdr").c_str());
        REQUIRE_OK(krg_repr_write_file(reprs[r], path.c_str()));
        krg_repr* from_file = nullptr;
        REQUIRE_OK(krg_repr_read_file(path.c_str(), &from_file));
        uint64_t file_leaves = 0;
        REQUIRE_OK(krg_repr_leaf_count(from_file, &file_leaves));
        CHECK(file_leaves == leaves);
        krg_repr_free(from_file);
    }

    // name mapping covers all kinds
    int kind = -1;
    REQUIRE_OK(krg_repr_kind_from_name("bsp_region", &kind));
    CHECK(kind == KRG_REPR_BSP_REGION);
    CHECK(std::string(krg_repr_kind_name(KRG_REPR_HEXMAP)) == "hexmap");
    CHECK(krg_repr_kind_name(9) == nullptr);
    CHECK(krg_repr_kind_from_name("octree", &kind) != KRG_OK);

    // build-time attachment feeds through evaluation
    REQUIRE_OK(krg_repr_set_build_time(reprs[0], 1.25));
    double seconds = 0.0;
    REQUIRE_OK(krg_repr_build_time(reprs[0], &seconds));
    CHECK(seconds == 1.25);
    krg_metric_report report;
    REQUIRE_OK(krg_evaluate(field, reprs[0], &report));
    CHECK(report.build_time == 1.25);
    uint64_t leaves = 0;
    REQUIRE_OK(krg_repr_leaf_count(reprs[0], &leaves));
    CHECK(report.leaf_count == leaves);
    CHECK(report.size_bytes > 14);
    CHECK(report.mse >= 0.0);
    CHECK(report.one_minus_ssim >= 0.0);

    for (krg_repr* repr : reprs)
        krg_repr_free(repr);
    krg_field_free(field);
}

TEST_CASE("standalone metric entry points agree with closed forms") {
    std::vector<double> zeros(16 * 16, 0.0), ones(16 * 16, 1.0);
    krg_field *black = nullptr, *white = nullptr;
    REQUIRE_OK(krg_field_create(16, 16, zeros.data(), &black));
    REQUIRE_OK(krg_field_create(16, 16, ones.data(), &white));

    double mse = -1.0;
    REQUIRE_OK(krg_mse(black, white, &mse));
    CHECK(mse == doctest::Approx(65025.0).epsilon(1e-15)); // 255^2

    double ssim = -1.0;
    REQUIRE_OK(krg_ssim(black, white, &ssim));
    const double c1 = (0.01 * 255) * (0.01 * 255);
    CHECK(ssim == doctest::Approx(c1 / (65025.0 + c1)).epsilon(1e-12));
    REQUIRE_OK(krg_ssim(black, black, &ssim));
    CHECK(ssim == 1.0);

    int hamming = -1;
    REQUIRE_OK(krg_hash_distance(white, white, &hamming));
    CHECK(hamming == 0);

    krg_field_free(white);
    krg_field_free(black);
}

TEST_CASE("spatial features flow through the C structs") {
    TempDir dir;
    krg_field* mask = make_mask_field();
    REQUIRE_OK(krg_field_write_png(mask, dir.file("map.png").c_str()));
    krg_raster* raster = nullptr;
    REQUIRE_OK(krg_raster_load_png(dir.file("map.png").c_str(), 255, 255, 255, &raster));

    krg_feature_config config;
    krg_feature_config_default(&config);
    CHECK(config.connectivity == 8);
    CHECK(config.dbscan_downsample == 8);
    CHECK(config.dbscan_eps == 3.0);
    CHECK(config.dbscan_min_pts == 5);
    CHECK(config.agg_grid == 32);
    CHECK(config.z_thresh == 1.96);
    CHECK(config.perm_seed == 0);
    CHECK(config.permutations == 99);

    krg_field_features features;
    REQUIRE_OK(krg_compute_features(raster, &config, &features));
    CHECK(features.weed_coverage_ratio == doctest::Approx(39.0 / 480.0).epsilon(1e-15));
    CHECK(features.weed_patches == 2);
    CHECK(features.largest_patch_size == 30);
    CHECK(features.avg_patch_size == doctest::Approx(19.5));

    // NULL config means defaults
    krg_field_features defaulted;
    REQUIRE_OK(krg_compute_features(raster, nullptr, &defaulted));
    CHECK(defaulted.weed_coverage_ratio == features.weed_coverage_ratio);
    CHECK(defaulted.weed_patches == features.weed_patches);
    CHECK(defaulted.has_global_autocorrelation == features.has_global_autocorrelation);
    if (features.has_global_autocorrelation)
        CHECK(defaulted.global_autocorrelation == features.global_autocorrelation);

    krg_raster_free(raster);
    krg_field_free(mask);
}

TEST_CASE("Spearman correlation through the C API") {
    double xs[] = {3, 1, 4, 1, 5, 9, 2, 6};
    double ys[] = {2, 7, 1, 8, 2, 8, 1, 8};
    double rho = 0.0;
    REQUIRE_OK(krg_spearman(xs, ys, 8, &rho));
    // cross-checked against scipy.stats.spearmanr
    CHECK(rho == doctest::Approx(0.19885368120992467).epsilon(1e-12));

    double flat[] = {2, 2, 2};
    double rising[] = {1, 2, 3};
    CHECK(krg_spearman(flat, rising, 3, &rho) == KRG_ERR_DEGENERATE);
    CHECK(krg_spearman(xs, ys, 1, &rho) == KRG_ERR_INVALID_ARGUMENT);
    CHECK(krg_spearman(nullptr, ys, 8, &rho) == KRG_ERR_INVALID_ARGUMENT);
}
