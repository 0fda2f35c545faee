// krigrid: benchmark and stage commands for kriging gridmaps and their
// discrete representations. Talks to the library exclusively through the
// public C API so it doubles as an integration test of that surface.
#include <algorithm>
#include <array>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "krigrid.h"

namespace {

using nlohmann::json;

// --- small utilities -----------------------------------------------------------

struct HandleDeleter {
    void operator()(krg_raster* p) const { krg_raster_free(p); }
    void operator()(krg_samples* p) const { krg_samples_free(p); }
    void operator()(krg_field* p) const { krg_field_free(p); }
    void operator()(krg_kriging* p) const { krg_kriging_free(p); }
    void operator()(krg_repr* p) const { krg_repr_free(p); }
};
template <typename T>
using Handle = std::unique_ptr<T, HandleDeleter>;

void chk(int status, const std::string& what) {
    if (status != KRG_OK)
        throw std::runtime_error(what + ": " + krg_last_error());
}

std::string g17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string t6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    auto b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("cannot parse number for " + what + ": '" + s + "'");
    }
}

long long parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("cannot parse integer for " + what + ": '" + s + "'");
    }
}

std::array<std::uint8_t, 3> parse_rgb(const std::string& s) {
    auto parts = split(s, ',');
    if (parts.size() != 3)
        throw std::runtime_error("expected R,G,B but got '" + s + "'");
    std::array<std::uint8_t, 3> rgb{};
    for (int i = 0; i < 3; ++i) {
        long long v = parse_int(trim(parts[static_cast<std::size_t>(i)]), "colour channel");
        if (v < 0 || v > 255)
            throw std::runtime_error("colour channel out of range in '" + s + "'");
        rgb[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
    }
    return rgb;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out.good())
        throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

const std::array<std::string, 5> kReprSlugs = {"quadtree", "wedgelet", "bsp_lse", "bsp_region",
                                               "hexmap"};
const std::array<std::string, 5> kReprDisplay = {"Quadtree", "Wedgelet", "BSP_LSE", "BSP_Region",
                                                 "Hex"};
const std::array<std::string, 3> kMetricDisplay = {"1-SS", "HD", "MSE"};
const std::array<std::string, 10> kFeatureNames = {
    "weed_coverage_ratio",       "weed_patches",           "largest_patch_size",
    "avg_patch_size",            "patch_size_std",         "dbscan_num_clusters",
    "dbscan_avg_cluster_size",   "global_autocorrelation", "hotspot_to_coldspot_ratio",
    "hot_to_cold_outlier_ratio"};
const char* kMetricsHeader = "map,repr,trial,one_minus_ssim_e4,hamming,mse,time_s,size_bytes,"
                             "leaf_count";

// --- benchmark configuration -------------------------------------------------------

struct BenchConfig {
    std::vector<std::string> fields;
    std::array<std::uint8_t, 3> weed_colour{255, 0, 0};
    int n_samples = 500;
    int window = 9;
    std::string variogram = "exponential";
    int n_lags = 24;
    int grid_long_side = 1024;
    int trials = 10;
    std::uint64_t base_seed = 1;
    int render_threads = 1;

    int quad_max_depth = 9;
    double quad_hom_thresh = 2e-4;
    int wedge_max_depth = 9;
    double wedge_hom_thresh = 2e-4;
    double wedge_line_thresh = 2e-4;
    int bsp_max_depth = 9;
    double bsp_hom_thresh = 2e-4;
    int bsp_angle_step = 5;
    int bsp_offset_step = 2;
    int bsp_prune_keep = 16;
    int region_min_px = 10;
    int region_quantisation = 256;
    double hex_base_edge = 4.0;
    int hex_levels = 4;
    std::vector<double> hex_thresholds{2e-4, 2e-4, 2e-4, 2e-4};

    krg_feature_config features{};

    BenchConfig() { krg_feature_config_default(&features); }
};

BenchConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.good())
        throw std::runtime_error("cannot open config file: " + path);
    BenchConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));

        if (key == "fields") {
            cfg.fields.clear();
            for (const auto& part : split(value, ','))
                if (!trim(part).empty())
                    cfg.fields.push_back(trim(part));
        } else if (key == "weed_colour") {
            cfg.weed_colour = parse_rgb(value);
        } else if (key == "n_samples") {
            cfg.n_samples = static_cast<int>(parse_int(value, key));
        } else if (key == "window") {
            cfg.window = static_cast<int>(parse_int(value, key));
        } else if (key == "variogram") {
            cfg.variogram = value;
        } else if (key == "n_lags") {
            cfg.n_lags = static_cast<int>(parse_int(value, key));
        } else if (key == "grid_long_side") {
            cfg.grid_long_side = static_cast<int>(parse_int(value, key));
        } else if (key == "trials") {
            cfg.trials = static_cast<int>(parse_int(value, key));
        } else if (key == "base_seed") {
            cfg.base_seed = static_cast<std::uint64_t>(parse_int(value, key));
        } else if (key == "render_threads") {
            cfg.render_threads = static_cast<int>(parse_int(value, key));
        } else if (key == "quad_max_depth") {
            cfg.quad_max_depth = static_cast<int>(parse_int(value, key));
        } else if (key == "quad_hom_thresh") {
            cfg.quad_hom_thresh = parse_double(value, key);
        } else if (key == "wedge_max_depth") {
            cfg.wedge_max_depth = static_cast<int>(parse_int(value, key));
        } else if (key == "wedge_hom_thresh") {
            cfg.wedge_hom_thresh = parse_double(value, key);
        } else if (key == "wedge_line_thresh") {
            cfg.wedge_line_thresh = parse_double(value, key);
        } else if (key == "bsp_max_depth") {
            cfg.bsp_max_depth = static_cast<int>(parse_int(value, key));
        } else if (key == "bsp_hom_thresh") {
            cfg.bsp_hom_thresh = parse_double(value, key);
        } else if (key == "bsp_angle_step") {
            cfg.bsp_angle_step = static_cast<int>(parse_int(value, key));
        } else if (key == "bsp_offset_step") {
            cfg.bsp_offset_step = static_cast<int>(parse_int(value, key));
        } else if (key == "bsp_prune_keep") {
            cfg.bsp_prune_keep = static_cast<int>(parse_int(value, key));
        } else if (key == "region_min_px") {
            cfg.region_min_px = static_cast<int>(parse_int(value, key));
        } else if (key == "region_quantisation") {
            cfg.region_quantisation = static_cast<int>(parse_int(value, key));
        } else if (key == "hex_base_edge") {
            cfg.hex_base_edge = parse_double(value, key);
        } else if (key == "hex_levels") {
            cfg.hex_levels = static_cast<int>(parse_int(value, key));
        } else if (key == "hex_thresholds") {
            cfg.hex_thresholds.clear();
            for (const auto& part : split(value, ','))
                cfg.hex_thresholds.push_back(parse_double(trim(part), key));
        } else if (key == "feature_connectivity") {
            cfg.features.connectivity = static_cast<int>(parse_int(value, key));
        } else if (key == "dbscan_downsample") {
            cfg.features.dbscan_downsample = static_cast<int>(parse_int(value, key));
        } else if (key == "dbscan_eps") {
            cfg.features.dbscan_eps = parse_double(value, key);
        } else if (key == "dbscan_min_pts") {
            cfg.features.dbscan_min_pts = static_cast<int>(parse_int(value, key));
        } else if (key == "agg_grid") {
            cfg.features.agg_grid = static_cast<int>(parse_int(value, key));
        } else if (key == "z_thresh") {
            cfg.features.z_thresh = parse_double(value, key);
        } else if (key == "perm_seed") {
            cfg.features.perm_seed = static_cast<std::uint64_t>(parse_int(value, key));
        } else if (key == "permutations") {
            cfg.features.permutations = static_cast<int>(parse_int(value, key));
        } else {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown key '" +
                                     key + "'");
        }
    }
    if (cfg.fields.empty())
        throw std::runtime_error(path + ": config must list at least one field PNG in 'fields'");
    if (cfg.trials < 1)
        throw std::runtime_error(path + ": trials must be >= 1");
    return cfg;
}

json config_to_json(const BenchConfig& cfg) {
    json j;
    j["fields"] = cfg.fields;
    j["weed_colour"] = {cfg.weed_colour[0], cfg.weed_colour[1], cfg.weed_colour[2]};
    j["n_samples"] = cfg.n_samples;
    j["window"] = cfg.window;
    j["variogram"] = cfg.variogram;
    j["n_lags"] = cfg.n_lags;
    j["grid_long_side"] = cfg.grid_long_side;
    j["trials"] = cfg.trials;
    j["base_seed"] = cfg.base_seed;
    j["quad_max_depth"] = cfg.quad_max_depth;
    j["quad_hom_thresh"] = cfg.quad_hom_thresh;
    j["wedge_max_depth"] = cfg.wedge_max_depth;
    j["wedge_hom_thresh"] = cfg.wedge_hom_thresh;
    j["wedge_line_thresh"] = cfg.wedge_line_thresh;
    j["bsp_max_depth"] = cfg.bsp_max_depth;
    j["bsp_hom_thresh"] = cfg.bsp_hom_thresh;
    j["bsp_angle_step"] = cfg.bsp_angle_step;
    j["bsp_offset_step"] = cfg.bsp_offset_step;
    j["bsp_prune_keep"] = cfg.bsp_prune_keep;
    j["region_min_px"] = cfg.region_min_px;
    j["region_quantisation"] = cfg.region_quantisation;
    j["hex_base_edge"] = cfg.hex_base_edge;
    j["hex_levels"] = cfg.hex_levels;
    j["hex_thresholds"] = cfg.hex_thresholds;
    j["feature_connectivity"] = cfg.features.connectivity;
    j["dbscan_downsample"] = cfg.features.dbscan_downsample;
    j["dbscan_eps"] = cfg.features.dbscan_eps;
    j["dbscan_min_pts"] = cfg.features.dbscan_min_pts;
    j["agg_grid"] = cfg.features.agg_grid;
    j["z_thresh"] = cfg.features.z_thresh;
    j["perm_seed"] = cfg.features.perm_seed;
    j["permutations"] = cfg.features.permutations;
    return j;
}

// --- shared stage helpers --------------------------------------------------------------

Handle<krg_raster> load_raster(const std::string& path, std::array<std::uint8_t, 3> rgb) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("input map not found: " + path);
    krg_raster* raster = nullptr;
    chk(krg_raster_load_png(path.c_str(), rgb[0], rgb[1], rgb[2], &raster),
        "loading " + path);
    return Handle<krg_raster>(raster);
}

Handle<krg_samples> read_samples(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("samples file not found: " + path);
    krg_samples* samples = nullptr;
    chk(krg_samples_read_csv(path.c_str(), &samples), "reading " + path);
    return Handle<krg_samples>(samples);
}

Handle<krg_field> read_field(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("field file not found: " + path);
    krg_field* field = nullptr;
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".png")
        chk(krg_field_read_png(path.c_str(), &field), "reading " + path);
    else
        chk(krg_field_read_gpf(path.c_str(), &field), "reading " + path);
    return Handle<krg_field>(field);
}

int repr_kind_from_name(const std::string& name) {
    int kind = 0;
    chk(krg_repr_kind_from_name(name.c_str(), &kind), "representation kind");
    return kind;
}

Handle<krg_repr> build_repr(const krg_field* grid, int kind, const BenchConfig& cfg) {
    krg_repr* repr = nullptr;
    switch (kind) {
    case KRG_REPR_QUADTREE:
        chk(krg_build_quadtree(grid, cfg.quad_max_depth, cfg.quad_hom_thresh, &repr),
            "building quadtree");
        break;
    case KRG_REPR_WEDGELET:
        chk(krg_build_wedgelet(grid, cfg.wedge_max_depth, cfg.wedge_hom_thresh,
                               cfg.wedge_line_thresh, &repr),
            "building wedgelet");
        break;
    case KRG_REPR_BSP_LSE:
        chk(krg_build_bsp_lse(grid, cfg.bsp_max_depth, cfg.bsp_hom_thresh, cfg.bsp_angle_step,
                              cfg.bsp_offset_step, cfg.bsp_prune_keep, &repr),
            "building bsp_lse");
        break;
    case KRG_REPR_BSP_REGION:
        chk(krg_build_bsp_region(grid, cfg.region_min_px, cfg.region_quantisation, &repr),
            "building bsp_region");
        break;
    case KRG_REPR_HEXMAP: {
        if (cfg.hex_levels < 1 || cfg.hex_thresholds.empty())
            throw std::runtime_error("hexmap needs hex_levels >= 1 and hex_thresholds");
        // Short threshold lists repeat their last entry so a single value can
        // cover every level.
        std::vector<double> thresholds(static_cast<std::size_t>(cfg.hex_levels));
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            thresholds[i] = cfg.hex_thresholds[std::min(i, cfg.hex_thresholds.size() - 1)];
        chk(krg_build_hexmap(grid, cfg.hex_base_edge, cfg.hex_levels, thresholds.data(), &repr),
            "building hexmap");
        break;
    }
    default:
        throw std::runtime_error("unknown representation kind");
    }
    return Handle<krg_repr>(repr);
}

std::string metrics_row(const std::string& map, const std::string& repr, int trial,
                        const krg_metric_report& r) {
    std::ostringstream row;
    row << map << ',' << repr << ',' << trial << ',' << g17(r.one_minus_ssim * 1e4) << ','
        << r.hamming << ',' << g17(r.mse) << ',' << t6(r.build_time) << ',' << r.size_bytes << ','
        << r.leaf_count;
    return row.str();
}

std::vector<std::optional<double>> feature_row_values(const krg_field_features& f) {
    std::vector<std::optional<double>> v(10);
    v[0] = f.weed_coverage_ratio;
    v[1] = static_cast<double>(f.weed_patches);
    v[2] = static_cast<double>(f.largest_patch_size);
    v[3] = f.avg_patch_size;
    v[4] = f.patch_size_std;
    v[5] = static_cast<double>(f.dbscan_num_clusters);
    v[6] = f.dbscan_avg_cluster_size;
    if (f.has_global_autocorrelation)
        v[7] = f.global_autocorrelation;
    if (f.has_hotspot_to_coldspot_ratio)
        v[8] = f.hotspot_to_coldspot_ratio;
    if (f.has_hot_to_cold_outlier_ratio)
        v[9] = f.hot_to_cold_outlier_ratio;
    return v;
}

std::string features_header() {
    std::string h = "map";
    for (const auto& name : kFeatureNames)
        h += "," + name;
    return h;
}

std::string features_row(const std::string& map, const std::vector<std::optional<double>>& v) {
    std::string row = map;
    for (const auto& value : v)
        row += "," + (value ? g17(*value) : std::string());
    return row;
}

// --- correlation over per-map mean metrics ------------------------------------------------

struct CorrEntry {
    std::string feature, repr, metric;
    std::optional<double> rho;
    std::size_t pairs = 0;
};

struct CorrExtreme {
    std::string feature;
    std::optional<double> max_rho, min_rho;
    std::string max_label, min_label;
};

struct CorrReport {
    std::vector<CorrEntry> entries;
    std::vector<CorrExtreme> extremes;
    std::size_t field_count = 0;
};

// means[map index][repr][metric]; feature values may be null per map.
CorrReport correlate_tables(const std::vector<std::vector<std::optional<double>>>& features,
                            const std::vector<std::array<std::array<double, 3>, 5>>& means) {
    if (features.size() != means.size())
        throw std::runtime_error("feature and metric map counts differ");
    if (features.size() < 2)
        throw std::runtime_error("correlation needs at least two maps with metrics");
    CorrReport report;
    report.field_count = features.size();
    for (std::size_t fi = 0; fi < kFeatureNames.size(); ++fi) {
        CorrExtreme extreme;
        extreme.feature = kFeatureNames[fi];
        for (std::size_t r = 0; r < kReprDisplay.size(); ++r)
            for (std::size_t m = 0; m < kMetricDisplay.size(); ++m) {
                CorrEntry entry;
                entry.feature = kFeatureNames[fi];
                entry.repr = kReprDisplay[r];
                entry.metric = kMetricDisplay[m];
                std::vector<double> xs, ys;
                for (std::size_t f = 0; f < features.size(); ++f) {
                    if (!features[f][fi])
                        continue;
                    xs.push_back(*features[f][fi]);
                    ys.push_back(means[f][r][m]);
                }
                entry.pairs = xs.size();
                if (xs.size() >= 2) {
                    double rho = 0.0;
                    int status = krg_spearman(xs.data(), ys.data(), xs.size(), &rho);
                    if (status == KRG_OK)
                        entry.rho = rho;
                    else if (status != KRG_ERR_DEGENERATE)
                        chk(status, "spearman");
                }
                if (entry.rho) {
                    std::string label = entry.repr + "_" + entry.metric;
                    if (!extreme.max_rho || *entry.rho > *extreme.max_rho) {
                        extreme.max_rho = entry.rho;
                        extreme.max_label = label;
                    }
                    if (!extreme.min_rho || *entry.rho < *extreme.min_rho) {
                        extreme.min_rho = entry.rho;
                        extreme.min_label = label;
                    }
                }
                report.entries.push_back(std::move(entry));
            }
        report.extremes.push_back(std::move(extreme));
    }
    return report;
}

void write_correlations_csv(const CorrReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "feature,repr,metric,rho,pairs\n";
    for (const auto& e : report.entries)
        out << e.feature << ',' << e.repr << ',' << e.metric << ','
            << (e.rho ? g17(*e.rho) : std::string()) << ',' << e.pairs << '\n';
}

void write_extremes_md(const CorrReport& report, std::ostream& out) {
    out << "| Feature | Max | rho | Min | rho |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& e : report.extremes) {
        out << "| " << e.feature << " | ";
        if (e.max_rho)
            out << e.max_label << " | " << fixed(*e.max_rho, 2) << " | ";
        else
            out << "- | - | ";
        if (e.min_rho)
            out << e.min_label << " | " << fixed(*e.min_rho, 2) << " |\n";
        else
            out << "- | - |\n";
    }
}

// --- bench ------------------------------------------------------------------------------------

struct TrialOutcome {
    bool ok = false;
    std::string stage;
    std::string message;
    std::array<krg_metric_report, 5> reports{};
};

struct FieldJob {
    std::string path;
    std::string name;
    int raster_w = 0, raster_h = 0;
    int grid_w = 0, grid_h = 0;
    Handle<krg_raster> raster;
    std::vector<std::optional<double>> features;
};

TrialOutcome run_trial(const FieldJob& field, const BenchConfig& cfg, int trial,
                       std::mutex& timing_mutex, const std::string& png_prefix) {
    TrialOutcome outcome;
    outcome.stage = "sample";
    try {
        std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
        krg_samples* samples_raw = nullptr;
        chk(krg_sample_uniform(field.raster.get(), cfg.n_samples, cfg.window, seed, &samples_raw),
            "sampling");
        Handle<krg_samples> samples(samples_raw);

        outcome.stage = "fit";
        int kind = 0;
        chk(krg_variogram_kind_from_name(cfg.variogram.c_str(), &kind), "variogram kind");
        krg_variogram model{};
        chk(krg_fit_variogram(samples.get(), kind, cfg.n_lags, &model), "variogram fit");

        outcome.stage = "render-gp";
        krg_kriging* krig_raw = nullptr;
        chk(krg_kriging_new(samples.get(), &model, &krig_raw), "kriging setup");
        Handle<krg_kriging> krig(krig_raw);
        krg_field* grid_raw = nullptr;
        chk(krg_kriging_render(krig.get(), field.grid_w, field.grid_h, 0.0, 0.0,
                               static_cast<double>(field.raster_w),
                               static_cast<double>(field.raster_h), cfg.render_threads,
                               &grid_raw),
            "gridmap render");
        Handle<krg_field> grid(grid_raw);

        std::array<Handle<krg_repr>, 5> reprs;
        for (int kind_idx = 0; kind_idx < 5; ++kind_idx) {
            outcome.stage = "build:" + kReprSlugs[static_cast<std::size_t>(kind_idx)];
            // Builds are timed; keep them sequential across worker threads so
            // recorded times are comparable.
            std::lock_guard<std::mutex> lock(timing_mutex);
            reprs[static_cast<std::size_t>(kind_idx)] = build_repr(grid.get(), kind_idx, cfg);
        }

        for (int kind_idx = 0; kind_idx < 5; ++kind_idx) {
            outcome.stage = "eval:" + kReprSlugs[static_cast<std::size_t>(kind_idx)];
            chk(krg_evaluate(grid.get(), reprs[static_cast<std::size_t>(kind_idx)].get(),
                             &outcome.reports[static_cast<std::size_t>(kind_idx)]),
                "evaluating");
        }

        if (!png_prefix.empty()) {
            outcome.stage = "png";
            chk(krg_field_write_png(grid.get(), (png_prefix + "_gridmap.png").c_str()),
                "writing gridmap png");
            for (int kind_idx = 0; kind_idx < 5; ++kind_idx) {
                krg_field* img_raw = nullptr;
                chk(krg_repr_render(reprs[static_cast<std::size_t>(kind_idx)].get(), &img_raw),
                    "rendering representation");
                Handle<krg_field> img(img_raw);
                chk(krg_field_write_png(
                        img.get(),
                        (png_prefix + "_" + kReprSlugs[static_cast<std::size_t>(kind_idx)] +
                         ".png")
                            .c_str()),
                    "writing representation png");
            }
        }
        outcome.ok = true;
        outcome.stage.clear();
    } catch (const std::exception& e) {
        outcome.message = e.what();
    }
    return outcome;
}

void append_mean_std_table(std::ostream& out, const std::string& title,
                           const std::vector<FieldJob>& fields,
                           const std::vector<std::vector<TrialOutcome>>& outcomes,
                           double (*pick)(const krg_metric_report&), double scale, int digits) {
    out << "\n## " << title << "\n\n| Map |";
    for (const auto& repr : kReprDisplay)
        out << ' ' << repr << " |";
    out << "\n|---|---|---|---|---|---|\n";
    for (std::size_t f = 0; f < fields.size(); ++f) {
        out << "| " << fields[f].name << " |";
        for (std::size_t r = 0; r < 5; ++r) {
            double sum = 0.0, sum_sq = 0.0;
            int n = 0;
            for (const auto& trial : outcomes[f])
                if (trial.ok) {
                    double v = pick(trial.reports[r]) * scale;
                    sum += v;
                    sum_sq += v * v;
                    ++n;
                }
            if (n == 0) {
                out << " - |";
                continue;
            }
            double mean = sum / n;
            double var = std::max(0.0, sum_sq / n - mean * mean);
            out << ' ' << fixed(mean, digits) << " (" << fixed(std::sqrt(var), digits) << ") |";
        }
        out << '\n';
    }
}

int cmd_bench(const std::string& config_path, int jobs, std::optional<std::uint64_t> seed_flag,
              std::optional<std::string> out_flag) {
    BenchConfig cfg = load_config(config_path);
    if (seed_flag)
        cfg.base_seed = *seed_flag;
    std::string out_dir = out_flag.value_or("bench_out");
    std::filesystem::create_directories(out_dir);
    auto out_path = [&](const std::string& name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    // Load fields and compute their ground-truth features up front.
    std::vector<FieldJob> fields;
    for (const auto& path : cfg.fields) {
        FieldJob job;
        job.path = path;
        job.name = std::filesystem::path(path).stem().string();
        job.raster = load_raster(path, cfg.weed_colour);
        chk(krg_raster_size(job.raster.get(), &job.raster_w, &job.raster_h), "raster size");
        if (job.raster_w >= job.raster_h) {
            job.grid_w = cfg.grid_long_side;
            job.grid_h = std::max(
                1, static_cast<int>(std::llround(static_cast<double>(job.raster_h) *
                                                 cfg.grid_long_side / job.raster_w)));
        } else {
            job.grid_h = cfg.grid_long_side;
            job.grid_w = std::max(
                1, static_cast<int>(std::llround(static_cast<double>(job.raster_w) *
                                                 cfg.grid_long_side / job.raster_h)));
        }
        krg_field_features f{};
        chk(krg_compute_features(job.raster.get(), &cfg.features, &f),
            "features for " + job.name);
        job.features = feature_row_values(f);
        fields.push_back(std::move(job));
    }

    // Run field x trial jobs, possibly in parallel; builder timing stays
    // sequential behind a shared mutex.
    std::vector<std::vector<TrialOutcome>> outcomes(fields.size());
    for (auto& per_field : outcomes)
        per_field.resize(static_cast<std::size_t>(cfg.trials));
    struct JobRef {
        std::size_t field;
        int trial;
    };
    std::vector<JobRef> job_list;
    for (std::size_t f = 0; f < fields.size(); ++f)
        for (int t = 0; t < cfg.trials; ++t)
            job_list.push_back({f, t});

    std::mutex timing_mutex;
    std::atomic<std::size_t> next_job{0};
    auto worker = [&] {
        for (;;) {
            std::size_t j = next_job.fetch_add(1);
            if (j >= job_list.size())
                return;
            const JobRef& ref = job_list[j];
            std::string png_prefix =
                ref.trial == 0 ? out_path(fields[ref.field].name) : std::string();
            outcomes[ref.field][static_cast<std::size_t>(ref.trial)] =
                run_trial(fields[ref.field], cfg, ref.trial, timing_mutex, png_prefix);
        }
    };
    int n_workers = std::clamp(jobs, 1, static_cast<int>(job_list.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_workers; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    // metrics.csv + errors.csv
    std::size_t ok_trials = 0, total_trials = job_list.size();
    {
        auto metrics = open_out(out_path("metrics.csv"));
        metrics << kMetricsHeader << '\n';
        auto errors = open_out(out_path("errors.csv"));
        errors << "map,trial,stage,message\n";
        for (std::size_t f = 0; f < fields.size(); ++f)
            for (int t = 0; t < cfg.trials; ++t) {
                const TrialOutcome& trial = outcomes[f][static_cast<std::size_t>(t)];
                if (!trial.ok) {
                    std::string msg = trial.message;
                    std::replace(msg.begin(), msg.end(), ',', ';');
                    std::replace(msg.begin(), msg.end(), '\n', ' ');
                    errors << fields[f].name << ',' << t << ',' << trial.stage << ',' << msg
                           << '\n';
                    continue;
                }
                ++ok_trials;
                for (std::size_t r = 0; r < 5; ++r)
                    metrics << metrics_row(fields[f].name, kReprSlugs[r], t, trial.reports[r])
                            << '\n';
            }
    }

    // features.csv
    {
        auto out = open_out(out_path("features.csv"));
        out << features_header() << '\n';
        for (const auto& field : fields)
            out << features_row(field.name, field.features) << '\n';
    }

    // correlations.csv over per-map trial means (maps with zero good trials drop).
    std::optional<CorrReport> correlations;
    {
        std::vector<std::vector<std::optional<double>>> feat_rows;
        std::vector<std::array<std::array<double, 3>, 5>> mean_rows;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            std::array<std::array<double, 3>, 5> means{};
            int n = 0;
            for (const auto& trial : outcomes[f])
                if (trial.ok) {
                    ++n;
                    for (std::size_t r = 0; r < 5; ++r) {
                        means[r][0] += trial.reports[r].one_minus_ssim;
                        means[r][1] += trial.reports[r].hamming;
                        means[r][2] += trial.reports[r].mse;
                    }
                }
            if (n == 0)
                continue;
            for (auto& per_repr : means)
                for (double& v : per_repr)
                    v /= n;
            feat_rows.push_back(fields[f].features);
            mean_rows.push_back(means);
        }
        if (feat_rows.size() >= 2) {
            correlations = correlate_tables(feat_rows, mean_rows);
            write_correlations_csv(*correlations, out_path("correlations.csv"));
        } else {
            auto out = open_out(out_path("correlations.csv"));
            out << "feature,repr,metric,rho,pairs\n";
        }
    }

    // tables.md
    {
        auto out = open_out(out_path("tables.md"));
        out << "# Benchmark summary\n\nMean (standard deviation) across " << cfg.trials
            << " trials per map.\n";
        append_mean_std_table(
            out, "Similarity: 1 - SSIM (x 1e-4)", fields, outcomes,
            [](const krg_metric_report& r) { return r.one_minus_ssim; }, 1e4, 2);
        append_mean_std_table(
            out, "Similarity: perceptual-hash Hamming distance", fields, outcomes,
            [](const krg_metric_report& r) { return static_cast<double>(r.hamming); }, 1.0, 1);
        append_mean_std_table(
            out, "Accuracy: MSE (8-bit scale)", fields, outcomes,
            [](const krg_metric_report& r) { return r.mse; }, 1.0, 2);
        append_mean_std_table(
            out, "Cost: build time (s)", fields, outcomes,
            [](const krg_metric_report& r) { return r.build_time; }, 1.0, 4);
        append_mean_std_table(
            out, "Cost: serialised size (KB)", fields, outcomes,
            [](const krg_metric_report& r) { return static_cast<double>(r.size_bytes); },
            1.0 / 1024.0, 2);
        append_mean_std_table(
            out, "Complexity: leaf count", fields, outcomes,
            [](const krg_metric_report& r) { return static_cast<double>(r.leaf_count); }, 1.0,
            1);
        out << "\n## Feature correlations: extremes\n\n";
        if (correlations) {
            write_extremes_md(*correlations, out);
        } else {
            out << "Not computed: needs at least two maps with successful trials.\n";
        }
    }

    // run_manifest.json: everything that determines the numbers (jobs and
    // output paths deliberately excluded).
    {
        json manifest;
        manifest["version"] = krg_version();
        manifest["config"] = config_to_json(cfg);
        json field_info = json::array();
        for (const auto& field : fields)
            field_info.push_back({{"name", field.name},
                                  {"raster", {field.raster_w, field.raster_h}},
                                  {"grid", {field.grid_w, field.grid_h}}});
        manifest["fields"] = field_info;
        json seeds = json::array();
        for (int t = 0; t < cfg.trials; ++t)
            seeds.push_back(cfg.base_seed + static_cast<std::uint64_t>(t));
        manifest["trial_seeds"] = seeds;
        auto out = open_out(out_path("run_manifest.json"));
        out << manifest.dump(2) << '\n';
    }

    std::printf("bench: %zu/%zu trials succeeded across %zu maps; outputs in %s\n", ok_trials,
                total_trials, fields.size(), out_dir.c_str());
    if (ok_trials == 0) {
        std::fprintf(stderr, "bench: every trial failed; see %s\n",
                     out_path("errors.csv").c_str());
        return 1;
    }
    return 0;
}

// --- stage commands ------------------------------------------------------------------------

int cmd_sample(const std::string& input, const std::string& colour, int n, int window,
               std::uint64_t seed, const std::string& out) {
    auto raster = load_raster(input, parse_rgb(colour));
    krg_samples* samples_raw = nullptr;
    chk(krg_sample_uniform(raster.get(), n, window, seed, &samples_raw), "sampling");
    Handle<krg_samples> samples(samples_raw);
    chk(krg_samples_write_csv(samples.get(), out.c_str()), "writing " + out);
    int w = 0, h = 0;
    chk(krg_raster_size(raster.get(), &w, &h), "raster size");
    std::printf("sample: %d points (window %d, seed %" PRIu64 ") from %dx%d -> %s\n", n, window,
                seed, w, h, out.c_str());
    return 0;
}

int cmd_fit(const std::string& samples_path, const std::string& kind_name, int lags, bool cv,
            const std::string& out) {
    auto samples = read_samples(samples_path);
    int kind = 0;
    chk(krg_variogram_kind_from_name(kind_name.c_str(), &kind), "variogram kind");
    krg_variogram model{};
    chk(krg_fit_variogram(samples.get(), kind, lags, &model), "variogram fit");
    chk(krg_variogram_write_file(&model, out.c_str()), "writing " + out);
    std::printf("fit: kind=%s sill=%g range=%g nugget=%g%s\n", krg_variogram_kind_name(model.kind),
                model.sill, model.range, model.nugget, model.degenerate ? " (degenerate)" : "");
    if (cv) {
        krg_kriging* krig_raw = nullptr;
        chk(krg_kriging_new(samples.get(), &model, &krig_raw), "kriging setup");
        Handle<krg_kriging> krig(krig_raw);
        krg_qstats q{};
        chk(krg_kriging_cross_validate(krig.get(), &q), "cross-validation");
        std::ofstream append(out, std::ios::app);
        if (!append.good())
            throw std::runtime_error("cannot append to " + out);
        append << "q1 = " << g17(q.q1) << "\nq2 = " << g17(q.q2) << "\ncr = " << g17(q.cr)
               << '\n';
        std::printf("fit: cv q1=%g q2=%g cr=%g\n", q.q1, q.q2, q.cr);
    }
    return 0;
}

int cmd_render_gp(const std::string& samples_path, const std::string& vario_path, int width,
                  int height, const std::string& extent_str, int threads, const std::string& out,
                  const std::string& png) {
    auto samples = read_samples(samples_path);
    if (!std::filesystem::exists(vario_path))
        throw std::runtime_error("variogram file not found: " + vario_path);
    krg_variogram model{};
    chk(krg_variogram_read_file(vario_path.c_str(), &model), "reading " + vario_path);
    double x0 = 0.0, y0 = 0.0, x1 = width, y1 = height;
    if (!extent_str.empty()) {
        auto parts = split(extent_str, ',');
        if (parts.size() != 4)
            throw std::runtime_error("expected --extent x0,y0,x1,y1");
        x0 = parse_double(trim(parts[0]), "extent");
        y0 = parse_double(trim(parts[1]), "extent");
        x1 = parse_double(trim(parts[2]), "extent");
        y1 = parse_double(trim(parts[3]), "extent");
    }
    krg_kriging* krig_raw = nullptr;
    chk(krg_kriging_new(samples.get(), &model, &krig_raw), "kriging setup");
    Handle<krg_kriging> krig(krig_raw);
    krg_field* grid_raw = nullptr;
    chk(krg_kriging_render(krig.get(), width, height, x0, y0, x1, y1, threads, &grid_raw),
        "gridmap render");
    Handle<krg_field> grid(grid_raw);
    chk(krg_field_write_gpf(grid.get(), out.c_str()), "writing " + out);
    if (!png.empty())
        chk(krg_field_write_png(grid.get(), png.c_str()), "writing " + png);
    std::printf("render-gp: %dx%d grid over [%g,%g)x[%g,%g) -> %s\n", width, height, x0, x1, y0,
                y1, out.c_str());
    return 0;
}

int cmd_build(const std::string& field_path, const std::string& repr_name, const BenchConfig& cfg,
              const std::string& out) {
    auto grid = read_field(field_path);
    int kind = repr_kind_from_name(repr_name);
    auto repr = build_repr(grid.get(), kind, cfg);
    chk(krg_repr_write_file(repr.get(), out.c_str()), "writing " + out);
    double seconds = 0.0;
    chk(krg_repr_build_time(repr.get(), &seconds), "build time");
    uint64_t leaves = 0;
    chk(krg_repr_leaf_count(repr.get(), &leaves), "leaf count");
    {
        json meta;
        meta["repr"] = repr_name;
        meta["build_time_s"] = seconds;
        auto meta_out = open_out(out + ".meta");
        meta_out << meta.dump(2) << '\n';
    }
    std::printf("build: %s leaves=%" PRIu64 " time=%.6fs -> %s (+.meta)\n", repr_name.c_str(),
                leaves, seconds, out.c_str());
    return 0;
}

int cmd_eval(const std::string& field_path, const std::string& repr_path, std::string meta_path,
             const std::string& map_name, int trial, const std::string& out) {
    auto grid = read_field(field_path);
    if (!std::filesystem::exists(repr_path))
        throw std::runtime_error("representation file not found: " + repr_path);
    krg_repr* repr_raw = nullptr;
    chk(krg_repr_read_file(repr_path.c_str(), &repr_raw), "reading " + repr_path);
    Handle<krg_repr> repr(repr_raw);
    if (meta_path.empty() && std::filesystem::exists(repr_path + ".meta"))
        meta_path = repr_path + ".meta";
    if (!meta_path.empty()) {
        std::ifstream meta_in(meta_path);
        if (!meta_in.good())
            throw std::runtime_error("cannot open metadata: " + meta_path);
        json meta = json::parse(meta_in, nullptr, true);
        if (meta.contains("build_time_s"))
            chk(krg_repr_set_build_time(repr.get(), meta["build_time_s"].get<double>()),
                "metadata");
    }
    krg_metric_report report{};
    chk(krg_evaluate(grid.get(), repr.get(), &report), "evaluating");
    int kind = 0;
    chk(krg_repr_kind(repr.get(), &kind), "kind");
    std::string map = map_name.empty()
                          ? std::filesystem::path(field_path).stem().string()
                          : map_name;
    auto csv = open_out(out);
    csv << kMetricsHeader << '\n'
        << metrics_row(map, krg_repr_kind_name(kind), trial, report) << '\n';
    std::printf("eval: %s 1-SSIM=%.3e hd=%d mse=%.3f size=%" PRIu64 "B leaves=%" PRIu64 " -> %s\n",
                krg_repr_kind_name(kind), report.one_minus_ssim, report.hamming, report.mse,
                report.size_bytes, report.leaf_count, out.c_str());
    return 0;
}

int cmd_features(const std::string& input, const std::string& colour,
                 const krg_feature_config& fcfg, const std::string& map_name,
                 const std::string& out) {
    auto raster = load_raster(input, parse_rgb(colour));
    krg_field_features f{};
    chk(krg_compute_features(raster.get(), &fcfg, &f), "computing features");
    std::string map =
        map_name.empty() ? std::filesystem::path(input).stem().string() : map_name;
    auto csv = open_out(out);
    csv << features_header() << '\n' << features_row(map, feature_row_values(f)) << '\n';
    std::printf("features: coverage=%.4f patches=%" PRIu64 " clusters=%" PRIu64 " -> %s\n",
                f.weed_coverage_ratio, f.weed_patches, f.dbscan_num_clusters, out.c_str());
    return 0;
}

int cmd_correlate(const std::string& features_path, const std::string& metrics_path,
                  const std::string& out, const std::string& md_path) {
    // features.csv: map + the ten feature columns; blank cells are nulls.
    std::ifstream feat_in(features_path);
    if (!feat_in.good())
        throw std::runtime_error("features file not found: " + features_path);
    std::string line;
    if (!std::getline(feat_in, line) || trim(line) != features_header())
        throw std::runtime_error(features_path + ": unexpected header (want '" +
                                 features_header() + "')");
    std::map<std::string, std::vector<std::optional<double>>> feature_rows;
    while (std::getline(feat_in, line)) {
        if (trim(line).empty())
            continue;
        auto cells = split(line, ',');
        if (cells.size() != 11)
            throw std::runtime_error(features_path + ": expected 11 columns, got " +
                                     std::to_string(cells.size()));
        std::vector<std::optional<double>> values(10);
        for (std::size_t i = 0; i < 10; ++i)
            if (!trim(cells[i + 1]).empty())
                values[i] = parse_double(trim(cells[i + 1]), kFeatureNames[i]);
        feature_rows[trim(cells[0])] = std::move(values);
    }

    // metrics.csv: bench layout; trials are averaged per map x representation.
    std::ifstream metrics_in(metrics_path);
    if (!metrics_in.good())
        throw std::runtime_error("metrics file not found: " + metrics_path);
    if (!std::getline(metrics_in, line) || trim(line) != kMetricsHeader)
        throw std::runtime_error(metrics_path + ": unexpected header (want '" +
                                 std::string(kMetricsHeader) + "')");
    std::vector<std::string> map_order;
    std::map<std::string, std::array<std::array<double, 3>, 5>> sums;
    std::map<std::string, std::array<int, 5>> counts;
    while (std::getline(metrics_in, line)) {
        if (trim(line).empty())
            continue;
        auto cells = split(line, ',');
        if (cells.size() != 9)
            throw std::runtime_error(metrics_path + ": expected 9 columns, got " +
                                     std::to_string(cells.size()));
        std::string map = trim(cells[0]), repr = trim(cells[1]);
        auto it = std::find(kReprSlugs.begin(), kReprSlugs.end(), repr);
        if (it == kReprSlugs.end())
            throw std::runtime_error(metrics_path + ": unknown representation '" + repr + "'");
        std::size_t r = static_cast<std::size_t>(it - kReprSlugs.begin());
        if (sums.find(map) == sums.end()) {
            map_order.push_back(map);
            sums[map] = {};
            counts[map] = {};
        }
        sums[map][r][0] += parse_double(trim(cells[3]), "one_minus_ssim_e4");
        sums[map][r][1] += parse_double(trim(cells[4]), "hamming");
        sums[map][r][2] += parse_double(trim(cells[5]), "mse");
        counts[map][r] += 1;
    }

    std::vector<std::vector<std::optional<double>>> feats;
    std::vector<std::array<std::array<double, 3>, 5>> means;
    for (const auto& map : map_order) {
        auto feat_it = feature_rows.find(map);
        if (feat_it == feature_rows.end())
            throw std::runtime_error(features_path + ": no feature row for map '" + map + "'");
        std::array<std::array<double, 3>, 5> mean{};
        for (std::size_t r = 0; r < 5; ++r) {
            if (counts[map][r] == 0)
                throw std::runtime_error(metrics_path + ": map '" + map + "' has no rows for " +
                                         kReprSlugs[r]);
            for (std::size_t m = 0; m < 3; ++m)
                mean[r][m] = sums[map][r][m] / counts[map][r];
        }
        feats.push_back(feat_it->second);
        means.push_back(mean);
    }

    CorrReport report = correlate_tables(feats, means);
    write_correlations_csv(report, out);
    if (!md_path.empty()) {
        auto md = open_out(md_path);
        md << "# Feature correlations: extremes\n\nSpearman rho over " << report.field_count
           << " maps (low power below ~6 maps).\n\n";
        write_extremes_md(report, md);
    }
    std::printf("correlate: %zu maps, %zu entries -> %s\n", report.field_count,
                report.entries.size(), out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kriging weed gridmaps and discrete spatial representations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(krg_version()));

    // bench
    auto* bench = app.add_subcommand("bench", "run the full benchmark pipeline");
    std::string bench_config;
    int bench_jobs = 1;
    std::optional<std::uint64_t> bench_seed;
    std::optional<std::string> bench_out;
    bench->add_option("--config", bench_config, "key = value configuration file")->required();
    bench->add_option("--jobs", bench_jobs, "worker threads across field x trial jobs");
    bench->add_option("--seed", bench_seed, "override base_seed");
    bench->add_option("--out", bench_out, "output directory (default bench_out)");

    // sample
    auto* sample = app.add_subcommand("sample", "draw seeded samples from a semantic map");
    std::string sample_input, sample_colour = "255,0,0", sample_out = "samples.csv";
    int sample_n = 500, sample_window = 9;
    std::uint64_t sample_seed = 1;
    sample->add_option("--input", sample_input, "semantic PNG")->required();
    sample->add_option("--weed-colour", sample_colour, "weed RGB, e.g. 255,0,0");
    sample->add_option("--n", sample_n, "number of samples");
    sample->add_option("--window", sample_window, "averaging window (cells)");
    sample->add_option("--seed", sample_seed, "sampling seed");
    sample->add_option("--out", sample_out, "output CSV");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a variogram model to samples");
    std::string fit_samples, fit_kind = "exponential", fit_out = "variogram.txt";
    int fit_lags = 24;
    bool fit_cv = false;
    fit->add_option("--samples", fit_samples, "samples CSV")->required();
    fit->add_option("--kind", fit_kind,
                    "exponential|spherical|gaussian|linear|power|hole_effect");
    fit->add_option("--lags", fit_lags, "empirical variogram bins");
    fit->add_flag("--cv", fit_cv, "append cross-validation statistics");
    fit->add_option("--out", fit_out, "output text file");

    // render-gp
    auto* render = app.add_subcommand("render-gp", "render the kriging mean surface");
    std::string render_samples, render_vario, render_extent, render_out = "gridmap.gpf",
                                              render_png;
    int render_w = 0, render_h = 0, render_threads = 0;
    render->add_option("--samples", render_samples, "samples CSV")->required();
    render->add_option("--variogram", render_vario, "variogram text file")->required();
    render->add_option("--width", render_w, "grid width (cells)")->required();
    render->add_option("--height", render_h, "grid height (cells)")->required();
    render->add_option("--extent", render_extent, "x0,y0,x1,y1 (default 0,0,width,height)");
    render->add_option("--threads", render_threads, "render threads (0 = auto)");
    render->add_option("--out", render_out, "output field (.gpf)");
    render->add_option("--png", render_png, "also write an 8-bit PNG");

    // build
    auto* build = app.add_subcommand("build", "build one discrete representation");
    std::string build_field, build_repr_name = "quadtree", build_out = "repr.gpdr";
    BenchConfig build_cfg; // reuse builder parameter defaults
    std::string build_hex_thresholds;
    build->add_option("--field", build_field, "input field (.gpf or .png)")->required();
    build->add_option("--repr", build_repr_name,
                      "quadtree|wedgelet|bsp_lse|bsp_region|hexmap");
    build->add_option("--quad-max-depth", build_cfg.quad_max_depth, "quadtree depth limit");
    build->add_option("--quad-hom-thresh", build_cfg.quad_hom_thresh,
                      "quadtree variance threshold");
    build->add_option("--wedge-max-depth", build_cfg.wedge_max_depth, "wedgelet depth limit");
    build->add_option("--wedge-hom-thresh", build_cfg.wedge_hom_thresh,
                      "wedgelet variance threshold");
    build->add_option("--wedge-line-thresh", build_cfg.wedge_line_thresh,
                      "wedge residual threshold");
    build->add_option("--bsp-max-depth", build_cfg.bsp_max_depth, "split tree depth limit");
    build->add_option("--bsp-hom-thresh", build_cfg.bsp_hom_thresh,
                      "split tree variance threshold");
    build->add_option("--bsp-angle-step", build_cfg.bsp_angle_step, "candidate angle step (deg)");
    build->add_option("--bsp-offset-step", build_cfg.bsp_offset_step,
                      "candidate offset step (cells)");
    build->add_option("--bsp-prune-keep", build_cfg.bsp_prune_keep,
                      "candidates kept for exact scoring");
    build->add_option("--region-min-px", build_cfg.region_min_px, "minimum region pixels");
    build->add_option("--region-quantisation", build_cfg.region_quantisation,
                      "merge-graph value levels (0 = exact)");
    build->add_option("--hex-base-edge", build_cfg.hex_base_edge, "base hexagon edge (cells)");
    build->add_option("--hex-levels", build_cfg.hex_levels, "hexagon pyramid levels");
    build->add_option("--hex-thresholds", build_hex_thresholds,
                      "per-level error thresholds, comma separated");
    build->add_option("--out", build_out, "output representation (.gpdr)");

    // eval
    auto* eval = app.add_subcommand("eval", "score a representation against a field");
    std::string eval_field, eval_repr, eval_meta, eval_map, eval_out = "metrics.csv";
    int eval_trial = 0;
    eval->add_option("--field", eval_field, "reference field (.gpf or .png)")->required();
    eval->add_option("--repr-file", eval_repr, "representation (.gpdr)")->required();
    eval->add_option("--meta", eval_meta, "metadata sidecar (default <repr>.meta when present)");
    eval->add_option("--map", eval_map, "map name for the CSV row");
    eval->add_option("--trial", eval_trial, "trial index for the CSV row");
    eval->add_option("--out", eval_out, "output CSV (header + one row)");

    // features
    auto* features = app.add_subcommand("features", "spatial features of a semantic map");
    std::string feat_input, feat_colour = "255,0,0", feat_map, feat_out = "features.csv";
    krg_feature_config fcfg{};
    krg_feature_config_default(&fcfg);
    features->add_option("--input", feat_input, "semantic PNG")->required();
    features->add_option("--weed-colour", feat_colour, "weed RGB");
    features->add_option("--connectivity", fcfg.connectivity, "patch connectivity (4 or 8)");
    features->add_option("--dbscan-downsample", fcfg.dbscan_downsample, "mask downsample factor");
    features->add_option("--dbscan-eps", fcfg.dbscan_eps, "cluster radius (cells)");
    features->add_option("--dbscan-min-pts", fcfg.dbscan_min_pts, "core point threshold");
    features->add_option("--agg-grid", fcfg.agg_grid, "aggregation grid size");
    features->add_option("--z-thresh", fcfg.z_thresh, "hot/cold z threshold");
    features->add_option("--perm-seed", fcfg.perm_seed, "permutation seed");
    features->add_option("--permutations", fcfg.permutations, "permutation count");
    features->add_option("--map", feat_map, "map name for the CSV row");
    features->add_option("--out", feat_out, "output CSV");

    // correlate
    auto* correlate = app.add_subcommand("correlate", "feature-metric rank correlations");
    std::string corr_features, corr_metrics, corr_out = "correlations.csv", corr_md;
    correlate->add_option("--features", corr_features, "features CSV")->required();
    correlate->add_option("--metrics", corr_metrics, "metrics CSV")->required();
    correlate->add_option("--out", corr_out, "output CSV");
    correlate->add_option("--md", corr_md, "also write a Markdown extremes table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bench->parsed())
            return cmd_bench(bench_config, bench_jobs, bench_seed, bench_out);
        if (sample->parsed())
            return cmd_sample(sample_input, sample_colour, sample_n, sample_window, sample_seed,
                              sample_out);
        if (fit->parsed())
            return cmd_fit(fit_samples, fit_kind, fit_lags, fit_cv, fit_out);
        if (render->parsed())
            return cmd_render_gp(render_samples, render_vario, render_w, render_h, render_extent,
                                 render_threads, render_out, render_png);
        if (build->parsed()) {
            if (!build_hex_thresholds.empty()) {
                build_cfg.hex_thresholds.clear();
                for (const auto& part : split(build_hex_thresholds, ','))
                    build_cfg.hex_thresholds.push_back(parse_double(trim(part), "threshold"));
            }
            return cmd_build(build_field, build_repr_name, build_cfg, build_out);
        }
        if (eval->parsed())
            return cmd_eval(eval_field, eval_repr, eval_meta, eval_map, eval_trial, eval_out);
        if (features->parsed())
            return cmd_features(feat_input, feat_colour, fcfg, feat_map, feat_out);
        if (correlate->parsed())
            return cmd_correlate(corr_features, corr_metrics, corr_out, corr_md);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "krigrid: %s\n", e.what());
        return 1;
    }
    return 0;
}
