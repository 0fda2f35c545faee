#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "types.hpp"

namespace krigrid {

// --- patch statistics ---------------------------------------------------------

struct PatchStats {
    std::size_t count = 0;
    std::size_t largest = 0;
    double mean = 0.0;
    double std_dev = 0.0; // population standard deviation
};

// Connected components of weed cells; connectivity is 4 or 8.
PatchStats weed_patches_stats(const SemanticRaster& raster, int connectivity);

// --- DBSCAN --------------------------------------------------------------------

struct DbscanResult {
    std::size_t num_clusters = 0;
    double avg_cluster_size = 0.0; // points per cluster, 0 when none
    std::size_t noise_count = 0;
    std::vector<int> labels; // per point: cluster id >= 0, or -1 for noise
};

// Classic DBSCAN over 2D points with Euclidean distance. Points are visited in
// the order given; border points take the label of the first cluster that
// reaches them, so the input order (row-major for grids) fixes the result.
DbscanResult dbscan_clusters(const std::vector<std::pair<double, double>>& points, double eps,
                             int min_pts);

// --- autocorrelation statistics -------------------------------------------------

// Global Moran's I with binary contiguity weights (queen by default, rook
// otherwise): I = (N/W) * sum_ij w_ij (x_i - mean)(x_j - mean) / sum_i (x_i - mean)^2.
// Zero variance raises a degenerate-field error.
double morans_i(const ScalarField& grid, bool queen = true);

struct GetisOrdResult {
    double ratio = 0.0; // hot_count / max(cold_count, 1)
    std::size_t hot_count = 0;
    std::size_t cold_count = 0;
    std::vector<double> z_scores; // per cell, row-major
};

// Getis-Ord Gi* with a self-inclusive queen neighbourhood; hot cells have
// z > z_thresh, cold cells z < -z_thresh.
GetisOrdResult getis_ord_ratio(const ScalarField& grid, double z_thresh);

struct LocalOutlierResult {
    double ratio = 0.0; // high_low / max(low_high, 1)
    std::size_t high_low = 0;
    std::size_t low_high = 0;
    std::vector<int> category; // per cell: 0 none, 1 high-low, 2 low-high
};

// Local Moran's I per cell (queen weights); spatial outliers are cells with
// significantly negative I_i under a seeded conditional permutation test
// (pseudo p-value (R+1)/(permutations+1) <= 0.05), classified high-low when the
// cell is above the mean with a below-mean neighbourhood, low-high otherwise.
LocalOutlierResult local_outlier_ratio(const ScalarField& grid, std::uint64_t seed,
                                       int permutations = 99);

// --- combined per-field feature vector -------------------------------------------

struct FeatureConfig {
    int connectivity = 8;      // patch labelling
    int dbscan_downsample = 8; // mask downsample factor before clustering
    double dbscan_eps = 3.0;   // in downsampled cells
    int dbscan_min_pts = 5;
    int agg_grid = 32; // coarse grid size for the autocorrelation statistics
    double z_thresh = 1.96;
    std::uint64_t perm_seed = 0;
    int permutations = 99;
};

struct FieldFeatures {
    double weed_coverage_ratio = 0.0;
    std::size_t weed_patches = 0;
    std::size_t largest_patch_size = 0;
    double avg_patch_size = 0.0;
    double patch_size_std = 0.0;
    std::size_t dbscan_num_clusters = 0;
    double dbscan_avg_cluster_size = 0.0;
    // Null when the aggregated grid has zero variance.
    std::optional<double> global_autocorrelation;
    std::optional<double> hotspot_to_coldspot_ratio;
    std::optional<double> hot_to_cold_outlier_ratio;
};

FieldFeatures compute_features(const SemanticRaster& raster, const FeatureConfig& config = {});

// Stable feature order shared by the CSV writer and the correlation report.
const std::vector<std::string>& feature_names();
std::vector<std::optional<double>> feature_values(const FieldFeatures& f);

} // namespace krigrid
