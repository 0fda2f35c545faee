#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "spatial_features.hpp"

namespace krigrid {

// Spearman rank correlation: Pearson correlation of mean (fractional) ranks.
// Raises a degenerate error when either list has zero rank variance.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// Mean ranks (1-based; ties share the average of their positions).
std::vector<double> mean_ranks(const std::vector<double>& xs);

// Display labels used in reports: representation_metric, e.g. "Hex_MSE".
const std::array<std::string, 5>& repr_labels();   // ReprKind order
const std::array<std::string, 3>& metric_labels(); // 1-SS, HD, MSE

struct CorrelationEntry {
    std::string feature;
    std::string repr;   // display label
    std::string metric; // display label
    std::optional<double> rho; // null: zero rank variance or < 2 usable pairs
    std::size_t pairs = 0;     // fields used after null exclusion
};

struct FeatureExtreme {
    std::string feature;
    std::optional<double> max_rho, min_rho;
    std::string max_label, min_label; // "Repr_Metric", empty when null
};

struct CorrelationTable {
    std::vector<CorrelationEntry> entries; // feature-major, repr, then metric
    std::vector<FeatureExtreme> extremes;  // one per feature
    std::size_t field_count = 0;
    bool low_power = false; // five or fewer fields
};

// Correlate per-field features against per-field mean quality metrics
// (1 - SSIM, hash Hamming distance, MSE) for each representation. Fields with
// a null feature are dropped pairwise for that feature's entries.
CorrelationTable correlate(const std::vector<FieldFeatures>& features,
                           const std::vector<std::array<MetricReport, 5>>& metrics);

} // namespace krigrid
