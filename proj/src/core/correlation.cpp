#include <algorithm>
#include <cmath>
#include <numeric>

#include "correlation.hpp"
#include "error.hpp"

namespace krigrid {

std::vector<double> mean_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi + 1 < n && xs[order[hi + 1]] == xs[order[lo]])
            ++hi;
        double rank = (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0 + 1.0;
        for (std::size_t k = lo; k <= hi; ++k)
            ranks[order[k]] = rank;
        lo = hi + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size(), ErrorCode::invalid_argument, "length mismatch");
    require(xs.size() >= 2, ErrorCode::invalid_argument, "need at least two pairs");
    std::vector<double> rx = mean_ranks(xs), ry = mean_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += rx[k];
        my += ry[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        double dx = rx[k] - mx, dy = ry[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    require(sxx > 0.0 && syy > 0.0, ErrorCode::degenerate, "zero rank variance");
    return sxy / std::sqrt(sxx * syy);
}

const std::array<std::string, 5>& repr_labels() {
    static const std::array<std::string, 5> labels = {"Quadtree", "Wedgelet", "BSP_LSE",
                                                      "BSP_Region", "Hex"};
    return labels;
}

const std::array<std::string, 3>& metric_labels() {
    static const std::array<std::string, 3> labels = {"1-SS", "HD", "MSE"};
    return labels;
}

CorrelationTable correlate(const std::vector<FieldFeatures>& features,
                           const std::vector<std::array<MetricReport, 5>>& metrics) {
    require(features.size() == metrics.size(), ErrorCode::invalid_argument,
            "feature and metric row counts differ");
    require(features.size() >= 2, ErrorCode::invalid_argument, "need at least two fields");

    CorrelationTable table;
    table.field_count = features.size();
    table.low_power = features.size() <= 5;

    std::vector<std::vector<std::optional<double>>> feature_cols(features.size());
    for (std::size_t f = 0; f < features.size(); ++f)
        feature_cols[f] = feature_values(features[f]);

    for (std::size_t fi = 0; fi < feature_names().size(); ++fi) {
        FeatureExtreme extreme;
        extreme.feature = feature_names()[fi];
        for (std::size_t r = 0; r < repr_labels().size(); ++r)
            for (std::size_t m = 0; m < metric_labels().size(); ++m) {
                CorrelationEntry entry;
                entry.feature = feature_names()[fi];
                entry.repr = repr_labels()[r];
                entry.metric = metric_labels()[m];
                std::vector<double> xs, ys;
                for (std::size_t f = 0; f < features.size(); ++f) {
                    if (!feature_cols[f][fi].has_value())
                        continue; // null feature: drop this field pairwise
                    const MetricReport& rep = metrics[f][r];
                    double y = m == 0   ? rep.one_minus_ssim
                               : m == 1 ? static_cast<double>(rep.hamming)
                                        : rep.mse;
                    xs.push_back(*feature_cols[f][fi]);
                    ys.push_back(y);
                }
                entry.pairs = xs.size();
                if (xs.size() >= 2) {
                    try {
                        entry.rho = spearman(xs, ys);
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::degenerate)
                            throw;
                    }
                }
                if (entry.rho.has_value()) {
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
                table.entries.push_back(std::move(entry));
            }
        table.extremes.push_back(std::move(extreme));
    }
    return table;
}

} // namespace krigrid
