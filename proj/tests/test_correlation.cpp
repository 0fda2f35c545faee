#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "core/correlation.hpp"

using namespace krigrid;

namespace {

// Fields 0..5: coverage rises, largest patch falls, patch count is constant,
// the autocorrelation feature is null for the last two fields and the hotspot
// ratio is null for all but one. Quadtree metrics move monotonically with
// coverage; the other representations get non-monotonic filler.
std::vector<FieldFeatures> scenario_features() {
    std::vector<FieldFeatures> features;
    for (int k = 0; k < 6; ++k) {
        FieldFeatures f;
        f.weed_coverage_ratio = 0.1 * (k + 1);
        f.weed_patches = 3;
        f.largest_patch_size = static_cast<std::size_t>(60 - 10 * k);
        f.avg_patch_size = 4.0;
        f.patch_size_std = k % 2 == 0 ? 0.1 : 0.2;
        f.dbscan_num_clusters = static_cast<std::size_t>(k % 3);
        f.dbscan_avg_cluster_size = 2.0 + k % 2;
        if (k < 4)
            f.global_autocorrelation = static_cast<double>(k);
        if (k == 2)
            f.hotspot_to_coldspot_ratio = 1.5;
        features.push_back(f);
    }
    return features;
}

std::vector<std::array<MetricReport, 5>> scenario_metrics() {
    std::vector<std::array<MetricReport, 5>> metrics;
    for (int k = 0; k < 6; ++k) {
        std::array<MetricReport, 5> row;
        row[0].one_minus_ssim = 0.01 * (k + 1); // rises with coverage
        row[0].hamming = 100 - k;               // falls with coverage
        row[0].mse = 5.0;                       // constant -> degenerate
        for (std::size_t r = 1; r < 5; ++r) {
            row[r].one_minus_ssim = ((k * 7 + 3) % 5) * 0.01;
            row[r].hamming = (k * 13) % 9;
            row[r].mse = static_cast<double>(((k + 2) * 11) % 13);
        }
        metrics.push_back(row);
    }
    return metrics;
}

const CorrelationEntry& entry_at(const CorrelationTable& table, std::size_t feature,
                                 std::size_t repr, std::size_t metric) {
    return table.entries[feature * 15 + repr * 3 + metric];
}

} // namespace

TEST_CASE("mean ranks average tied positions") {
    std::vector<double> ranks = mean_ranks({1.0, 2.0, 2.0, 4.0});
    REQUIRE(ranks.size() == 4);
    CHECK(ranks[0] == 1.0);
    CHECK(ranks[1] == 2.5);
    CHECK(ranks[2] == 2.5);
    CHECK(ranks[3] == 4.0);

    ranks = mean_ranks({5.0, 5.0, 5.0});
    for (double r : ranks)
        CHECK(r == 2.0);

    ranks = mean_ranks({30.0, 10.0, 20.0});
    CHECK(ranks[0] == 3.0);
    CHECK(ranks[1] == 1.0);
    CHECK(ranks[2] == 2.0);
}

TEST_CASE("Spearman matches reference values") {
    // Cross-checked against scipy.stats.spearmanr.
    CHECK(spearman({1, 2, 2, 4}, {3, 1, 1, 2}) ==
          doctest::Approx(-0.3333333333333334).epsilon(1e-12));
    CHECK(spearman({10, 20, 30, 40, 50}, {1, 4, 9, 16, 25}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman({3, 1, 4, 1, 5, 9, 2, 6}, {2, 7, 1, 8, 2, 8, 1, 8}) ==
          doctest::Approx(0.19885368120992467).epsilon(1e-12));
}

TEST_CASE("Spearman is exactly rank-based") {
    std::vector<double> xs = {0.3, 1.7, 0.9, 2.4, 1.1, 0.05};
    std::vector<double> ys = {4.0, 2.0, 9.0, 1.0, 7.0, 3.0};
    double base = spearman(xs, ys);

    // any strictly increasing transform leaves the ranks untouched
    std::vector<double> warped = xs;
    for (double& v : warped)
        v = std::exp(3.0 * v) - 1.0;
    CHECK(spearman(warped, ys) == base);

    // reversing one side flips the sign
    std::vector<double> negated = xs;
    for (double& v : negated)
        v = -v;
    CHECK(spearman(negated, ys) == doctest::Approx(-base).epsilon(1e-12));

    std::vector<double> descending = {9.0, 7.0, 5.0, 3.0, 1.0};
    CHECK(spearman({1, 2, 3, 4, 5}, descending) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("Spearman rejects degenerate input") {
    CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), Error);
    CHECK_THROWS_AS(spearman({1, 2, 3}, {4, 4, 4}), Error);
    CHECK_THROWS_AS(spearman({1}, {2}), Error);
    CHECK_THROWS_AS(spearman({}, {}), Error);
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), Error);
}

TEST_CASE("display labels are stable") {
    const auto& reprs = repr_labels();
    CHECK(reprs[0] == "Quadtree");
    CHECK(reprs[1] == "Wedgelet");
    CHECK(reprs[2] == "BSP_LSE");
    CHECK(reprs[3] == "BSP_Region");
    CHECK(reprs[4] == "Hex");
    const auto& mets = metric_labels();
    CHECK(mets[0] == "1-SS");
    CHECK(mets[1] == "HD");
    CHECK(mets[2] == "MSE");
}

TEST_CASE("correlate builds the full feature-by-representation table") {
    CorrelationTable table = correlate(scenario_features(), scenario_metrics());
    CHECK(table.field_count == 6);
    CHECK_FALSE(table.low_power);
    REQUIRE(table.entries.size() == 10 * 5 * 3);
    REQUIRE(table.extremes.size() == 10);

    // entries run feature-major, then representation, then metric
    CHECK(entry_at(table, 0, 0, 0).feature == "weed_coverage_ratio");
    CHECK(entry_at(table, 0, 0, 0).repr == "Quadtree");
    CHECK(entry_at(table, 0, 0, 0).metric == "1-SS");
    CHECK(entry_at(table, 9, 4, 2).feature == "hot_to_cold_outlier_ratio");
    CHECK(entry_at(table, 9, 4, 2).repr == "Hex");
    CHECK(entry_at(table, 9, 4, 2).metric == "MSE");

    // coverage vs the monotone quadtree metrics
    const CorrelationEntry& up = entry_at(table, 0, 0, 0);
    REQUIRE(up.rho.has_value());
    CHECK(*up.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(up.pairs == 6);
    const CorrelationEntry& down = entry_at(table, 0, 0, 1);
    REQUIRE(down.rho.has_value());
    CHECK(*down.rho == doctest::Approx(-1.0).epsilon(1e-12));

    // constant metric -> degenerate -> null rho but the pairs still count
    const CorrelationEntry& flat_metric = entry_at(table, 0, 0, 2);
    CHECK_FALSE(flat_metric.rho.has_value());
    CHECK(flat_metric.pairs == 6);

    // constant feature -> every entry null
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t m = 0; m < 3; ++m) {
            const CorrelationEntry& e = entry_at(table, 1, r, m);
            CHECK_FALSE(e.rho.has_value());
            CHECK(e.pairs == 6);
        }

    // monotone-decreasing feature mirrors the coverage correlations
    CHECK(*entry_at(table, 2, 0, 0).rho == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(*entry_at(table, 2, 0, 1).rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlate drops null feature values pairwise") {
    CorrelationTable table = correlate(scenario_features(), scenario_metrics());

    // global autocorrelation exists for fields 0..3 only
    const CorrelationEntry& partial = entry_at(table, 7, 0, 0);
    CHECK(partial.pairs == 4);
    REQUIRE(partial.rho.has_value());
    CHECK(*partial.rho == doctest::Approx(1.0).epsilon(1e-12)); // 0,1,2,3 vs rising 1-SS

    // a feature present in a single field leaves fewer than two pairs
    const CorrelationEntry& lonely = entry_at(table, 8, 2, 1);
    CHECK(lonely.pairs == 1);
    CHECK_FALSE(lonely.rho.has_value());
}

TEST_CASE("extremes pick the strongest signed correlations per feature") {
    CorrelationTable table = correlate(scenario_features(), scenario_metrics());

    const FeatureExtreme& coverage = table.extremes[0];
    CHECK(coverage.feature == "weed_coverage_ratio");
    REQUIRE(coverage.max_rho.has_value());
    CHECK(*coverage.max_rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(coverage.max_label == "Quadtree_1-SS");
    REQUIRE(coverage.min_rho.has_value());
    CHECK(*coverage.min_rho == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(coverage.min_label == "Quadtree_HD");

    // an all-null feature leaves the extreme empty
    const FeatureExtreme& silent = table.extremes[1];
    CHECK(silent.feature == "weed_patches");
    CHECK_FALSE(silent.max_rho.has_value());
    CHECK_FALSE(silent.min_rho.has_value());
    CHECK(silent.max_label.empty());
    CHECK(silent.min_label.empty());
}

TEST_CASE("correlate flags low power and validates its input") {
    auto features = scenario_features();
    auto metrics = scenario_metrics();
    features.resize(4);
    metrics.resize(4);
    CorrelationTable table = correlate(features, metrics);
    CHECK(table.field_count == 4);
    CHECK(table.low_power);

    features.resize(1);
    metrics.resize(1);
    CHECK_THROWS_AS(correlate(features, metrics), Error);
    features = scenario_features();
    metrics = scenario_metrics();
    metrics.resize(5);
    CHECK_THROWS_AS(correlate(features, metrics), Error);
}
