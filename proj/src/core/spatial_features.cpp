#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "error.hpp"
#include "rng.hpp"
#include "spatial_features.hpp"

namespace krigrid {
namespace {

// Deviations from the mean plus the variance guard shared by the statistics.
std::vector<double> centred(const ScalarField& grid, double& mean_out, double& m2_out) {
    const std::size_t n = grid.cell_count();
    double mean = 0.0;
    for (double v : grid.values)
        mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> dev(n);
    double m2 = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        dev[p] = grid.values[p] - mean;
        m2 += dev[p] * dev[p];
    }
    require(m2 > 0.0, ErrorCode::degenerate, "grid has zero variance");
    mean_out = mean;
    m2_out = m2;
    return dev;
}

template <typename Fn>
void for_each_neighbour(int w, int h, int i, int j, bool queen, Fn&& fn) {
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0)
                continue;
            if (!queen && di != 0 && dj != 0)
                continue;
            int ni = i + di, nj = j + dj;
            if (ni >= 0 && ni < w && nj >= 0 && nj < h)
                fn(ni, nj);
        }
}

} // namespace

PatchStats weed_patches_stats(const SemanticRaster& raster, int connectivity) {
    require(connectivity == 4 || connectivity == 8, ErrorCode::invalid_argument,
            "connectivity must be 4 or 8");
    const int w = raster.width, h = raster.height;
    std::vector<std::uint8_t> seen(raster.pixel_count(), 0);
    std::vector<std::size_t> sizes;
    std::vector<std::pair<int, int>> queue;
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            std::size_t p = static_cast<std::size_t>(j) * w + i;
            if (!raster.weed_mask[p] || seen[p])
                continue;
            std::size_t size = 0;
            queue.assign(1, {i, j});
            seen[p] = 1;
            while (!queue.empty()) {
                auto [ci, cj] = queue.back();
                queue.pop_back();
                ++size;
                for_each_neighbour(w, h, ci, cj, connectivity == 8, [&](int ni, int nj) {
                    std::size_t q = static_cast<std::size_t>(nj) * w + ni;
                    if (raster.weed_mask[q] && !seen[q]) {
                        seen[q] = 1;
                        queue.push_back({ni, nj});
                    }
                });
            }
            sizes.push_back(size);
        }

    PatchStats stats;
    stats.count = sizes.size();
    if (sizes.empty())
        return stats;
    double sum = 0.0;
    for (std::size_t s : sizes) {
        stats.largest = std::max(stats.largest, s);
        sum += static_cast<double>(s);
    }
    stats.mean = sum / static_cast<double>(sizes.size());
    double acc = 0.0;
    for (std::size_t s : sizes) {
        double d = static_cast<double>(s) - stats.mean;
        acc += d * d;
    }
    stats.std_dev = std::sqrt(acc / static_cast<double>(sizes.size()));
    return stats;
}

DbscanResult dbscan_clusters(const std::vector<std::pair<double, double>>& points, double eps,
                             int min_pts) {
    require(eps > 0.0, ErrorCode::invalid_argument, "eps must be positive");
    require(min_pts >= 1, ErrorCode::invalid_argument, "min_pts must be >= 1");
    const std::size_t n = points.size();
    constexpr int kUnvisited = -2, kNoise = -1;

    // Bucket grid with eps-sized cells; a neighbourhood spans 3x3 buckets.
    // Cell indices are computed once per point so queries use exact integers.
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
    auto cell_of = [&](double v) { return static_cast<std::int64_t>(std::floor(v / eps)); };
    auto key_of = [](std::int64_t bx, std::int64_t by) {
        return (static_cast<std::uint64_t>(bx) << 32) ^
               static_cast<std::uint32_t>(static_cast<std::uint64_t>(by));
    };
    for (std::size_t p = 0; p < n; ++p)
        buckets[key_of(cell_of(points[p].first), cell_of(points[p].second))].push_back(
            static_cast<std::uint32_t>(p));

    const double eps2 = eps * eps;
    auto region_query = [&](std::size_t p) {
        std::vector<std::uint32_t> out;
        double x = points[p].first, y = points[p].second;
        std::int64_t bx = cell_of(x), by = cell_of(y);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                auto it = buckets.find(key_of(bx + dx, by + dy));
                if (it == buckets.end())
                    continue;
                for (std::uint32_t q : it->second) {
                    double ddx = points[q].first - x, ddy = points[q].second - y;
                    if (ddx * ddx + ddy * ddy <= eps2)
                        out.push_back(q);
                }
            }
        std::sort(out.begin(), out.end()); // expansion order independent of hashing
        return out;
    };

    DbscanResult result;
    result.labels.assign(n, kUnvisited);
    int cluster = 0;
    std::deque<std::uint32_t> seeds;
    for (std::size_t p = 0; p < n; ++p) {
        if (result.labels[p] != kUnvisited)
            continue;
        auto nbhd = region_query(p);
        if (nbhd.size() < static_cast<std::size_t>(min_pts)) {
            result.labels[p] = kNoise;
            continue;
        }
        result.labels[p] = cluster;
        seeds.assign(nbhd.begin(), nbhd.end());
        while (!seeds.empty()) {
            std::uint32_t q = seeds.front();
            seeds.pop_front();
            if (result.labels[q] == kNoise)
                result.labels[q] = cluster; // border point, first cluster keeps it
            if (result.labels[q] != kUnvisited)
                continue;
            result.labels[q] = cluster;
            auto nq = region_query(q);
            if (nq.size() >= static_cast<std::size_t>(min_pts))
                seeds.insert(seeds.end(), nq.begin(), nq.end());
        }
        ++cluster;
    }

    std::vector<std::size_t> sizes(static_cast<std::size_t>(cluster), 0);
    for (int label : result.labels) {
        if (label < 0)
            result.noise_count += 1;
        else
            sizes[static_cast<std::size_t>(label)] += 1;
    }
    result.num_clusters = sizes.size();
    if (!sizes.empty()) {
        double sum = 0.0;
        for (std::size_t s : sizes)
            sum += static_cast<double>(s);
        result.avg_cluster_size = sum / static_cast<double>(sizes.size());
    }
    return result;
}

double morans_i(const ScalarField& grid, bool queen) {
    double mean = 0.0, m2 = 0.0;
    std::vector<double> dev = centred(grid, mean, m2);
    const int w = grid.width, h = grid.height;
    double cross = 0.0, weight_sum = 0.0;
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i)
            for_each_neighbour(w, h, i, j, queen, [&](int ni, int nj) {
                cross += dev[static_cast<std::size_t>(j) * w + i] *
                         dev[static_cast<std::size_t>(nj) * w + ni];
                weight_sum += 1.0;
            });
    require(weight_sum > 0.0, ErrorCode::degenerate, "grid has no neighbour pairs");
    double n_cells = static_cast<double>(grid.cell_count());
    return (n_cells / weight_sum) * cross / m2;
}

GetisOrdResult getis_ord_ratio(const ScalarField& grid, double z_thresh) {
    const int w = grid.width, h = grid.height;
    const double n_cells = static_cast<double>(grid.cell_count());
    require(grid.cell_count() >= 2, ErrorCode::invalid_argument, "grid too small");
    double mean = 0.0, sum_sq = 0.0;
    for (double v : grid.values) {
        mean += v;
        sum_sq += v * v;
    }
    mean /= n_cells;
    double s = std::sqrt(sum_sq / n_cells - mean * mean);
    require(s > 0.0, ErrorCode::degenerate, "grid has zero variance");

    GetisOrdResult result;
    result.z_scores.resize(grid.cell_count());
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            double local = grid.at(i, j); // self-inclusive neighbourhood
            double n_i = 1.0;
            for_each_neighbour(w, h, i, j, true, [&](int ni, int nj) {
                local += grid.at(ni, nj);
                n_i += 1.0;
            });
            double denom = s * std::sqrt((n_cells * n_i - n_i * n_i) / (n_cells - 1.0));
            double z = (local - mean * n_i) / denom;
            result.z_scores[static_cast<std::size_t>(j) * w + i] = z;
            if (z > z_thresh)
                result.hot_count += 1;
            else if (z < -z_thresh)
                result.cold_count += 1;
        }
    result.ratio = static_cast<double>(result.hot_count) /
                   static_cast<double>(std::max<std::size_t>(result.cold_count, 1));
    return result;
}

LocalOutlierResult local_outlier_ratio(const ScalarField& grid, std::uint64_t seed,
                                       int permutations) {
    require(permutations >= 1, ErrorCode::invalid_argument, "permutations must be >= 1");
    double mean = 0.0, m2_total = 0.0;
    std::vector<double> dev = centred(grid, mean, m2_total);
    const int w = grid.width, h = grid.height;
    const std::size_t n = grid.cell_count();
    const double m2 = m2_total / static_cast<double>(n);

    LocalOutlierResult result;
    result.category.assign(n, 0);
    std::vector<double> pool(n - 1);
    std::vector<std::uint32_t> swaps;
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            std::size_t cell = static_cast<std::size_t>(j) * w + i;
            double lag = 0.0;
            std::size_t n_i = 0;
            for_each_neighbour(w, h, i, j, true, [&](int ni, int nj) {
                lag += dev[static_cast<std::size_t>(nj) * w + ni];
                n_i += 1;
            });
            double local_i = dev[cell] / m2 * lag;
            if (local_i >= 0.0)
                continue;

            // Conditional permutation test: redraw the neighbourhood from the
            // other cells' values, seeded per cell for reproducibility.
            for (std::size_t p = 0, t = 0; p < n; ++p)
                if (p != cell)
                    pool[t++] = dev[p];
            Xoshiro256pp rng(Xoshiro256pp::mix_seed(seed, cell));
            int as_extreme = 0;
            for (int rep = 0; rep < permutations; ++rep) {
                swaps.clear();
                double perm_lag = 0.0;
                for (std::size_t t = 0; t < n_i; ++t) {
                    std::uint64_t pick =
                        t + rng.next_below(static_cast<std::uint64_t>(pool.size() - t));
                    swaps.push_back(static_cast<std::uint32_t>(pick));
                    std::swap(pool[t], pool[pick]);
                    perm_lag += pool[t];
                }
                for (std::size_t t = n_i; t-- > 0;)
                    std::swap(pool[t], pool[swaps[t]]);
                double perm_i = dev[cell] / m2 * perm_lag;
                as_extreme += perm_i <= local_i ? 1 : 0;
            }
            double p_lower = static_cast<double>(as_extreme + 1) /
                             static_cast<double>(permutations + 1);
            if (p_lower <= 0.05) {
                bool high_low = dev[cell] > 0.0;
                result.category[cell] = high_low ? 1 : 2;
                (high_low ? result.high_low : result.low_high) += 1;
            }
        }
    result.ratio = static_cast<double>(result.high_low) /
                   static_cast<double>(std::max<std::size_t>(result.low_high, 1));
    return result;
}

FieldFeatures compute_features(const SemanticRaster& raster, const FeatureConfig& config) {
    require(config.dbscan_downsample >= 1, ErrorCode::invalid_argument,
            "dbscan_downsample must be >= 1");
    require(config.agg_grid >= 1, ErrorCode::invalid_argument, "agg_grid must be >= 1");
    FieldFeatures f;

    std::size_t weed = 0;
    for (std::uint8_t m : raster.weed_mask)
        weed += m ? 1 : 0;
    f.weed_coverage_ratio = static_cast<double>(weed) / static_cast<double>(raster.pixel_count());

    PatchStats patches = weed_patches_stats(raster, config.connectivity);
    f.weed_patches = patches.count;
    f.largest_patch_size = patches.largest;
    f.avg_patch_size = patches.mean;
    f.patch_size_std = patches.std_dev;

    // Clustering runs on the coordinates of downsampled blocks containing any
    // weed, visited row-major.
    {
        int d = config.dbscan_downsample;
        int bw = (raster.width + d - 1) / d, bh = (raster.height + d - 1) / d;
        std::vector<std::pair<double, double>> points;
        for (int bj = 0; bj < bh; ++bj)
            for (int bi = 0; bi < bw; ++bi) {
                bool any = false;
                for (int j = bj * d; j < std::min((bj + 1) * d, raster.height) && !any; ++j)
                    for (int i = bi * d; i < std::min((bi + 1) * d, raster.width) && !any; ++i)
                        any = raster.weed_at(i, j);
                if (any)
                    points.emplace_back(bi, bj);
            }
        DbscanResult clusters = dbscan_clusters(points, config.dbscan_eps, config.dbscan_min_pts);
        f.dbscan_num_clusters = clusters.num_clusters;
        f.dbscan_avg_cluster_size = clusters.avg_cluster_size;
    }

    // Autocorrelation statistics run on a coarse mean-aggregated grid.
    {
        int gw = std::min(config.agg_grid, raster.width);
        int gh = std::min(config.agg_grid, raster.height);
        ScalarField agg(gw, gh, 0.0);
        for (int gj = 0; gj < gh; ++gj)
            for (int gi = 0; gi < gw; ++gi) {
                int x0 = gi * raster.width / gw, x1 = (gi + 1) * raster.width / gw;
                int y0 = gj * raster.height / gh, y1 = (gj + 1) * raster.height / gh;
                std::size_t count = 0, hits = 0;
                for (int j = y0; j < y1; ++j)
                    for (int i = x0; i < x1; ++i) {
                        hits += raster.weed_at(i, j) ? 1 : 0;
                        ++count;
                    }
                agg.at(gi, gj) = static_cast<double>(hits) / static_cast<double>(count);
            }
        double mn = agg.values[0], mx = agg.values[0];
        for (double v : agg.values) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (mx > mn && agg.cell_count() >= 2) {
            f.global_autocorrelation = morans_i(agg);
            f.hotspot_to_coldspot_ratio = getis_ord_ratio(agg, config.z_thresh).ratio;
            f.hot_to_cold_outlier_ratio =
                local_outlier_ratio(agg, config.perm_seed, config.permutations).ratio;
        }
    }
    return f;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "weed_coverage_ratio",   "weed_patches",           "largest_patch_size",
        "avg_patch_size",        "patch_size_std",         "dbscan_num_clusters",
        "dbscan_avg_cluster_size", "global_autocorrelation", "hotspot_to_coldspot_ratio",
        "hot_to_cold_outlier_ratio"};
    return names;
}

std::vector<std::optional<double>> feature_values(const FieldFeatures& f) {
    return {f.weed_coverage_ratio,
            static_cast<double>(f.weed_patches),
            static_cast<double>(f.largest_patch_size),
            f.avg_patch_size,
            f.patch_size_std,
            static_cast<double>(f.dbscan_num_clusters),
            f.dbscan_avg_cluster_size,
            f.global_autocorrelation,
            f.hotspot_to_coldspot_ratio,
            f.hot_to_cold_outlier_ratio};
}

} // namespace krigrid
