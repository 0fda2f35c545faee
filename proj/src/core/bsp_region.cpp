#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <unordered_set>

#include "error.hpp"
#include "representation.hpp"

namespace krigrid {
namespace {

struct ZoneEdge {
    double weight;
    std::uint32_t za, zb; // zones on the two sides of the first pixel edge
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i)
            parent_[i] = static_cast<std::uint32_t>(i);
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]]; // path halving
            x = parent_[x];
        }
        return x;
    }

    // Deterministic direction: src root is attached under target root.
    void unite_into(std::uint32_t target_root, std::uint32_t src_root) {
        parent_[src_root] = target_root;
    }

private:
    std::vector<std::uint32_t> parent_;
};

} // namespace

DiscreteRepresentation build_bsp_region(const ScalarField& field, int min_region_px,
                                        int quantisation) {
    require(min_region_px >= 1, ErrorCode::invalid_argument, "min_region_px must be >= 1");
    require(quantisation == 0 || quantisation >= 2, ErrorCode::invalid_argument,
            "quantisation must be 0 (off) or >= 2");

    auto t0 = std::chrono::steady_clock::now();
    const int w = field.width, h = field.height;
    const std::size_t n_px = field.cell_count();

    // Pixel values used for zone equality and edge weights; leaf means always
    // come from the raw field.
    std::vector<double> graph_val(n_px);
    if (quantisation > 0) {
        double scale = quantisation - 1;
        for (std::size_t p = 0; p < n_px; ++p) {
            double q = std::floor(field.values[p] * scale + 0.5);
            graph_val[p] = std::clamp(q, 0.0, scale);
        }
    } else {
        graph_val = field.values;
    }

    // Flat zones: 4-connected components of equal graph value.
    UnionFind px_uf(n_px);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            std::size_t p = static_cast<std::size_t>(j) * w + i;
            if (i > 0 && graph_val[p] == graph_val[p - 1])
                px_uf.unite_into(px_uf.find(static_cast<std::uint32_t>(p - 1)),
                                 px_uf.find(static_cast<std::uint32_t>(p)));
            if (j > 0 && graph_val[p] == graph_val[p - w])
                px_uf.unite_into(px_uf.find(static_cast<std::uint32_t>(p - w)),
                                 px_uf.find(static_cast<std::uint32_t>(p)));
        }

    std::vector<std::uint32_t> zone_of(n_px);
    std::vector<std::uint32_t> zone_root; // compact id -> pixel root, first-seen order
    {
        std::vector<std::uint32_t> compact(n_px, UINT32_MAX);
        for (std::size_t p = 0; p < n_px; ++p) {
            std::uint32_t root = px_uf.find(static_cast<std::uint32_t>(p));
            if (compact[root] == UINT32_MAX) {
                compact[root] = static_cast<std::uint32_t>(zone_root.size());
                zone_root.push_back(root);
            }
            zone_of[p] = compact[root];
        }
    }
    const std::size_t n_zones = zone_root.size();

    std::vector<std::uint32_t> zone_px(n_zones, 0);
    std::vector<double> zone_val(n_zones);
    for (std::size_t p = 0; p < n_px; ++p) {
        zone_px[zone_of[p]] += 1;
        zone_val[zone_of[p]] = graph_val[p];
    }

    // Zone adjacency edges in row-major discovery order; duplicates collapse
    // (every pixel edge between two flat zones carries the same weight).
    std::vector<ZoneEdge> edges;
    {
        std::unordered_set<std::uint64_t> seen;
        auto add_edge = [&](std::uint32_t za, std::uint32_t zb) {
            if (za == zb)
                return;
            std::uint64_t a = std::min(za, zb), b = std::max(za, zb);
            if (seen.insert(a * static_cast<std::uint64_t>(n_zones) + b).second)
                edges.push_back({std::abs(zone_val[za] - zone_val[zb]), za, zb});
        };
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                std::size_t p = static_cast<std::size_t>(j) * w + i;
                if (i + 1 < w)
                    add_edge(zone_of[p], zone_of[p + 1]);
                if (j + 1 < h)
                    add_edge(zone_of[p], zone_of[p + w]);
            }
    }

    // Kruskal order: ascending weight, discovery order within equal weights.
    if (quantisation > 0) {
        // Integer weights: counting sort keeps the within-bucket order stable.
        std::vector<std::vector<ZoneEdge>> buckets(static_cast<std::size_t>(quantisation));
        for (const auto& e : edges)
            buckets[static_cast<std::size_t>(e.weight)].push_back(e);
        edges.clear();
        for (auto& b : buckets)
            edges.insert(edges.end(), b.begin(), b.end());
    } else {
        std::stable_sort(edges.begin(), edges.end(),
                         [](const ZoneEdge& l, const ZoneEdge& r) { return l.weight < r.weight; });
    }

    // Replay merges in altitude order. A cluster smaller than min_region_px is
    // always a single growing region (none of its parts may stand alone), so
    // when it meets a large cluster its pixels join the region holding the
    // edge's far endpoint; merges of two large clusters only record hierarchy.
    UnionFind cluster_uf(n_zones), region_uf(n_zones);
    std::vector<std::uint64_t> cluster_px(zone_px.begin(), zone_px.end());
    std::vector<double> altitudes;
    altitudes.reserve(edges.size());
    const auto min_px = static_cast<std::uint64_t>(min_region_px);

    for (const auto& e : edges) {
        std::uint32_t ca = cluster_uf.find(e.za), cb = cluster_uf.find(e.zb);
        if (ca == cb)
            continue;
        altitudes.push_back(e.weight);
        bool small_a = cluster_px[ca] < min_px, small_b = cluster_px[cb] < min_px;
        if (small_a || small_b) {
            std::uint32_t ra = region_uf.find(e.za), rb = region_uf.find(e.zb);
            std::uint32_t target = small_a && !small_b ? rb : ra;
            std::uint32_t src = target == ra ? rb : ra;
            region_uf.unite_into(target, src);
        }
        cluster_uf.unite_into(ca, cb);
        cluster_px[ca] += cluster_px[cb];
    }

    // Assemble leaves in order of first pixel, with row-major run-length runs.
    std::vector<std::int64_t> leaf_of_region(n_zones, -1);
    BspRegionPayload payload;
    payload.merge_altitudes = std::move(altitudes);
    std::vector<double> leaf_sum;
    for (int j = 0; j < h; ++j) {
        std::int64_t run_leaf = -1;
        std::uint32_t run_start = 0;
        for (int i = 0; i < w; ++i) {
            std::size_t p = static_cast<std::size_t>(j) * w + i;
            std::uint32_t region = region_uf.find(zone_of[p]);
            std::int64_t leaf = leaf_of_region[region];
            if (leaf < 0) {
                leaf = static_cast<std::int64_t>(payload.leaves.size());
                leaf_of_region[region] = leaf;
                payload.leaves.emplace_back();
                leaf_sum.push_back(0.0);
            }
            auto& l = payload.leaves[static_cast<std::size_t>(leaf)];
            l.pixel_count += 1;
            leaf_sum[static_cast<std::size_t>(leaf)] += field.values[p];
            if (leaf != run_leaf) {
                if (run_leaf >= 0)
                    payload.leaves[static_cast<std::size_t>(run_leaf)].runs.push_back(
                        {static_cast<std::uint32_t>(j), run_start,
                         static_cast<std::uint32_t>(i) - run_start});
                run_leaf = leaf;
                run_start = static_cast<std::uint32_t>(i);
            }
        }
        if (run_leaf >= 0)
            payload.leaves[static_cast<std::size_t>(run_leaf)].runs.push_back(
                {static_cast<std::uint32_t>(j), run_start,
                 static_cast<std::uint32_t>(w) - run_start});
    }
    for (std::size_t l = 0; l < payload.leaves.size(); ++l)
        payload.leaves[l].value = leaf_sum[l] / static_cast<double>(payload.leaves[l].pixel_count);

    auto t1 = std::chrono::steady_clock::now();
    DiscreteRepresentation repr;
    repr.kind = ReprKind::bsp_region;
    repr.width = w;
    repr.height = h;
    repr.build_time = std::chrono::duration<double>(t1 - t0).count();
    repr.payload = std::move(payload);
    return repr;
}

} // namespace krigrid
