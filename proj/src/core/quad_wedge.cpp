#include <chrono>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "partition_geometry.hpp"
#include "region_stats.hpp"
#include "representation.hpp"

namespace krigrid {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return -floor_div(-a, b);
}

struct PerimeterPoint {
    int x, y;
    int edge; // 0 top, 1 right, 2 bottom, 3 left
};

// Corner-lattice points every 2 cells around the rectangle, each of the four
// corners listed exactly once. The enumeration order fixes candidate indices
// (and therefore tie-breaking).
std::vector<PerimeterPoint> perimeter_points(const CellRect& r) {
    std::vector<PerimeterPoint> pts;
    for (int t = 0; t < r.w; t += 2)
        pts.push_back({r.x + t, r.y, 0});
    for (int t = 0; t < r.h; t += 2)
        pts.push_back({r.x + r.w, r.y + t, 1});
    for (int t = 0; t < r.w; t += 2)
        pts.push_back({r.x + r.w - t, r.y + r.h, 2});
    for (int t = 0; t < r.h; t += 2)
        pts.push_back({r.x, r.y + r.h - t, 3});
    return pts;
}

struct WedgeChoice {
    bool found = false;
    int ax = 0, ay = 0, bx = 0, by = 0;
    double sse = std::numeric_limits<double>::infinity();
};

// Best dividing line over all perimeter-point pairs, scored by exact two-sided
// SSE. Side membership is an integer predicate (see wedge_side_a), and each
// row's side-A cells form one contiguous span, so a candidate costs O(h) row
// lookups against per-row prefix sums.
WedgeChoice best_wedge(const ScalarField& field, const CellRect& r) {
    auto pts = perimeter_points(r);
    std::size_t np = pts.size();
    WedgeChoice best;
    if (np < 2)
        return best;

    std::size_t stride = static_cast<std::size_t>(r.w) + 1;
    std::vector<double> pre(static_cast<std::size_t>(r.h) * stride, 0.0);
    std::vector<double> pre_sq(pre.size(), 0.0);
    double s_tot = 0.0, q_tot = 0.0;
    for (int j = 0; j < r.h; ++j) {
        double* p = pre.data() + static_cast<std::size_t>(j) * stride;
        double* q = pre_sq.data() + static_cast<std::size_t>(j) * stride;
        for (int i = 0; i < r.w; ++i) {
            double v = field.at(r.x + i, r.y + j);
            p[i + 1] = p[i] + v;
            q[i + 1] = q[i] + v * v;
        }
        s_tot += p[r.w];
        q_tot += q[r.w];
    }
    double n_tot = static_cast<double>(r.w) * r.h;

    // Ordered pairs: cells whose centre lies exactly on the chord join side A,
    // so the two orientations of one chord classify those ties differently and
    // both must be scored.
    for (std::size_t pa = 0; pa < np; ++pa) {
        for (std::size_t pb = 0; pb < np; ++pb) {
            if (pa == pb || pts[pa].edge == pts[pb].edge)
                continue; // collinear with an edge: one side has no cells
            std::int64_t ax = pts[pa].x, ay = pts[pa].y;
            std::int64_t m = pts[pb].x - ax, k = pts[pb].y - ay;

            double n_a = 0.0, s_a = 0.0, q_a = 0.0;
            for (int j = 0; j < r.h; ++j) {
                std::int64_t big_r = 2LL * (r.y + j) + 1 - 2 * ay;
                const double* p = pre.data() + static_cast<std::size_t>(j) * stride;
                const double* q = pre_sq.data() + static_cast<std::size_t>(j) * stride;
                if (k == 0) {
                    if (m * big_r <= 0) {
                        n_a += r.w;
                        s_a += p[r.w];
                        q_a += q[r.w];
                    }
                    continue;
                }
                std::int64_t t = m * big_r + k * (2 * ax - 1);
                if (k > 0) { // side A is the suffix i >= lo
                    std::int64_t lo = ceil_div(t, 2 * k) - r.x;
                    if (lo < 0)
                        lo = 0;
                    if (lo < r.w) {
                        n_a += r.w - lo;
                        s_a += p[r.w] - p[lo];
                        q_a += q[r.w] - q[lo];
                    }
                } else { // side A is the prefix i <= hi
                    std::int64_t hi = floor_div(t, 2 * k) - r.x;
                    if (hi >= r.w)
                        hi = r.w - 1;
                    if (hi >= 0) {
                        n_a += hi + 1;
                        s_a += p[hi + 1];
                        q_a += q[hi + 1];
                    }
                }
            }

            double n_b = n_tot - n_a;
            if (n_a == 0.0 || n_b == 0.0)
                continue;
            double s_b = s_tot - s_a, q_b = q_tot - q_a;
            double sse = (q_a - s_a * s_a / n_a) + (q_b - s_b * s_b / n_b);
            if (sse < best.sse) { // strict: earlier candidate index wins ties
                best.found = true;
                best.sse = sse;
                best.ax = static_cast<int>(ax);
                best.ay = static_cast<int>(ay);
                best.bx = pts[pb].x;
                best.by = pts[pb].y;
            }
        }
    }
    return best;
}

struct QuadBuilder {
    const ScalarField& field;
    int max_depth;
    double hom_thresh;
    bool wedges;
    double line_thresh;
    std::vector<QuadNode> nodes;

    std::int32_t build(const CellRect& r, int depth) {
        RegionStats stats = region_stats_rect(field, r.x, r.y, r.w, r.h);
        std::int32_t idx = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();

        if (stats.variance <= hom_thresh || depth >= max_depth || (r.w == 1 && r.h == 1)) {
            nodes[idx].value = stats.mean;
            return idx;
        }

        if (wedges) {
            WedgeChoice wc = best_wedge(field, r);
            if (wc.found && wc.sse / static_cast<double>(stats.count) <= line_thresh) {
                double s_a = 0.0, s_b = 0.0;
                std::size_t n_a = 0, n_b = 0;
                for (int j = r.y; j < r.y + r.h; ++j)
                    for (int i = r.x; i < r.x + r.w; ++i) {
                        if (wedge_side_a(wc.ax, wc.ay, wc.bx, wc.by, i, j)) {
                            s_a += field.at(i, j);
                            ++n_a;
                        } else {
                            s_b += field.at(i, j);
                            ++n_b;
                        }
                    }
                QuadNode& node = nodes[idx];
                node.wedge = true;
                node.ax = static_cast<std::uint16_t>(wc.ax);
                node.ay = static_cast<std::uint16_t>(wc.ay);
                node.bx = static_cast<std::uint16_t>(wc.bx);
                node.by = static_cast<std::uint16_t>(wc.by);
                node.value_a = s_a / static_cast<double>(n_a);
                node.value_b = s_b / static_cast<double>(n_b);
                node.value = stats.mean;
                return idx;
            }
        }

        CellRect kids[4];
        int nk = quad_children(r, kids);
        for (int c = 0; c < nk; ++c) {
            std::int32_t ci = build(kids[c], depth + 1);
            nodes[idx].child[static_cast<std::size_t>(c)] = ci;
        }
        return idx;
    }
};

DiscreteRepresentation build_quad_like(const ScalarField& field, ReprKind kind,
                                       int max_depth, double hom_thresh, bool wedges,
                                       double line_thresh) {
    require(max_depth >= 0, ErrorCode::invalid_argument, "max_depth must be >= 0");
    require(hom_thresh >= 0.0, ErrorCode::invalid_argument, "hom_thresh must be >= 0");
    require(field.width <= 65534 && field.height <= 65534, ErrorCode::invalid_argument,
            "field too large for corner coordinates");

    auto t0 = std::chrono::steady_clock::now();
    QuadBuilder builder{field, max_depth, hom_thresh, wedges, line_thresh, {}};
    builder.build({0, 0, field.width, field.height}, 0);
    auto t1 = std::chrono::steady_clock::now();

    DiscreteRepresentation repr;
    repr.kind = kind;
    repr.width = field.width;
    repr.height = field.height;
    repr.build_time = std::chrono::duration<double>(t1 - t0).count();
    repr.payload = QuadTreePayload{std::move(builder.nodes)};
    return repr;
}

} // namespace

DiscreteRepresentation build_quadtree(const ScalarField& field, int max_depth,
                                      double hom_thresh) {
    return build_quad_like(field, ReprKind::quadtree, max_depth, hom_thresh, false, 0.0);
}

DiscreteRepresentation build_wedgelet(const ScalarField& field, int max_depth,
                                      double hom_thresh, double line_thresh) {
    require(line_thresh >= 0.0, ErrorCode::invalid_argument, "line_thresh must be >= 0");
    return build_quad_like(field, ReprKind::wedgelet, max_depth, hom_thresh, true,
                           line_thresh);
}

} // namespace krigrid
