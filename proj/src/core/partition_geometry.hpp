#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace krigrid {

// ---------------------------------------------------------------------------
// Shared per-cell geometric rules. Builders, renderers, and the binary decoder
// all route through these functions, so a serialised representation paints
// exactly the same raster as the build it came from.
// ---------------------------------------------------------------------------

struct CellRect {
    int x = 0, y = 0, w = 0, h = 0;
};

// Quadrant split with ceil-left halves; children in TL, TR, BL, BR order,
// skipping the empty ones (a 1-wide or 1-tall rectangle splits 2-way).
inline int quad_children(const CellRect& r, CellRect out[4]) {
    int wl = (r.w + 1) / 2, ht = (r.h + 1) / 2;
    int wr = r.w - wl, hb = r.h - ht;
    int n = 0;
    out[n++] = {r.x, r.y, wl, ht};
    if (wr > 0)
        out[n++] = {r.x + wl, r.y, wr, ht};
    if (hb > 0)
        out[n++] = {r.x, r.y + ht, wl, hb};
    if (wr > 0 && hb > 0)
        out[n++] = {r.x + wl, r.y + ht, wr, hb};
    return n;
}

// Side test for a wedge line through perimeter corner points a, b (integer
// cell-corner coordinates). Evaluated in 64-bit integers over doubled cell
// centres, so it is exact: cell (i, j) is on side A iff
//   (bx-ax) * ((2j+1) - 2*ay)  <=  (by-ay) * ((2i+1) - 2*ax).
inline bool wedge_side_a(int ax, int ay, int bx, int by, int i, int j) {
    std::int64_t lhs = static_cast<std::int64_t>(bx - ax) * ((2LL * j + 1) - 2LL * ay);
    std::int64_t rhs = static_cast<std::int64_t>(by - ay) * ((2LL * i + 1) - 2LL * ax);
    return lhs <= rhs;
}

// BSP split line: unit normal at angle (centidegrees), offset c along it.
// Cell (i, j) goes to the first child iff n . centre - c <= 0.
inline std::pair<double, double> bsp_normal(std::uint16_t angle_centideg) {
    double theta = angle_centideg * (3.14159265358979323846 / 18000.0);
    return {std::cos(theta), std::sin(theta)};
}

inline bool bsp_side_a(double nx, double ny, std::int32_t offset, int i, int j) {
    return nx * (i + 0.5) + ny * (j + 0.5) - offset <= 0.0;
}

// ---------------------------------------------------------------------------
// Pointy-top hexagonal lattice, axial coordinates.
//   centre(q, r) = (edge * sqrt(3) * (q + r/2), edge * 1.5 * r)
// ---------------------------------------------------------------------------

struct Axial {
    int q = 0, r = 0;

    bool operator==(const Axial&) const = default;
    bool operator<(const Axial& o) const { return q != o.q ? q < o.q : r < o.r; }
};

inline std::pair<double, double> hex_centre(Axial a, double edge) {
    constexpr double sqrt3 = 1.7320508075688772;
    return {edge * sqrt3 * (a.q + a.r * 0.5), edge * 1.5 * a.r};
}

// Hex containing the point = nearest centre, via fractional axial coordinates
// and cube rounding.
inline Axial hex_round(double x, double y, double edge) {
    constexpr double sqrt3_over_3 = 0.5773502691896258;
    double qf = (sqrt3_over_3 * x - y / 3.0) / edge;
    double rf = (2.0 / 3.0 * y) / edge;
    double sf = -qf - rf;
    double rq = std::round(qf), rr = std::round(rf), rs = std::round(sf);
    double dq = std::abs(rq - qf), dr = std::abs(rr - rf), ds = std::abs(rs - sf);
    if (dq > dr && dq > ds)
        rq = -rr - rs;
    else if (dr > ds)
        rr = -rq - rs;
    return {static_cast<int>(rq), static_cast<int>(rr)};
}

// Parent in the next-coarser lattice (edge doubled): the hexagon whose centre
// is nearest to this cell's centre. Exact nesting does not exist for
// hexagons, so the hierarchy is defined by this assignment.
inline Axial hex_parent(Axial child, double child_edge) {
    auto [cx, cy] = hex_centre(child, child_edge);
    return hex_round(cx, cy, child_edge * 2.0);
}

} // namespace krigrid
