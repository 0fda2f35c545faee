#include "region_stats.hpp"

#include <algorithm>

#include "error.hpp"

namespace krigrid {
namespace {

// Two-pass mean/variance; min == max short-circuits to variance 0 so constant
// regions are recognised exactly (an e-16 residual would defeat threshold 0).
template <typename ForEach>
RegionStats accumulate_stats(ForEach&& for_each_value) {
    double sum = 0.0;
    double vmin = 0.0, vmax = 0.0;
    std::size_t n = 0;
    for_each_value([&](double v) {
        if (n == 0) {
            vmin = vmax = v;
        } else {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
        sum += v;
        ++n;
    });
    require(n > 0, ErrorCode::invalid_argument, "region is empty");

    RegionStats stats;
    stats.count = n;
    stats.mean = sum / static_cast<double>(n);
    if (vmin == vmax)
        return stats; // variance exactly 0
    double acc = 0.0;
    for_each_value([&](double v) {
        double d = v - stats.mean;
        acc += d * d;
    });
    stats.variance = acc / static_cast<double>(n);
    return stats;
}

} // namespace

RegionStats region_stats(const ScalarField& field, const std::vector<std::uint32_t>& cells) {
    for (auto c : cells)
        require(c < field.cell_count(), ErrorCode::invalid_argument,
                "region cell index out of range");
    return accumulate_stats([&](auto&& visit) {
        for (auto c : cells)
            visit(field.values[c]);
    });
}

RegionStats region_stats_rect(const ScalarField& field, int x, int y, int w, int h) {
    require(x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= field.width &&
                y + h <= field.height,
            ErrorCode::invalid_argument, "rectangle outside field");
    return accumulate_stats([&](auto&& visit) {
        for (int j = y; j < y + h; ++j)
            for (int i = x; i < x + w; ++i)
                visit(field.at(i, j));
    });
}

bool point_in_polygon(const std::vector<std::pair<double, double>>& polygon, double px,
                      double py) {
    bool inside = false;
    std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& [xi, yi] = polygon[i];
        const auto& [xj, yj] = polygon[j];
        if ((yi <= py) != (yj <= py)) {
            double t = xi + (py - yi) * (xj - xi) / (yj - yi);
            if (px < t)
                inside = !inside;
        }
    }
    return inside;
}

RegionStats region_stats_polygon(const ScalarField& field,
                                 const std::vector<std::pair<double, double>>& polygon) {
    require(polygon.size() >= 3, ErrorCode::invalid_argument,
            "polygon needs at least 3 vertices");
    return accumulate_stats([&](auto&& visit) {
        for (int j = 0; j < field.height; ++j)
            for (int i = 0; i < field.width; ++i)
                if (point_in_polygon(polygon, i + 0.5, j + 0.5))
                    visit(field.at(i, j));
    });
}

} // namespace krigrid
