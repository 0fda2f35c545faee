#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "types.hpp"

namespace krigrid {

struct RegionStats {
    double mean = 0.0;
    double variance = 0.0; // population variance
    std::size_t count = 0;
};

// Mean/variance over explicit row-major cell indices.
RegionStats region_stats(const ScalarField& field, const std::vector<std::uint32_t>& cells);

// Mean/variance over an axis-aligned cell rectangle.
RegionStats region_stats_rect(const ScalarField& field, int x, int y, int w, int h);

// Mean/variance over cells whose centres lie inside the polygon (even-odd
// crossing rule with half-open edge intervals, so every boundary cell has a
// deterministic owner).
RegionStats region_stats_polygon(const ScalarField& field,
                                 const std::vector<std::pair<double, double>>& polygon);

bool point_in_polygon(const std::vector<std::pair<double, double>>& polygon, double px,
                      double py);

} // namespace krigrid
