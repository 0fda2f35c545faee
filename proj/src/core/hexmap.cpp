#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "error.hpp"
#include "hex_hierarchy.hpp"
#include "representation.hpp"

namespace krigrid {

DiscreteRepresentation build_hexmap(const ScalarField& field, double base_edge, int levels,
                                    const std::vector<double>& error_thresholds) {
    require(base_edge > 0.0, ErrorCode::invalid_argument, "base_edge must be positive");
    require(levels >= 1 && levels <= 24, ErrorCode::invalid_argument,
            "levels must be in 1..24");
    require(error_thresholds.size() == static_cast<std::size_t>(levels),
            ErrorCode::invalid_argument, "need one error threshold per level");

    auto t0 = std::chrono::steady_clock::now();
    const int w = field.width, h = field.height;
    HexHierarchy hier = hex_hierarchy(w, h, base_edge, levels);

    // Level 0: bin pixel centres into hexes of the base edge length.
    std::vector<std::vector<HexCell>> cells(static_cast<std::size_t>(levels));
    {
        const auto& base = hier.cells[0];
        std::vector<double> sums(base.size(), 0.0);
        std::vector<std::uint64_t> counts(base.size(), 0);
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                Axial a = hex_round(i + 0.5, j + 0.5, base_edge);
                auto it = std::lower_bound(base.begin(), base.end(), a);
                std::size_t c = static_cast<std::size_t>(it - base.begin());
                sums[c] += field.at(i, j);
                counts[c] += 1;
            }
        cells[0].reserve(base.size());
        for (std::size_t c = 0; c < base.size(); ++c)
            cells[0].push_back({0, base[c].q, base[c].r,
                                sums[c] / static_cast<double>(counts[c]), 0.0, counts[c]});
    }

    // Coarser levels: pixel-count-weighted mean of the child cells; the stored
    // error is the weighted mean squared deviation of child values from it.
    for (int lvl = 1; lvl < levels; ++lvl) {
        const auto& axials = hier.cells[static_cast<std::size_t>(lvl)];
        const auto& groups = hier.children[static_cast<std::size_t>(lvl)];
        const auto& below = cells[static_cast<std::size_t>(lvl - 1)];
        cells[static_cast<std::size_t>(lvl)].reserve(axials.size());
        for (std::size_t g = 0; g < axials.size(); ++g) {
            double sum = 0.0;
            std::uint64_t n = 0;
            for (std::size_t c : groups[g]) {
                sum += below[c].value * static_cast<double>(below[c].pixel_count);
                n += below[c].pixel_count;
            }
            double value = sum / static_cast<double>(n);
            double mse = 0.0;
            for (std::size_t c : groups[g]) {
                double d = below[c].value - value;
                mse += d * d * static_cast<double>(below[c].pixel_count);
            }
            cells[static_cast<std::size_t>(lvl)].push_back(
                {static_cast<std::uint8_t>(lvl), axials[g].q, axials[g].r, value,
                 mse / static_cast<double>(n), n});
        }
    }

    // Top-down selection: keep a cell when its error is within the level's
    // threshold, otherwise descend. Base cells always emit (threshold unused).
    HexMapPayload payload;
    payload.base_edge = base_edge;
    payload.levels = levels;
    auto emit = [&](auto&& self, int lvl, std::size_t idx) -> void {
        const HexCell& c = cells[static_cast<std::size_t>(lvl)][idx];
        if (lvl == 0 || c.mse <= error_thresholds[static_cast<std::size_t>(lvl)]) {
            payload.cells.push_back(c);
            return;
        }
        for (std::size_t ch : hier.children[static_cast<std::size_t>(lvl)][idx])
            self(self, lvl - 1, ch);
    };
    for (std::size_t i = 0; i < hier.cells[static_cast<std::size_t>(levels - 1)].size(); ++i)
        emit(emit, levels - 1, i);

    auto t1 = std::chrono::steady_clock::now();
    DiscreteRepresentation repr;
    repr.kind = ReprKind::hexmap;
    repr.width = w;
    repr.height = h;
    repr.build_time = std::chrono::duration<double>(t1 - t0).count();
    repr.payload = std::move(payload);
    return repr;
}

} // namespace krigrid
