#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "partition_geometry.hpp"

namespace krigrid {

// The multi-resolution hexagonal hierarchy over a raster is fully determined
// by the raster extent, the base edge length, and the level count: level 0
// holds every hexagon that owns at least one pixel centre, and each coarser
// level groups the cells below it through hex_parent with the edge doubling
// per level. The builder and the binary codec both derive the hierarchy from
// this one function, so a serialised map can rebuild the exact cell set from
// the raster dimensions alone.
struct HexHierarchy {
    // cells[lvl] is sorted by Axial::operator<; children[lvl][i] holds indices
    // into cells[lvl-1] (empty at level 0), also in sorted order.
    std::vector<std::vector<Axial>> cells;
    std::vector<std::vector<std::vector<std::size_t>>> children;
};

inline HexHierarchy hex_hierarchy(int width, int height, double base_edge, int levels) {
    HexHierarchy hier;
    hier.cells.resize(static_cast<std::size_t>(levels));
    hier.children.resize(static_cast<std::size_t>(levels));

    std::map<Axial, char> base;
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i)
            base.emplace(hex_round(i + 0.5, j + 0.5, base_edge), 0);
    hier.cells[0].reserve(base.size());
    for (const auto& [a, unused] : base)
        hier.cells[0].push_back(a);
    hier.children[0].assign(hier.cells[0].size(), {});

    for (int lvl = 1; lvl < levels; ++lvl) {
        double child_edge = base_edge * static_cast<double>(1 << (lvl - 1));
        std::map<Axial, std::vector<std::size_t>> groups;
        auto& below = hier.cells[static_cast<std::size_t>(lvl - 1)];
        for (std::size_t c = 0; c < below.size(); ++c)
            groups[hex_parent(below[c], child_edge)].push_back(c);
        auto& cells = hier.cells[static_cast<std::size_t>(lvl)];
        auto& children = hier.children[static_cast<std::size_t>(lvl)];
        cells.reserve(groups.size());
        children.reserve(groups.size());
        for (auto& [a, kids] : groups) {
            cells.push_back(a);
            children.push_back(std::move(kids));
        }
    }
    return hier;
}

} // namespace krigrid
