#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "types.hpp"

namespace krigrid {

enum class ReprKind : std::uint8_t {
    quadtree = 0,
    wedgelet = 1,
    bsp_lse = 2,
    bsp_region = 3,
    hexmap = 4,
};

const char* to_string(ReprKind kind);
ReprKind repr_kind_from_string(const std::string& name);

// --- quadtree / wedgelet ----------------------------------------------------
// Node bounds are implicit: the root covers the full field and children follow
// the quad_children() split rule, so only the topology is stored.
struct QuadNode {
    std::array<std::int32_t, 4> child{{-1, -1, -1, -1}}; // quad_children order
    double value = 0.0;                                  // plain leaf mean
    bool wedge = false;
    std::uint16_t ax = 0, ay = 0, bx = 0, by = 0; // wedge line, corner coords
    double value_a = 0.0, value_b = 0.0;          // means on the two sides

    bool is_leaf() const { return child[0] < 0; } // TL child always exists
};

struct QuadTreePayload {
    std::vector<QuadNode> nodes; // nodes[0] is the root
};

// --- BSP least-squared-error ------------------------------------------------
struct BspNode {
    std::int32_t child_a = -1, child_b = -1; // bsp_side_a true -> child_a
    std::uint16_t angle_centideg = 0;
    std::int32_t offset = 0;
    double value = 0.0; // leaf mean

    bool is_leaf() const { return child_a < 0; }
};

struct BspLsePayload {
    std::vector<BspNode> nodes; // nodes[0] is the root
};

// --- BSP region merge tree (leaf regions after pruning) ----------------------
struct RegionRun {
    std::uint32_t row = 0, start = 0, len = 0;
};

struct RegionLeaf {
    double value = 0.0;
    std::vector<RegionRun> runs; // row-major, non-overlapping
    std::size_t pixel_count = 0;
};

struct BspRegionPayload {
    std::vector<RegionLeaf> leaves;
    std::vector<double> merge_altitudes; // non-decreasing by construction
};

// --- hexagonal multi-resolution map ------------------------------------------
struct HexCell {
    std::uint8_t level = 0; // 0 = base resolution, edge doubles per level
    std::int32_t q = 0, r = 0;
    double value = 0.0;
    double mse = 0.0; // spread of immediate-child values (build-side only)
    std::size_t pixel_count = 0;
};

struct HexMapPayload {
    double base_edge = 0.0;
    int levels = 1; // hierarchy depth the map was built with
    std::vector<HexCell> cells;
};

// --- tagged representation ----------------------------------------------------
struct DiscreteRepresentation {
    ReprKind kind = ReprKind::quadtree;
    int width = 0, height = 0;
    double build_time = 0.0; // seconds, wall clock around the builder
    std::variant<QuadTreePayload, BspLsePayload, BspRegionPayload, HexMapPayload> payload;

    std::size_t leaf_count() const;
};

// Builders. Shared defaults: recursion stops at depth 9 or when the region
// variance drops to 2e-4 or below.
DiscreteRepresentation build_quadtree(const ScalarField& field, int max_depth = 9,
                                      double hom_thresh = 2e-4);
DiscreteRepresentation build_wedgelet(const ScalarField& field, int max_depth = 9,
                                      double hom_thresh = 2e-4, double line_thresh = 2e-4);
DiscreteRepresentation build_bsp_lse(const ScalarField& field, int max_depth = 9,
                                     double hom_thresh = 2e-4, int angle_step_deg = 5,
                                     int offset_step = 2, int prune_keep = 16);
DiscreteRepresentation build_bsp_region(const ScalarField& field, int min_region_px = 10,
                                        int quantisation = 256);
DiscreteRepresentation build_hexmap(const ScalarField& field, double base_edge,
                                    int levels, const std::vector<double>& error_thresholds);

// Rasterise: each output cell takes the value of the unique leaf that owns its
// centre. Dimensions must equal the source field's.
ScalarField render_repr(const DiscreteRepresentation& repr, int width, int height);

// Deterministic binary encoding (`GPDR`, little-endian). Leaf values are f32.
std::vector<std::uint8_t> serialize_repr(const DiscreteRepresentation& repr);
DiscreteRepresentation deserialize_repr(const std::uint8_t* bytes, std::size_t size);
DiscreteRepresentation deserialize_repr(const std::vector<std::uint8_t>& bytes);

void write_repr_file(const DiscreteRepresentation& repr, const std::string& path);
DiscreteRepresentation read_repr_file(const std::string& path);

} // namespace krigrid
