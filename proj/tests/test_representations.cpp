#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "core/partition_geometry.hpp"
#include "core/representation.hpp"
#include "test_support.hpp"

using namespace krigrid;

namespace {

// Independent axial rounding for the hexmap oracle: classic cube rounding,
// written out from the lattice definition rather than reusing hex_round().
Axial oracle_hex_round(double x, double y, double edge) {
    const double sqrt3 = std::sqrt(3.0);
    double qf = (sqrt3 / 3.0 * x - y / 3.0) / edge;
    double rf = (2.0 / 3.0 * y) / edge;
    double cx = qf, cz = rf, cy = -cx - cz;
    double rx = std::round(cx), ry = std::round(cy), rz = std::round(cz);
    double dx = std::abs(rx - cx), dy = std::abs(ry - cy), dz = std::abs(rz - cz);
    if (dx > dy && dx > dz)
        rx = -ry - rz;
    else if (dy > dz)
        ry = -rx - rz;
    else
        rz = -rx - ry;
    (void)ry;
    return Axial{static_cast<int>(rx), static_cast<int>(rz)};
}

const QuadTreePayload& quad_payload(const DiscreteRepresentation& repr) {
    return std::get<QuadTreePayload>(repr.payload);
}

// Visit every (node, rect) pair of a quadtree/wedgelet payload.
void walk_quad(const QuadTreePayload& tree, int width, int height,
               const std::function<void(const QuadNode&, CellRect)>& visit) {
    std::function<void(std::size_t, CellRect)> rec = [&](std::size_t idx, CellRect rect) {
        const QuadNode& node = tree.nodes[idx];
        visit(node, rect);
        if (node.is_leaf())
            return;
        CellRect kids[4];
        int n = quad_children(rect, kids);
        for (int k = 0; k < n; ++k)
            rec(static_cast<std::size_t>(node.child[static_cast<std::size_t>(k)]), kids[k]);
    };
    rec(0, CellRect{0, 0, width, height});
}

double rect_mean(const ScalarField& field, CellRect r) {
    double sum = 0.0;
    for (int j = r.y; j < r.y + r.h; ++j)
        for (int i = r.x; i < r.x + r.w; ++i)
            sum += field.at(i, j);
    return sum / (static_cast<double>(r.w) * r.h);
}

ScalarField two_tone_diagonal(int n) {
    ScalarField field(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            field.at(i, j) = (i + j < n) ? 0.75 : 0.125;
    return field;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.cell_count(); ++k)
        m = std::max(m, std::abs(a.values[k] - b.values[k]));
    return m;
}

// 4-connected components of equal value; returns labels and component count.
std::pair<std::vector<int>, int> flat_zone_oracle(const ScalarField& field) {
    std::vector<int> label(field.cell_count(), -1);
    int next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < field.cell_count(); ++start) {
        if (label[start] >= 0)
            continue;
        label[start] = next;
        stack.push_back(start);
        while (!stack.empty()) {
            std::size_t k = stack.back();
            stack.pop_back();
            int i = static_cast<int>(k) % field.width, j = static_cast<int>(k) / field.width;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int ni = i + di[d], nj = j + dj[d];
                if (ni < 0 || nj < 0 || ni >= field.width || nj >= field.height)
                    continue;
                std::size_t nk = static_cast<std::size_t>(nj) * field.width + ni;
                if (label[nk] < 0 && field.values[nk] == field.values[k]) {
                    label[nk] = next;
                    stack.push_back(nk);
                }
            }
        }
        ++next;
    }
    return {label, next};
}

std::vector<int> region_pixel_map(const BspRegionPayload& payload, int width, int height) {
    std::vector<int> owner(static_cast<std::size_t>(width) * height, -1);
    for (std::size_t leaf = 0; leaf < payload.leaves.size(); ++leaf)
        for (const auto& run : payload.leaves[leaf].runs)
            for (std::uint32_t c = 0; c < run.len; ++c) {
                std::size_t k = static_cast<std::size_t>(run.row) * width + run.start + c;
                REQUIRE(owner[k] == -1); // exactly-once ownership
                owner[k] = static_cast<int>(leaf);
            }
    for (int o : owner)
        REQUIRE(o >= 0);
    return owner;
}

} // namespace

TEST_CASE("quadtree collapses constant quadrants into four exact leaves") {
    ScalarField field(8, 8);
    const double q[4] = {0.1, 0.4, 0.7, 1.0};
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i)
            field.at(i, j) = q[(j / 4) * 2 + (i / 4)];
    auto repr = build_quadtree(field, 9, 0.0);
    CHECK(repr.kind == ReprKind::quadtree);
    CHECK(repr.leaf_count() == 4);
    CHECK(max_abs_diff(render_repr(repr, 8, 8), field) < 1e-12);
}

TEST_CASE("depth-limited quadtree leaves hold exact block means") {
    ScalarField field = testsupport::noise_field(16, 16, 41);
    auto repr = build_quadtree(field, 2, 0.0);
    std::size_t leaves = 0;
    walk_quad(quad_payload(repr), 16, 16, [&](const QuadNode& node, CellRect rect) {
        if (!node.is_leaf())
            return;
        ++leaves;
        CHECK(rect.w == 4);
        CHECK(rect.h == 4);
        CHECK(node.value == doctest::Approx(rect_mean(field, rect)).epsilon(1e-12));
    });
    CHECK(leaves == 16);
}

TEST_CASE("odd-sized quadtree partitions every cell exactly once") {
    ScalarField field = testsupport::noise_field(7, 5, 2);
    auto repr = build_quadtree(field, 9, 0.0);
    std::vector<int> paint(field.cell_count(), 0);
    walk_quad(quad_payload(repr), 7, 5, [&](const QuadNode& node, CellRect rect) {
        if (!node.is_leaf())
            return;
        for (int j = rect.y; j < rect.y + rect.h; ++j)
            for (int i = rect.x; i < rect.x + rect.w; ++i)
                paint[static_cast<std::size_t>(j) * 7 + i] += 1;
    });
    for (int p : paint)
        CHECK(p == 1);
    // i.i.d. noise never reaches zero variance above single cells
    CHECK(max_abs_diff(render_repr(repr, 7, 5), field) == 0.0);
}

TEST_CASE("a single wedge captures a corner-to-corner two-tone diagonal") {
    ScalarField field = two_tone_diagonal(16);
    auto wedge = build_wedgelet(field, 9, 0.0, 1e-12);
    CHECK(wedge.leaf_count() == 1);
    CHECK(max_abs_diff(render_repr(wedge, 16, 16), field) == 0.0);
    const auto& root = quad_payload(wedge).nodes[0];
    REQUIRE(root.is_leaf());
    CHECK(root.wedge);
    // both tones are reproduced exactly by the side means
    CHECK(((root.value_a == 0.75 && root.value_b == 0.125) ||
           (root.value_a == 0.125 && root.value_b == 0.75)));

    auto quad = build_quadtree(field, 9, 0.0);
    CHECK(quad.leaf_count() > 8 * wedge.leaf_count());
}

TEST_CASE("BSP split finds an axis-aligned two-tone boundary exactly") {
    ScalarField field(16, 16);
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i)
            field.at(i, j) = i < 8 ? 0.2 : 0.9;
    auto repr = build_bsp_lse(field, 9, 0.0, 5, 2, 16);
    CHECK(repr.leaf_count() == 2);
    CHECK(max_abs_diff(render_repr(repr, 16, 16), field) < 1e-12);
    const auto& nodes = std::get<BspLsePayload>(repr.payload).nodes;
    REQUIRE_FALSE(nodes[0].is_leaf());
    // the split really is the vertical line between columns 7 and 8
    auto [nx, ny] = bsp_normal(nodes[0].angle_centideg);
    CHECK(bsp_side_a(nx, ny, nodes[0].offset, 7, 3));
    CHECK_FALSE(bsp_side_a(nx, ny, nodes[0].offset, 8, 3));
}

TEST_CASE("BSP leaves hold pixel-set means and internals violate the stopping rule") {
    ScalarField field = testsupport::blob_field(36, 28, 19);
    const double hom = 2e-4;
    auto repr = build_bsp_lse(field, 7, hom, 5, 2, 16);
    const auto& nodes = std::get<BspLsePayload>(repr.payload).nodes;

    // assign every pixel by walking the stored tree
    std::vector<std::vector<std::size_t>> members(nodes.size());
    for (int j = 0; j < 28; ++j)
        for (int i = 0; i < 36; ++i) {
            std::size_t at = 0;
            int guard = 0;
            while (!nodes[at].is_leaf()) {
                auto [nx, ny] = bsp_normal(nodes[at].angle_centideg);
                at = static_cast<std::size_t>(bsp_side_a(nx, ny, nodes[at].offset, i, j)
                                                  ? nodes[at].child_a
                                                  : nodes[at].child_b);
                REQUIRE(++guard < 64);
            }
            members[at].push_back(static_cast<std::size_t>(j) * 36 + i);
        }

    std::size_t assigned = 0;
    for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
        if (members[idx].empty())
            continue;
        assigned += members[idx].size();
        REQUIRE(nodes[idx].is_leaf());
        double sum = 0.0;
        for (std::size_t k : members[idx])
            sum += field.values[k];
        CHECK(nodes[idx].value ==
              doctest::Approx(sum / members[idx].size()).epsilon(1e-9));
    }
    CHECK(assigned == field.cell_count());

    // internal nodes only exist where the variance threshold was exceeded
    std::function<void(std::size_t, std::vector<std::size_t>)> check_internal =
        [&](std::size_t idx, std::vector<std::size_t> pixels) {
            if (nodes[idx].is_leaf())
                return;
            double sum = 0.0, sq = 0.0;
            for (std::size_t k : pixels) {
                sum += field.values[k];
                sq += field.values[k] * field.values[k];
            }
            double n = static_cast<double>(pixels.size());
            CHECK(sq / n - (sum / n) * (sum / n) > hom);
            auto [nx, ny] = bsp_normal(nodes[idx].angle_centideg);
            std::vector<std::size_t> side_a, side_b;
            for (std::size_t k : pixels) {
                int i = static_cast<int>(k % 36), j = static_cast<int>(k / 36);
                (bsp_side_a(nx, ny, nodes[idx].offset, i, j) ? side_a : side_b).push_back(k);
            }
            check_internal(static_cast<std::size_t>(nodes[idx].child_a), std::move(side_a));
            check_internal(static_cast<std::size_t>(nodes[idx].child_b), std::move(side_b));
        };
    std::vector<std::size_t> all;
    for (std::size_t k = 0; k < field.cell_count(); ++k)
        all.push_back(k);
    check_internal(0, std::move(all));
}

TEST_CASE("unpruned region merge equals the 4-connected flat zones") {
    // few distinct levels so zones are large and plentiful
    ScalarField field(24, 18);
    Xoshiro256pp rng(55);
    for (double& v : field.values)
        v = static_cast<double>(rng.next_below(4)) / 4.0;
    auto repr = build_bsp_region(field, 1, 256);
    const auto& payload = std::get<BspRegionPayload>(repr.payload);
    auto [oracle_label, oracle_count] = flat_zone_oracle(field);
    CHECK(payload.leaves.size() == static_cast<std::size_t>(oracle_count));

    auto owner = region_pixel_map(payload, 24, 18);
    // the two partitions must be identical (up to label names)
    std::map<int, int> fwd;
    for (std::size_t k = 0; k < owner.size(); ++k) {
        auto [it, inserted] = fwd.try_emplace(owner[static_cast<std::size_t>(k)],
                                              oracle_label[k]);
        CHECK(it->second == oracle_label[k]);
    }
    CHECK(fwd.size() == payload.leaves.size());
    for (const auto& leaf : payload.leaves) {
        std::size_t k0 = static_cast<std::size_t>(leaf.runs.front().row) * 24 +
                         leaf.runs.front().start;
        CHECK(leaf.value == doctest::Approx(field.values[k0]).epsilon(1e-12));
        CHECK(leaf.pixel_count >= 1);
    }
}

TEST_CASE("small regions merge into their neighbours under the pixel floor") {
    ScalarField field(8, 8, 0.0);
    field.at(3, 3) = 1.0;
    field.at(4, 3) = 1.0;
    field.at(3, 4) = 1.0;
    auto repr = build_bsp_region(field, 4, 256);
    const auto& payload = std::get<BspRegionPayload>(repr.payload);
    REQUIRE(payload.leaves.size() == 1);
    CHECK(payload.leaves[0].value == doctest::Approx(3.0 / 64.0).epsilon(1e-12));
    CHECK(payload.leaves[0].pixel_count == 64);
}

TEST_CASE("merge altitudes are recorded in non-decreasing order") {
    ScalarField field(40, 30);
    Xoshiro256pp rng(91);
    for (double& v : field.values)
        v = static_cast<double>(rng.next_below(16)) / 16.0;
    auto repr = build_bsp_region(field, 12, 256);
    const auto& alts = std::get<BspRegionPayload>(repr.payload).merge_altitudes;
    REQUIRE_FALSE(alts.empty());
    for (std::size_t i = 1; i < alts.size(); ++i)
        CHECK(alts[i] >= alts[i - 1]);
    for (const auto& leaf : std::get<BspRegionPayload>(repr.payload).leaves)
        CHECK(leaf.pixel_count >= 12);
}

TEST_CASE("base-level hexagons group pixels like independent axial rounding") {
    ScalarField field = testsupport::blob_field(20, 14, 8);
    const double edge = 2.0;
    auto repr = build_hexmap(field, edge, 1, {0.0});
    const auto& payload = std::get<HexMapPayload>(repr.payload);
    CHECK(payload.base_edge == edge);

    std::map<Axial, std::pair<double, std::size_t>> groups;
    for (int j = 0; j < 14; ++j)
        for (int i = 0; i < 20; ++i) {
            Axial cell = oracle_hex_round(i + 0.5, j + 0.5, edge);
            auto& acc = groups[cell];
            acc.first += field.at(i, j);
            acc.second += 1;
        }
    REQUIRE(payload.cells.size() == groups.size());
    std::size_t covered = 0;
    for (const auto& cell : payload.cells) {
        auto it = groups.find(Axial{cell.q, cell.r});
        REQUIRE(it != groups.end());
        CHECK(cell.level == 0);
        CHECK(cell.pixel_count == it->second.second);
        CHECK(cell.value ==
              doctest::Approx(it->second.first / it->second.second).epsilon(1e-12));
        covered += cell.pixel_count;
    }
    CHECK(covered == field.cell_count());
}

TEST_CASE("loose thresholds coarsen the hexagon pyramid but conserve mass") {
    ScalarField field = testsupport::blob_field(48, 40, 77);
    auto fine = build_hexmap(field, 2.0, 1, {0.0});
    auto coarse = build_hexmap(field, 2.0, 3, {0.0, 1e9, 1e9});
    const auto& fine_cells = std::get<HexMapPayload>(fine.payload).cells;
    const auto& coarse_cells = std::get<HexMapPayload>(coarse.payload).cells;
    CHECK(coarse_cells.size() < fine_cells.size());

    std::size_t px = 0;
    double mass = 0.0;
    for (const auto& cell : coarse_cells) {
        px += cell.pixel_count;
        mass += cell.value * static_cast<double>(cell.pixel_count);
        CHECK(cell.level < 3);
    }
    CHECK(px == field.cell_count());
    double field_mass = 0.0;
    for (double v : field.values)
        field_mass += v;
    CHECK(mass == doctest::Approx(field_mass).epsilon(1e-9));
    // rendering paints each pixel from its unique emitted ancestor
    ScalarField img = render_repr(coarse, 48, 40);
    CHECK(img.cell_count() == field.cell_count());
}

TEST_CASE("serialised form is byte-stable and decodes to the same raster") {
    ScalarField field = testsupport::blob_field(40, 28, 15);
    std::vector<DiscreteRepresentation> reprs;
    reprs.push_back(build_quadtree(field, 6, 1e-4));
    reprs.push_back(build_wedgelet(field, 6, 1e-4, 1e-4));
    reprs.push_back(build_bsp_lse(field, 6, 1e-4, 15, 2, 8));
    reprs.push_back(build_bsp_region(field, 6, 64));
    reprs.push_back(build_hexmap(field, 2.0, 2, {0.0, 5e-4}));

    testsupport::TempDir tmp("krigrid_repr");
    for (const auto& repr : reprs) {
        auto bytes = serialize_repr(repr);
        DiscreteRepresentation back = deserialize_repr(bytes);
        CHECK(back.kind == repr.kind);
        CHECK(back.width == repr.width);
        CHECK(back.height == repr.height);
        CHECK(back.leaf_count() == repr.leaf_count());
        CHECK(serialize_repr(back) == bytes);
        // leaf values travel as f32
        CHECK(max_abs_diff(render_repr(back, 40, 28), render_repr(repr, 40, 28)) < 1e-6);

        auto path = tmp.file(std::string(to_string(repr.kind)) + ".gpdr");
        write_repr_file(repr, path);
        CHECK(serialize_repr(read_repr_file(path)) == bytes);
    }
}

TEST_CASE("the encoding pins a 19-byte single-leaf quadtree") {
    ScalarField field(32, 32, 0.5);
    auto repr = build_quadtree(field);
    CHECK(repr.leaf_count() == 1);
    auto bytes = serialize_repr(repr);
    CHECK(bytes.size() == 19); // magic+version+kind+dims, one leaf flag, one f32
    CHECK(bytes.size() < 64);
}

TEST_CASE("malformed representation bytes are rejected") {
    ScalarField field = testsupport::blob_field(16, 12, 4);
    auto bytes = serialize_repr(build_quadtree(field, 4, 1e-3));

    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(deserialize_repr(corrupt), Error);

    corrupt = bytes;
    corrupt[4] = 2; // unsupported version
    CHECK_THROWS_AS(deserialize_repr(corrupt), Error);

    corrupt = bytes;
    corrupt[5] = 9; // unknown kind tag
    CHECK_THROWS_AS(deserialize_repr(corrupt), Error);

    for (std::size_t cut : {std::size_t{3}, std::size_t{13}, bytes.size() - 1})
        CHECK_THROWS_AS(deserialize_repr(bytes.data(), cut), Error);

    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_AS(deserialize_repr(padded), Error);

    // a 1x1 quadtree whose root claims to be internal cannot be decoded
    std::vector<std::uint8_t> tiny = {'G', 'P', 'D', 'R', 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0};
    CHECK_THROWS_AS(deserialize_repr(tiny), Error);
}

TEST_CASE("builder argument validation") {
    ScalarField field = testsupport::blob_field(10, 10, 1);
    CHECK_THROWS_AS(build_bsp_region(field, 0, 256), Error);
    CHECK_THROWS_AS(build_bsp_region(field, 4, 1), Error);
    CHECK_THROWS_AS(build_hexmap(field, 0.0, 1, {0.0}), Error);
    CHECK_THROWS_AS(build_hexmap(field, 2.0, 2, {0.0}), Error); // threshold count mismatch
    CHECK_THROWS_AS(build_quadtree(field, -1, 0.0), Error);
    CHECK_THROWS_AS(render_repr(build_quadtree(field), 11, 10), Error);
}

TEST_CASE("representation kind names round-trip") {
    for (auto kind : {ReprKind::quadtree, ReprKind::wedgelet, ReprKind::bsp_lse,
                      ReprKind::bsp_region, ReprKind::hexmap})
        CHECK(repr_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(repr_kind_from_string("octree"), Error);
}
