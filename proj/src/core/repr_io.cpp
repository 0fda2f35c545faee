#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <tuple>

#include "error.hpp"
#include "hex_hierarchy.hpp"
#include "partition_geometry.hpp"
#include "representation.hpp"

namespace krigrid {
namespace {

constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint8_t kFlagInternal = 0;
constexpr std::uint8_t kFlagLeaf = 1;
constexpr std::uint8_t kFlagWedge = 2;

// --- little-endian byte writer/reader ----------------------------------------

struct ByteWriter {
    std::vector<std::uint8_t> out;

    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int s = 0; s < 32; s += 8)
            out.push_back(static_cast<std::uint8_t>(v >> s));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(double v) {
        float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        u32(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int s = 0; s < 64; s += 8)
            out.push_back(static_cast<std::uint8_t>(bits >> s));
    }
};

struct ByteReader {
    const std::uint8_t* p;
    std::size_t left;

    void need(std::size_t n) {
        require(left >= n, ErrorCode::bad_format, "truncated representation data");
    }
    std::uint8_t u8() {
        need(1);
        --left;
        return *p++;
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        left -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int s = 0; s < 4; ++s)
            v |= static_cast<std::uint32_t>(p[s]) << (8 * s);
        p += 4;
        left -= 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f32() {
        std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return static_cast<double>(f);
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int s = 0; s < 8; ++s)
            bits |= static_cast<std::uint64_t>(p[s]) << (8 * s);
        p += 8;
        left -= 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

// --- quadtree / wedgelet ------------------------------------------------------

void encode_quad(ByteWriter& w, const QuadTreePayload& t, std::int32_t idx, CellRect rect) {
    const QuadNode& node = t.nodes[static_cast<std::size_t>(idx)];
    if (!node.is_leaf()) {
        w.u8(kFlagInternal);
        CellRect kids[4];
        int nk = quad_children(rect, kids);
        for (int c = 0; c < nk; ++c) {
            require(node.child[static_cast<std::size_t>(c)] >= 0, ErrorCode::invalid_argument,
                    "quadtree node is missing a child");
            encode_quad(w, t, node.child[static_cast<std::size_t>(c)], kids[c]);
        }
    } else if (node.wedge) {
        w.u8(kFlagWedge);
        w.u16(node.ax);
        w.u16(node.ay);
        w.u16(node.bx);
        w.u16(node.by);
        w.f32(node.value_a);
        w.f32(node.value_b);
    } else {
        w.u8(kFlagLeaf);
        w.f32(node.value);
    }
}

std::int32_t decode_quad(ByteReader& r, QuadTreePayload& t, CellRect rect, bool wedges) {
    std::int32_t idx = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    std::uint8_t flag = r.u8();
    switch (flag) {
    case kFlagInternal: {
        require(rect.w > 1 || rect.h > 1, ErrorCode::bad_format,
                "single-cell quadtree node marked internal");
        CellRect kids[4];
        int nk = quad_children(rect, kids);
        for (int c = 0; c < nk; ++c) {
            std::int32_t ci = decode_quad(r, t, kids[c], wedges);
            t.nodes[static_cast<std::size_t>(idx)].child[static_cast<std::size_t>(c)] = ci;
        }
        break;
    }
    case kFlagWedge: {
        require(wedges, ErrorCode::bad_format, "wedge node in a plain quadtree");
        QuadNode& node = t.nodes[static_cast<std::size_t>(idx)];
        node.wedge = true;
        node.ax = r.u16();
        node.ay = r.u16();
        node.bx = r.u16();
        node.by = r.u16();
        node.value_a = r.f32();
        node.value_b = r.f32();
        break;
    }
    case kFlagLeaf:
        t.nodes[static_cast<std::size_t>(idx)].value = r.f32();
        break;
    default:
        fail(ErrorCode::bad_format, "unknown quadtree node flag");
    }
    return idx;
}

void render_quad(const QuadTreePayload& t, std::int32_t idx, CellRect rect, ScalarField& out) {
    const QuadNode& node = t.nodes[static_cast<std::size_t>(idx)];
    if (!node.is_leaf()) {
        CellRect kids[4];
        int nk = quad_children(rect, kids);
        for (int c = 0; c < nk; ++c) {
            require(node.child[static_cast<std::size_t>(c)] >= 0, ErrorCode::invalid_argument,
                    "quadtree node is missing a child");
            render_quad(t, node.child[static_cast<std::size_t>(c)], kids[c], out);
        }
        return;
    }
    for (int j = rect.y; j < rect.y + rect.h; ++j)
        for (int i = rect.x; i < rect.x + rect.w; ++i)
            out.at(i, j) = node.wedge
                               ? (wedge_side_a(node.ax, node.ay, node.bx, node.by, i, j)
                                      ? node.value_a
                                      : node.value_b)
                               : node.value;
}

// --- BSP least-squared-error ----------------------------------------------------

void encode_bsp(ByteWriter& w, const BspLsePayload& t, std::int32_t idx) {
    const BspNode& node = t.nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf()) {
        w.u8(kFlagLeaf);
        w.f32(node.value);
        return;
    }
    require(node.child_b >= 0, ErrorCode::invalid_argument, "split node is missing a child");
    w.u8(kFlagInternal);
    w.u16(node.angle_centideg);
    w.i32(node.offset);
    encode_bsp(w, t, node.child_a);
    encode_bsp(w, t, node.child_b);
}

std::int32_t decode_bsp(ByteReader& r, BspLsePayload& t, int depth) {
    require(depth <= 4096, ErrorCode::bad_format, "split tree too deep");
    std::int32_t idx = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    std::uint8_t flag = r.u8();
    if (flag == kFlagLeaf) {
        t.nodes[static_cast<std::size_t>(idx)].value = r.f32();
        return idx;
    }
    require(flag == kFlagInternal, ErrorCode::bad_format, "unknown split node flag");
    std::uint16_t angle = r.u16();
    require(angle < 18000, ErrorCode::bad_format, "split angle out of range");
    std::int32_t offset = r.i32();
    std::int32_t a = decode_bsp(r, t, depth + 1);
    std::int32_t b = decode_bsp(r, t, depth + 1);
    BspNode& node = t.nodes[static_cast<std::size_t>(idx)];
    node.angle_centideg = angle;
    node.offset = offset;
    node.child_a = a;
    node.child_b = b;
    return idx;
}

void render_bsp(const BspLsePayload& t, ScalarField& out) {
    std::vector<std::pair<double, double>> normals(t.nodes.size());
    for (std::size_t n = 0; n < t.nodes.size(); ++n)
        if (!t.nodes[n].is_leaf())
            normals[n] = bsp_normal(t.nodes[n].angle_centideg);
    for (int j = 0; j < out.height; ++j)
        for (int i = 0; i < out.width; ++i) {
            std::size_t n = 0;
            while (!t.nodes[n].is_leaf()) {
                const BspNode& node = t.nodes[n];
                n = static_cast<std::size_t>(
                    bsp_side_a(normals[n].first, normals[n].second, node.offset, i, j)
                        ? node.child_a
                        : node.child_b);
            }
            out.at(i, j) = t.nodes[n].value;
        }
}

// --- region leaves -------------------------------------------------------------

void render_region(const BspRegionPayload& t, ScalarField& out) {
    for (const RegionLeaf& leaf : t.leaves)
        for (const RegionRun& run : leaf.runs) {
            double* row = out.values.data() + static_cast<std::size_t>(run.row) * out.width;
            for (std::uint32_t i = 0; i < run.len; ++i)
                row[run.start + i] = leaf.value;
        }
}

// --- hexagonal map ---------------------------------------------------------------
// The emitted cells form a cut through the hierarchy that hex_hierarchy()
// derives from the raster extent alone, so the encoding stores only one
// keep/descend bit per visited cell above the base level plus the kept
// values: base cells on the walk are kept by definition and carry no bit.

constexpr int kMaxHexLevels = 24;

void encode_hex(ByteWriter& w, const HexMapPayload& t, int width, int height) {
    require(t.levels >= 1 && t.levels <= kMaxHexLevels, ErrorCode::invalid_argument,
            "hexagon level count out of range");
    w.f64(t.base_edge);
    w.u8(static_cast<std::uint8_t>(t.levels));

    std::map<std::tuple<int, int, int>, double> kept;
    for (const HexCell& c : t.cells)
        kept[{c.level, c.q, c.r}] = c.value;
    require(kept.size() == t.cells.size(), ErrorCode::invalid_argument,
            "duplicate hexagon cell");

    HexHierarchy hier = hex_hierarchy(width, height, t.base_edge, t.levels);
    std::vector<std::uint8_t> bits;
    std::uint32_t n_bits = 0;
    std::vector<double> values;
    auto push_bit = [&](bool b) {
        if (n_bits % 8 == 0)
            bits.push_back(0);
        if (b)
            bits[n_bits / 8] |= static_cast<std::uint8_t>(1u << (n_bits % 8));
        ++n_bits;
    };
    auto walk = [&](auto&& self, int lvl, std::size_t idx) -> void {
        Axial a = hier.cells[static_cast<std::size_t>(lvl)][idx];
        auto it = kept.find({lvl, a.q, a.r});
        bool keep = it != kept.end();
        if (lvl > 0)
            push_bit(keep);
        else
            require(keep, ErrorCode::invalid_argument, "hexagon map does not cover the raster");
        if (keep) {
            values.push_back(it->second);
            kept.erase(it);
            return;
        }
        for (std::size_t ch : hier.children[static_cast<std::size_t>(lvl)][idx])
            self(self, lvl - 1, ch);
    };
    for (std::size_t i = 0; i < hier.cells[static_cast<std::size_t>(t.levels - 1)].size(); ++i)
        walk(walk, t.levels - 1, i);
    require(kept.empty(), ErrorCode::invalid_argument,
            "hexagon cell outside the derived hierarchy");

    w.u32(n_bits);
    for (std::uint8_t b : bits)
        w.u8(b);
    w.u32(static_cast<std::uint32_t>(values.size()));
    for (double v : values)
        w.f32(v);
}

HexMapPayload decode_hex(ByteReader& r, int width, int height) {
    HexMapPayload t;
    t.base_edge = r.f64();
    require(std::isfinite(t.base_edge) && t.base_edge > 0.0, ErrorCode::bad_format,
            "bad hexagon edge length");
    t.levels = r.u8();
    require(t.levels >= 1 && t.levels <= kMaxHexLevels, ErrorCode::bad_format,
            "hexagon level count out of range");

    std::uint32_t n_bits = r.u32();
    std::vector<std::uint8_t> bits((n_bits + 7) / 8);
    for (auto& b : bits)
        b = r.u8();
    std::uint32_t n_values = r.u32();
    std::vector<double> values(n_values);
    for (auto& v : values)
        v = r.f32();

    HexHierarchy hier = hex_hierarchy(width, height, t.base_edge, t.levels);
    std::uint32_t bit_pos = 0, value_pos = 0;
    auto take_bit = [&]() -> bool {
        require(bit_pos < n_bits, ErrorCode::bad_format, "hexagon walk bits exhausted");
        bool b = (bits[bit_pos / 8] >> (bit_pos % 8)) & 1u;
        ++bit_pos;
        return b;
    };
    auto walk = [&](auto&& self, int lvl, std::size_t idx) -> void {
        if (lvl > 0 && !take_bit()) {
            for (std::size_t ch : hier.children[static_cast<std::size_t>(lvl)][idx])
                self(self, lvl - 1, ch);
            return;
        }
        Axial a = hier.cells[static_cast<std::size_t>(lvl)][idx];
        require(value_pos < n_values, ErrorCode::bad_format, "hexagon values exhausted");
        t.cells.push_back({static_cast<std::uint8_t>(lvl), a.q, a.r, values[value_pos++], 0.0, 0});
    };
    for (std::size_t i = 0; i < hier.cells[static_cast<std::size_t>(t.levels - 1)].size(); ++i)
        walk(walk, t.levels - 1, i);
    require(bit_pos == n_bits, ErrorCode::bad_format, "trailing hexagon walk bits");
    require(value_pos == n_values, ErrorCode::bad_format, "trailing hexagon values");
    return t;
}

void render_hex(const HexMapPayload& t, ScalarField& out) {
    std::map<std::tuple<int, int, int>, double> cell_value;
    int max_level = 0;
    for (const HexCell& c : t.cells) {
        cell_value[{c.level, c.q, c.r}] = c.value;
        max_level = std::max(max_level, static_cast<int>(c.level));
    }
    for (int j = 0; j < out.height; ++j)
        for (int i = 0; i < out.width; ++i) {
            Axial a = hex_round(i + 0.5, j + 0.5, t.base_edge);
            double edge = t.base_edge;
            int lvl = 0;
            for (;;) {
                auto it = cell_value.find({lvl, a.q, a.r});
                if (it != cell_value.end()) {
                    out.at(i, j) = it->second;
                    break;
                }
                require(lvl < max_level, ErrorCode::decode_failure,
                        "hexagon map does not cover the raster");
                a = hex_parent(a, edge);
                edge *= 2.0;
                ++lvl;
            }
        }
}

} // namespace

// --- names ---------------------------------------------------------------------

const char* to_string(ReprKind kind) {
    switch (kind) {
    case ReprKind::quadtree:
        return "quadtree";
    case ReprKind::wedgelet:
        return "wedgelet";
    case ReprKind::bsp_lse:
        return "bsp_lse";
    case ReprKind::bsp_region:
        return "bsp_region";
    case ReprKind::hexmap:
        return "hexmap";
    }
    fail(ErrorCode::invalid_argument, "unknown representation kind");
}

ReprKind repr_kind_from_string(const std::string& name) {
    if (name == "quadtree")
        return ReprKind::quadtree;
    if (name == "wedgelet")
        return ReprKind::wedgelet;
    if (name == "bsp_lse")
        return ReprKind::bsp_lse;
    if (name == "bsp_region")
        return ReprKind::bsp_region;
    if (name == "hexmap")
        return ReprKind::hexmap;
    fail(ErrorCode::invalid_argument, "unknown representation kind: " + name);
}

// --- leaf count -------------------------------------------------------------------

std::size_t DiscreteRepresentation::leaf_count() const {
    struct Visitor {
        std::size_t operator()(const QuadTreePayload& t) const {
            std::size_t n = 0;
            for (const QuadNode& node : t.nodes)
                n += node.is_leaf() ? 1 : 0;
            return n;
        }
        std::size_t operator()(const BspLsePayload& t) const {
            std::size_t n = 0;
            for (const BspNode& node : t.nodes)
                n += node.is_leaf() ? 1 : 0;
            return n;
        }
        std::size_t operator()(const BspRegionPayload& t) const { return t.leaves.size(); }
        std::size_t operator()(const HexMapPayload& t) const { return t.cells.size(); }
    };
    return std::visit(Visitor{}, payload);
}

// --- render -------------------------------------------------------------------------

ScalarField render_repr(const DiscreteRepresentation& repr, int width, int height) {
    require(width == repr.width && height == repr.height, ErrorCode::invalid_argument,
            "render dimensions must match the representation");
    ScalarField out(width, height, 0.0);
    if (const auto* quad = std::get_if<QuadTreePayload>(&repr.payload)) {
        require(!quad->nodes.empty(), ErrorCode::invalid_argument, "empty quadtree");
        render_quad(*quad, 0, {0, 0, width, height}, out);
    } else if (const auto* bsp = std::get_if<BspLsePayload>(&repr.payload)) {
        require(!bsp->nodes.empty(), ErrorCode::invalid_argument, "empty split tree");
        render_bsp(*bsp, out);
    } else if (const auto* region = std::get_if<BspRegionPayload>(&repr.payload)) {
        render_region(*region, out);
    } else {
        render_hex(std::get<HexMapPayload>(repr.payload), out);
    }
    return out;
}

// --- binary encoding ------------------------------------------------------------------

std::vector<std::uint8_t> serialize_repr(const DiscreteRepresentation& repr) {
    require(repr.width >= 1 && repr.height >= 1, ErrorCode::invalid_argument,
            "representation has no extent");
    ByteWriter w;
    w.u8('G');
    w.u8('P');
    w.u8('D');
    w.u8('R');
    w.u8(kFormatVersion);
    w.u8(static_cast<std::uint8_t>(repr.kind));
    w.u32(static_cast<std::uint32_t>(repr.width));
    w.u32(static_cast<std::uint32_t>(repr.height));

    if (const auto* quad = std::get_if<QuadTreePayload>(&repr.payload)) {
        require(!quad->nodes.empty(), ErrorCode::invalid_argument, "empty quadtree");
        encode_quad(w, *quad, 0, {0, 0, repr.width, repr.height});
    } else if (const auto* bsp = std::get_if<BspLsePayload>(&repr.payload)) {
        require(!bsp->nodes.empty(), ErrorCode::invalid_argument, "empty split tree");
        encode_bsp(w, *bsp, 0);
    } else if (const auto* region = std::get_if<BspRegionPayload>(&repr.payload)) {
        w.u32(static_cast<std::uint32_t>(region->leaves.size()));
        for (const RegionLeaf& leaf : region->leaves) {
            w.f32(leaf.value);
            w.u32(static_cast<std::uint32_t>(leaf.runs.size()));
            for (const RegionRun& run : leaf.runs) {
                w.u32(run.row);
                w.u32(run.start);
                w.u32(run.len);
            }
        }
    } else {
        encode_hex(w, std::get<HexMapPayload>(repr.payload), repr.width, repr.height);
    }
    return w.out;
}

DiscreteRepresentation deserialize_repr(const std::uint8_t* bytes, std::size_t size) {
    ByteReader r{bytes, size};
    require(r.u8() == 'G' && r.u8() == 'P' && r.u8() == 'D' && r.u8() == 'R',
            ErrorCode::bad_format, "bad magic");
    require(r.u8() == kFormatVersion, ErrorCode::bad_format, "unsupported format version");
    std::uint8_t kind_byte = r.u8();
    require(kind_byte <= static_cast<std::uint8_t>(ReprKind::hexmap), ErrorCode::bad_format,
            "unknown representation kind");

    DiscreteRepresentation repr;
    repr.kind = static_cast<ReprKind>(kind_byte);
    std::uint32_t width = r.u32(), height = r.u32();
    require(width >= 1 && width <= 65534 && height >= 1 && height <= 65534,
            ErrorCode::bad_format, "dimensions out of range");
    repr.width = static_cast<int>(width);
    repr.height = static_cast<int>(height);

    switch (repr.kind) {
    case ReprKind::quadtree:
    case ReprKind::wedgelet: {
        QuadTreePayload t;
        decode_quad(r, t, {0, 0, repr.width, repr.height}, repr.kind == ReprKind::wedgelet);
        repr.payload = std::move(t);
        break;
    }
    case ReprKind::bsp_lse: {
        BspLsePayload t;
        decode_bsp(r, t, 0);
        repr.payload = std::move(t);
        break;
    }
    case ReprKind::bsp_region: {
        BspRegionPayload t;
        std::uint32_t n_leaves = r.u32();
        t.leaves.resize(n_leaves);
        for (auto& leaf : t.leaves) {
            leaf.value = r.f32();
            std::uint32_t n_runs = r.u32();
            leaf.runs.resize(n_runs);
            for (auto& run : leaf.runs) {
                run.row = r.u32();
                run.start = r.u32();
                run.len = r.u32();
                require(run.row < height && run.len >= 1 &&
                            static_cast<std::uint64_t>(run.start) + run.len <= width,
                        ErrorCode::bad_format, "region run outside the raster");
                leaf.pixel_count += run.len;
            }
        }
        repr.payload = std::move(t);
        break;
    }
    case ReprKind::hexmap:
        repr.payload = decode_hex(r, repr.width, repr.height);
        break;
    }
    require(r.left == 0, ErrorCode::bad_format, "trailing bytes after representation");
    return repr;
}

DiscreteRepresentation deserialize_repr(const std::vector<std::uint8_t>& bytes) {
    return deserialize_repr(bytes.data(), bytes.size());
}

void write_repr_file(const DiscreteRepresentation& repr, const std::string& path) {
    std::vector<std::uint8_t> bytes = serialize_repr(repr);
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io_failure, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(out.good(), ErrorCode::io_failure, "write failed: " + path);
}

DiscreteRepresentation read_repr_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    require(in.good(), ErrorCode::io_failure, "cannot open: " + path);
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    require(in.good(), ErrorCode::io_failure, "read failed: " + path);
    return deserialize_repr(bytes);
}

} // namespace krigrid
