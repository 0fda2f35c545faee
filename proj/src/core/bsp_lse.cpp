#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "partition_geometry.hpp"
#include "representation.hpp"

namespace krigrid {
namespace {

// A BSP region is an intersection of half-planes, so it is convex and its
// cells form one contiguous span per row.
struct RowSpan {
    int j, i0, i1; // i1 exclusive
};

struct Candidate {
    double score;
    std::size_t idx;
    std::uint16_t centideg;
    std::int32_t offset;
};

struct Totals {
    double n = 0.0, s = 0.0, q = 0.0;
};

class BspBuilder {
public:
    BspBuilder(const ScalarField& field, int max_depth, double hom_thresh,
               int angle_step_deg, int offset_step, int prune_keep)
        : field_(field), max_depth_(max_depth), hom_thresh_(hom_thresh),
          angle_step_(angle_step_deg), offset_step_(offset_step), prune_keep_(prune_keep),
          stride_(static_cast<std::size_t>(field.width) + 1) {
        pre_.assign(static_cast<std::size_t>(field.height) * stride_, 0.0);
        pre_sq_.assign(pre_.size(), 0.0);
        for (int j = 0; j < field.height; ++j) {
            double* p = pre_.data() + static_cast<std::size_t>(j) * stride_;
            double* q = pre_sq_.data() + static_cast<std::size_t>(j) * stride_;
            for (int i = 0; i < field.width; ++i) {
                double v = field.at(i, j);
                p[i + 1] = p[i] + v;
                q[i + 1] = q[i] + v * v;
            }
        }
    }

    std::vector<BspNode> take_nodes() { return std::move(nodes_); }

    std::int32_t build(const std::vector<RowSpan>& region, int depth) {
        std::int32_t idx = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();

        // Direct two-pass variance (min == max short-circuit) so exactly
        // constant regions stop even with a zero threshold.
        double sum = 0.0, vmin = 0.0, vmax = 0.0;
        std::size_t n = 0;
        for (const auto& rs : region)
            for (int i = rs.i0; i < rs.i1; ++i) {
                double v = field_.at(i, rs.j);
                if (n == 0)
                    vmin = vmax = v;
                else {
                    vmin = std::min(vmin, v);
                    vmax = std::max(vmax, v);
                }
                sum += v;
                ++n;
            }
        double mean = sum / static_cast<double>(n);
        double var = 0.0;
        if (vmin != vmax) {
            for (const auto& rs : region)
                for (int i = rs.i0; i < rs.i1; ++i) {
                    double d = field_.at(i, rs.j) - mean;
                    var += d * d;
                }
            var /= static_cast<double>(n);
        }

        if (var <= hom_thresh_ || depth >= max_depth_ || n == 1) {
            nodes_[idx].value = mean;
            return idx;
        }

        auto split = choose_split(region);
        if (!split.first) {
            nodes_[idx].value = mean; // too thin: no line separates it
            return idx;
        }
        const Candidate& c = split.second;

        std::vector<RowSpan> side_a, side_b;
        auto [nx, ny] = bsp_normal(c.centideg);
        for (const auto& rs : region) {
            int t = boundary(nx, ny, c.offset, rs);
            if (nx > 0.0) { // side A is the prefix [i0, t)
                if (t > rs.i0)
                    side_a.push_back({rs.j, rs.i0, t});
                if (t < rs.i1)
                    side_b.push_back({rs.j, t, rs.i1});
            } else { // side A is the suffix [t, i1)
                if (t < rs.i1)
                    side_a.push_back({rs.j, t, rs.i1});
                if (t > rs.i0)
                    side_b.push_back({rs.j, rs.i0, t});
            }
        }

        if (side_a.empty() || side_b.empty()) {
            nodes_[idx].value = mean; // defensive; stage 2 counted both sides
            return idx;
        }

        nodes_[idx].angle_centideg = c.centideg;
        nodes_[idx].offset = c.offset;
        std::int32_t a = build(side_a, depth + 1);
        nodes_[idx].child_a = a;
        std::int32_t b = build(side_b, depth + 1);
        nodes_[idx].child_b = b;
        return idx;
    }

private:
    // First index in [i0, i1] where the cell leaves side A (nx > 0), or the
    // first index where it enters side A (nx < 0). bsp_side_a is monotone
    // along a row because nx is never exactly 0 for the angle grid, so a
    // binary search against the exact predicate lands on the same boundary the
    // renderer sees.
    int boundary(double nx, double ny, std::int32_t offset, const RowSpan& rs) const {
        int lo = rs.i0, hi = rs.i1;
        const bool prefix = nx > 0.0;
        while (lo < hi) {
            int mid = lo + (hi - lo) / 2;
            bool a = bsp_side_a(nx, ny, offset, mid, rs.j);
            if (a == prefix)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    Totals side_a_totals(double nx, double ny, std::int32_t offset,
                         const std::vector<RowSpan>& region, bool exact) const {
        Totals t;
        for (const auto& rs : region) {
            int cut;
            if (exact) {
                cut = boundary(nx, ny, offset, rs);
            } else {
                // Approximate crossing: fine for pruning scores, never used
                // for the final partition.
                double x = (offset - ny * (rs.j + 0.5)) / nx;
                double b = nx > 0.0 ? std::floor(x - 0.5) + 1.0 : std::ceil(x - 0.5);
                b = std::clamp(b, static_cast<double>(rs.i0), static_cast<double>(rs.i1));
                cut = static_cast<int>(b);
            }
            int a0, a1;
            if (nx > 0.0) {
                a0 = rs.i0;
                a1 = cut;
            } else {
                a0 = cut;
                a1 = rs.i1;
            }
            if (a1 <= a0)
                continue;
            const double* p = pre_.data() + static_cast<std::size_t>(rs.j) * stride_;
            const double* q = pre_sq_.data() + static_cast<std::size_t>(rs.j) * stride_;
            t.n += a1 - a0;
            t.s += p[a1] - p[a0];
            t.q += q[a1] - q[a0];
        }
        return t;
    }

    std::pair<bool, Candidate> choose_split(const std::vector<RowSpan>& region) const {
        Totals tot;
        int jmin = region.front().j, jmax = region.back().j;
        int imin = field_.width, imax = 0;
        for (const auto& rs : region) {
            const double* p = pre_.data() + static_cast<std::size_t>(rs.j) * stride_;
            const double* q = pre_sq_.data() + static_cast<std::size_t>(rs.j) * stride_;
            tot.n += rs.i1 - rs.i0;
            tot.s += p[rs.i1] - p[rs.i0];
            tot.q += q[rs.i1] - q[rs.i0];
            imin = std::min(imin, rs.i0);
            imax = std::max(imax, rs.i1);
        }

        // Stage 1: cheap balance-weighted mean-gap score for every line on the
        // (angle, offset) grid; keep the best prune_keep.
        std::vector<Candidate> cands;
        std::size_t idx = 0;
        for (int ang = 0; ang < 180; ang += angle_step_) {
            auto centideg = static_cast<std::uint16_t>(ang * 100);
            auto [nx, ny] = bsp_normal(centideg);
            double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
            // imax is exclusive, jmax is an inclusive row index
            for (double x : {imin + 0.5, imax - 0.5})
                for (double y : {jmin + 0.5, jmax + 0.5}) {
                    double pr = nx * x + ny * y;
                    pmin = std::min(pmin, pr);
                    pmax = std::max(pmax, pr);
                }
            auto m0 = static_cast<std::int64_t>(std::ceil(pmin / offset_step_));
            auto m1 = static_cast<std::int64_t>(std::floor(pmax / offset_step_));
            for (std::int64_t m = m0; m <= m1; ++m, ++idx) {
                auto offset = static_cast<std::int32_t>(m * offset_step_);
                Totals a = side_a_totals(nx, ny, offset, region, false);
                double nb = tot.n - a.n;
                if (a.n == 0.0 || nb == 0.0)
                    continue;
                double gap = std::abs(a.s / a.n - (tot.s - a.s) / nb);
                double score = gap * a.n * nb / (tot.n * tot.n);
                cands.push_back({score, idx, centideg, offset});
            }
        }
        if (cands.empty())
            return {false, {}};

        auto keep = std::min<std::size_t>(static_cast<std::size_t>(prune_keep_), cands.size());
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                          cands.end(), [](const Candidate& l, const Candidate& r) {
                              if (l.score != r.score)
                                  return l.score > r.score;
                              return l.idx < r.idx;
                          });
        cands.resize(keep);

        // Stage 2: exact two-sided SSE on the survivors; smallest candidate
        // index (= smallest angle, then smallest offset) wins ties.
        bool found = false;
        Candidate best{};
        double best_sse = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (const auto& c : cands) {
            auto [nx, ny] = bsp_normal(c.centideg);
            Totals a = side_a_totals(nx, ny, c.offset, region, true);
            double nb = tot.n - a.n;
            if (a.n == 0.0 || nb == 0.0)
                continue;
            double sb = tot.s - a.s, qb = tot.q - a.q;
            double sse = (a.q - a.s * a.s / a.n) + (qb - sb * sb / nb);
            if (!found || sse < best_sse || (sse == best_sse && c.idx < best_idx)) {
                found = true;
                best = c;
                best_sse = sse;
                best_idx = c.idx;
            }
        }
        return {found, best};
    }

    const ScalarField& field_;
    int max_depth_;
    double hom_thresh_;
    int angle_step_;
    int offset_step_;
    int prune_keep_;
    std::size_t stride_;
    std::vector<double> pre_, pre_sq_;
    std::vector<BspNode> nodes_;
};

} // namespace

DiscreteRepresentation build_bsp_lse(const ScalarField& field, int max_depth,
                                     double hom_thresh, int angle_step_deg, int offset_step,
                                     int prune_keep) {
    require(max_depth >= 0, ErrorCode::invalid_argument, "max_depth must be >= 0");
    require(hom_thresh >= 0.0, ErrorCode::invalid_argument, "hom_thresh must be >= 0");
    require(angle_step_deg >= 1 && 180 % angle_step_deg == 0, ErrorCode::invalid_argument,
            "angle_step must divide 180");
    require(offset_step >= 1, ErrorCode::invalid_argument, "offset_step must be >= 1");
    require(prune_keep >= 1, ErrorCode::invalid_argument, "prune_keep must be >= 1");

    auto t0 = std::chrono::steady_clock::now();
    BspBuilder builder(field, max_depth, hom_thresh, angle_step_deg, offset_step,
                       prune_keep);
    std::vector<RowSpan> root;
    root.reserve(static_cast<std::size_t>(field.height));
    for (int j = 0; j < field.height; ++j)
        root.push_back({j, 0, field.width});
    builder.build(root, 0);
    auto t1 = std::chrono::steady_clock::now();

    DiscreteRepresentation repr;
    repr.kind = ReprKind::bsp_lse;
    repr.width = field.width;
    repr.height = field.height;
    repr.build_time = std::chrono::duration<double>(t1 - t0).count();
    repr.payload = BspLsePayload{builder.take_nodes()};
    return repr;
}

} // namespace krigrid
