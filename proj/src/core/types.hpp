#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"

namespace krigrid {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

// Binary weed mask extracted from a semantic label image by exact colour match.
struct SemanticRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> weed_mask; // 1 = weed, row-major

    bool weed_at(int x, int y) const {
        return weed_mask[static_cast<std::size_t>(y) * width + x] != 0;
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }
};

// One training datum: continuous field coordinates plus the pooled weed fraction.
struct SamplePoint {
    double x = 0.0;
    double y = 0.0;
    double value = 0.0;
};

// Dense grid of weed-coverage values in [0, 1]; used both for the GP gridmap
// and for rasterised representations.
struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<double> values; // row-major

    ScalarField() = default;
    ScalarField(int w, int h, double fill = 0.0)
        : width(w), height(h),
          values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
        require(w > 0 && h > 0, ErrorCode::invalid_argument, "field dimensions must be positive");
    }

    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(width) * height;
    }
};

// Axis-aligned rectangle in continuous field coordinates.
struct Extent {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

inline std::uint8_t quantize_u8(double v) {
    // Round-half-up quantisation shared by PNG export and the 8-bit metrics.
    double q = v * 255.0 + 0.5;
    if (q < 0.0) q = 0.0;
    if (q > 255.0) q = 255.0;
    return static_cast<std::uint8_t>(q);
}

} // namespace krigrid
