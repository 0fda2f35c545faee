#pragma once

#include <array>
#include <cstdint>

#include "representation.hpp"
#include "types.hpp"

namespace krigrid {

// Mean squared error over 8-bit quantised cell values (0..255).
double mse_u8(const ScalarField& a, const ScalarField& b);

// Mean structural similarity over 8-bit quantised values: 11x11 Gaussian
// window (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range 255. The window mean
// is taken over the interior where the window fits, so both sides must be at
// least 11 cells. Symmetric in its arguments.
double ssim_u8(const ScalarField& a, const ScalarField& b);

// Perceptual hash: area-average resize to 128x128, orthonormal 2D DCT-II,
// keep the low-frequency 64x64 block minus the DC term (4095 coefficients),
// threshold each against their median, pad with one zero bit. 4096 bits.
struct PerceptualHash {
    std::array<std::uint64_t, 64> words{};
};

PerceptualHash perceptual_hash(const ScalarField& field);
int hamming_distance(const PerceptualHash& a, const PerceptualHash& b);

// Fidelity and cost of one representation against the reference field. The
// comparison image is rendered from the serialised form (leaf values pass
// through f32), so files and in-memory builds score identically.
struct MetricReport {
    double one_minus_ssim = 0.0;
    int hamming = 0;
    double mse = 0.0;
    double build_time = 0.0; // seconds
    std::size_t size_bytes = 0;
    std::size_t leaf_count = 0;
};

MetricReport evaluate_representation(const ScalarField& reference,
                                     const DiscreteRepresentation& repr);

} // namespace krigrid
