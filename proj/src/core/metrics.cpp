#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "metrics.hpp"

namespace krigrid {
namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kDynamicRange = 255.0;
constexpr int kHashSize = 128; // resize target; low block is kHashSize / 2

std::vector<double> quantized(const ScalarField& f) {
    std::vector<double> q(f.cell_count());
    for (std::size_t p = 0; p < q.size(); ++p)
        q[p] = static_cast<double>(quantize_u8(f.values[p]));
    return q;
}

// Valid-mode separable convolution with a normalised Gaussian. Output is
// (w - win + 1) x (h - win + 1).
std::vector<double> gaussian_valid(const std::vector<double>& in, int w, int h,
                                   const std::array<double, kSsimWindow>& k) {
    int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
    std::vector<double> mid(static_cast<std::size_t>(ow) * h);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < ow; ++i) {
            double s = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                s += k[static_cast<std::size_t>(t)] * in[static_cast<std::size_t>(j) * w + i + t];
            mid[static_cast<std::size_t>(j) * ow + i] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int j = 0; j < oh; ++j)
        for (int i = 0; i < ow; ++i) {
            double s = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                s += k[static_cast<std::size_t>(t)] * mid[static_cast<std::size_t>(j + t) * ow + i];
            out[static_cast<std::size_t>(j) * ow + i] = s;
        }
    return out;
}

// Exact area-average resize of one axis: out has `on` cells covering the same
// span as the `n` input cells, each output cell the mean of what it overlaps.
void resize_axis(const double* in, int n, int in_stride, double* out, int on, int out_stride) {
    double scale = static_cast<double>(n) / on;
    for (int u = 0; u < on; ++u) {
        double x0 = u * scale, x1 = (u + 1) * scale;
        int c0 = static_cast<int>(std::floor(x0));
        int c1 = std::min(static_cast<int>(std::ceil(x1)), n);
        double acc = 0.0;
        for (int c = c0; c < c1; ++c) {
            double lo = std::max(x0, static_cast<double>(c));
            double hi = std::min(x1, static_cast<double>(c + 1));
            if (hi > lo)
                acc += (hi - lo) * in[static_cast<std::size_t>(c) * in_stride];
        }
        out[static_cast<std::size_t>(u) * out_stride] = acc / scale;
    }
}

} // namespace

double mse_u8(const ScalarField& a, const ScalarField& b) {
    require(a.width == b.width && a.height == b.height, ErrorCode::invalid_argument,
            "fields must have equal dimensions");
    double acc = 0.0;
    for (std::size_t p = 0; p < a.cell_count(); ++p) {
        double d = static_cast<double>(quantize_u8(a.values[p])) -
                   static_cast<double>(quantize_u8(b.values[p]));
        acc += d * d;
    }
    return acc / static_cast<double>(a.cell_count());
}

double ssim_u8(const ScalarField& a, const ScalarField& b) {
    require(a.width == b.width && a.height == b.height, ErrorCode::invalid_argument,
            "fields must have equal dimensions");
    require(a.width >= kSsimWindow && a.height >= kSsimWindow, ErrorCode::invalid_argument,
            "field smaller than the similarity window");

    std::array<double, kSsimWindow> k;
    double ksum = 0.0;
    for (int t = 0; t < kSsimWindow; ++t) {
        double d = t - (kSsimWindow - 1) / 2.0;
        k[static_cast<std::size_t>(t)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        ksum += k[static_cast<std::size_t>(t)];
    }
    for (double& v : k)
        v /= ksum;

    std::vector<double> qa = quantized(a), qb = quantized(b);
    std::vector<double> qa2(qa.size()), qb2(qa.size()), qab(qa.size());
    for (std::size_t p = 0; p < qa.size(); ++p) {
        qa2[p] = qa[p] * qa[p];
        qb2[p] = qb[p] * qb[p];
        qab[p] = qa[p] * qb[p];
    }
    int w = a.width, h = a.height;
    std::vector<double> mu_a = gaussian_valid(qa, w, h, k);
    std::vector<double> mu_b = gaussian_valid(qb, w, h, k);
    std::vector<double> m_a2 = gaussian_valid(qa2, w, h, k);
    std::vector<double> m_b2 = gaussian_valid(qb2, w, h, k);
    std::vector<double> m_ab = gaussian_valid(qab, w, h, k);

    const double c1 = std::pow(0.01 * kDynamicRange, 2);
    const double c2 = std::pow(0.03 * kDynamicRange, 2);
    double acc = 0.0;
    for (std::size_t p = 0; p < mu_a.size(); ++p) {
        double var_a = m_a2[p] - mu_a[p] * mu_a[p];
        double var_b = m_b2[p] - mu_b[p] * mu_b[p];
        double cov = m_ab[p] - mu_a[p] * mu_b[p];
        acc += ((2.0 * mu_a[p] * mu_b[p] + c1) * (2.0 * cov + c2)) /
               ((mu_a[p] * mu_a[p] + mu_b[p] * mu_b[p] + c1) * (var_a + var_b + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

PerceptualHash perceptual_hash(const ScalarField& field) {
    const int n = kHashSize;
    // Area-average resize to n x n (separable; exact fractional overlaps).
    std::vector<double> cols(static_cast<std::size_t>(n) * field.height);
    for (int j = 0; j < field.height; ++j)
        resize_axis(field.values.data() + static_cast<std::size_t>(j) * field.width, field.width,
                    1, cols.data() + static_cast<std::size_t>(j) * n, n, 1);
    std::vector<double> img(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        resize_axis(cols.data() + i, field.height, n, img.data() + i, n, n);

    // Orthonormal DCT-II via two matrix products with the cosine basis.
    std::vector<double> basis(static_cast<std::size_t>(n) * n);
    const double pi = 3.14159265358979323846;
    for (int u = 0; u < n; ++u) {
        double alpha = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int x = 0; x < n; ++x)
            basis[static_cast<std::size_t>(u) * n + x] =
                alpha * std::cos(pi * (2.0 * x + 1.0) * u / (2.0 * n));
    }
    std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0); // rows transformed
    for (int j = 0; j < n; ++j)
        for (int u = 0; u < n; ++u) {
            double s = 0.0;
            for (int x = 0; x < n; ++x)
                s += basis[static_cast<std::size_t>(u) * n + x] *
                     img[static_cast<std::size_t>(j) * n + x];
            tmp[static_cast<std::size_t>(j) * n + u] = s;
        }
    const int m = n / 2; // low-frequency block
    std::vector<double> low(static_cast<std::size_t>(m) * m);
    for (int v = 0; v < m; ++v)
        for (int u = 0; u < m; ++u) {
            double s = 0.0;
            for (int y = 0; y < n; ++y)
                s += basis[static_cast<std::size_t>(v) * n + y] *
                     tmp[static_cast<std::size_t>(y) * n + u];
            low[static_cast<std::size_t>(v) * m + u] = s;
        }

    // Threshold the 4095 non-DC coefficients against their median.
    std::vector<double> coeffs(low.begin() + 1, low.end());
    std::vector<double> sorted = coeffs;
    auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    double median = *mid;

    PerceptualHash hash;
    for (std::size_t kbit = 0; kbit < coeffs.size(); ++kbit)
        if (coeffs[kbit] > median)
            hash.words[kbit / 64] |= std::uint64_t{1} << (kbit % 64);
    return hash; // final pad bit stays zero
}

int hamming_distance(const PerceptualHash& a, const PerceptualHash& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.words.size(); ++i)
        d += std::popcount(a.words[i] ^ b.words[i]);
    return d;
}

MetricReport evaluate_representation(const ScalarField& reference,
                                     const DiscreteRepresentation& repr) {
    std::vector<std::uint8_t> bytes = serialize_repr(repr);
    ScalarField image = render_repr(deserialize_repr(bytes), reference.width, reference.height);
    MetricReport report;
    report.one_minus_ssim = 1.0 - ssim_u8(reference, image);
    report.hamming = hamming_distance(perceptual_hash(reference), perceptual_hash(image));
    report.mse = mse_u8(reference, image);
    report.build_time = repr.build_time;
    report.size_bytes = bytes.size();
    report.leaf_count = repr.leaf_count();
    return report;
}

} // namespace krigrid
