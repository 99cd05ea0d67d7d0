#include "kinverify/simd/kernels.hpp"

namespace kinverify::simd {
namespace {

void bsif_row_scalar(const double* padded, std::size_t stride, std::size_t width,
                     const double* filters, int filter_count, int side,
                     std::uint32_t* codes) {
    const std::size_t taps = std::size_t(side) * std::size_t(side);
    for (std::size_t x = 0; x < width; ++x) {
        std::uint32_t code = 0;
        for (int i = 0; i < filter_count; ++i) {
            const double* f = filters + std::size_t(i) * taps;
            double acc = 0.0;
            for (int r = 0; r < side; ++r) {
                const double* src = padded + std::size_t(r) * stride + x;
                for (int c = 0; c < side; ++c) acc = acc + f[r * side + c] * src[c];
            }
            if (acc > 0.0) code |= 1u << i;
        }
        codes[x] = code;
    }
}

void lbp_row_scalar(const double* centre, std::size_t width, const LbpTap* taps,
                    int tap_count, std::uint32_t* codes) {
    for (std::size_t x = 0; x < width; ++x) {
        const double* p = centre + x;
        const double c = p[0];
        std::uint32_t code = 0;
        for (int i = 0; i < tap_count; ++i) {
            const LbpTap& t = taps[i];
            const double top = p[t.o00] + t.fx * (p[t.o10] - p[t.o00]);
            const double bottom = p[t.o01] + t.fx * (p[t.o11] - p[t.o01]);
            const double v = top + t.fy * (bottom - top);
            if (v >= c) code |= 1u << i;
        }
        codes[x] = code;
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc = acc + a[i] * b[i];
    return acc;
}

}  // namespace

namespace detail {
const Kernels scalar_kernels{Level::scalar, &bsif_row_scalar, &lbp_row_scalar, &dot_scalar};
}

}  // namespace kinverify::simd
