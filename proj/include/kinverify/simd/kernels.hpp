#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Inner loops of the encoders and the scorer. Every kernel has a scalar
// reference implementation and, where the target supports it, a vector
// variant chosen at runtime. The encoder kernels vectorize across output
// pixels only and keep the per-pixel operation order of the scalar kernel,
// so their codes are bit-identical. `dot` reassociates its sum and agrees
// with the scalar kernel to rounding.

namespace kinverify::simd {

enum class Level { scalar, avx2 };

std::string_view to_string(Level level) noexcept;

/// One bilinear neighbour sample relative to the centre pixel. The four
/// corner offsets collapse onto each other along an axis whose fractional
/// weight is exactly zero, so integer-aligned neighbours never read past the
/// sampled pixel.
struct LbpTap {
    std::ptrdiff_t o00, o10, o01, o11;
    double fx, fy;
};

struct Kernels {
    Level level;

    /// codes[x] for x in [0, width): bit i set iff the correlation of filter i
    /// (side*side taps, row-major) with the window whose top-left sample is
    /// padded[x] is > 0. `stride` is the padded row pitch.
    void (*bsif_row)(const double* padded, std::size_t stride, std::size_t width,
                     const double* filters, int filter_count, int side,
                     std::uint32_t* codes);

    /// codes[x] for x in [0, width): bit i set iff the bilinear sample at
    /// taps[i] around centre[x] is >= centre[x].
    void (*lbp_row)(const double* centre, std::size_t width, const LbpTap* taps,
                    int tap_count, std::uint32_t* codes);

    double (*dot)(const double* a, const double* b, std::size_t n);
};

bool supported(Level level) noexcept;

/// Kernels for an explicit level; throws invalid_argument if the CPU or the
/// build lacks it.
const Kernels& kernels(Level level);

/// Best supported level, unless KINVERIFY_SIMD=scalar|avx2 overrides it.
const Kernels& kernels();

namespace detail {
extern const Kernels scalar_kernels;
#if defined(KINVERIFY_WITH_AVX2)
extern const Kernels avx2_kernels;
#endif
}  // namespace detail

}  // namespace kinverify::simd
