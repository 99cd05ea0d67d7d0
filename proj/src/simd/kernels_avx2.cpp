#include "kinverify/simd/kernels.hpp"

#include <immintrin.h>

#include <array>

namespace kinverify::simd {
namespace {

constexpr std::size_t kLanes = 4;

inline void store_codes(__m256i code, std::uint32_t* out) {
    alignas(32) std::array<std::uint64_t, kLanes> tmp;
    _mm256_store_si256(reinterpret_cast<__m256i*>(tmp.data()), code);
    for (std::size_t j = 0; j < kLanes; ++j) out[j] = static_cast<std::uint32_t>(tmp[j]);
}

inline __m256i set_bit_where(__m256i code, __m256d mask, int bit) {
    const __m256i b = _mm256_set1_epi64x(std::int64_t(1) << bit);
    return _mm256_or_si256(code, _mm256_and_si256(_mm256_castpd_si256(mask), b));
}

void bsif_row_avx2(const double* padded, std::size_t stride, std::size_t width,
                   const double* filters, int filter_count, int side, std::uint32_t* codes) {
    const std::size_t taps = std::size_t(side) * std::size_t(side);
    const std::size_t body = width - width % kLanes;
    const __m256d zero = _mm256_setzero_pd();
    std::array<__m256d, 32> acc;

    for (std::size_t x = 0; x < body; x += kLanes) {
        for (int i = 0; i < filter_count; ++i) acc[i] = zero;
        // tap-major, filter-minor: every filter still sums its taps in
        // row-major order, matching the scalar kernel term by term
        for (int r = 0; r < side; ++r) {
            const double* src = padded + std::size_t(r) * stride + x;
            for (int c = 0; c < side; ++c) {
                const __m256d v = _mm256_loadu_pd(src + c);
                const double* f = filters + std::size_t(r * side + c);
                for (int i = 0; i < filter_count; ++i) {
                    const __m256d w = _mm256_set1_pd(f[std::size_t(i) * taps]);
                    acc[i] = _mm256_add_pd(acc[i], _mm256_mul_pd(w, v));
                }
            }
        }
        __m256i code = _mm256_setzero_si256();
        for (int i = 0; i < filter_count; ++i)
            code = set_bit_where(code, _mm256_cmp_pd(acc[i], zero, _CMP_GT_OQ), i);
        store_codes(code, codes + x);
    }
    if (body < width)
        detail::scalar_kernels.bsif_row(padded + body, stride, width - body, filters,
                                        filter_count, side, codes + body);
}

void lbp_row_avx2(const double* centre, std::size_t width, const LbpTap* taps, int tap_count,
                  std::uint32_t* codes) {
    const std::size_t body = width - width % kLanes;
    for (std::size_t x = 0; x < body; x += kLanes) {
        const double* p = centre + x;
        const __m256d c = _mm256_loadu_pd(p);
        __m256i code = _mm256_setzero_si256();
        for (int i = 0; i < tap_count; ++i) {
            const LbpTap& t = taps[i];
            const __m256d fx = _mm256_set1_pd(t.fx);
            const __m256d fy = _mm256_set1_pd(t.fy);
            const __m256d p00 = _mm256_loadu_pd(p + t.o00);
            const __m256d p10 = _mm256_loadu_pd(p + t.o10);
            const __m256d p01 = _mm256_loadu_pd(p + t.o01);
            const __m256d p11 = _mm256_loadu_pd(p + t.o11);
            const __m256d top = _mm256_add_pd(p00, _mm256_mul_pd(fx, _mm256_sub_pd(p10, p00)));
            const __m256d bottom =
                _mm256_add_pd(p01, _mm256_mul_pd(fx, _mm256_sub_pd(p11, p01)));
            const __m256d v = _mm256_add_pd(top, _mm256_mul_pd(fy, _mm256_sub_pd(bottom, top)));
            code = set_bit_where(code, _mm256_cmp_pd(v, c, _CMP_GE_OQ), i);
        }
        store_codes(code, codes + x);
    }
    if (body < width)
        detail::scalar_kernels.lbp_row(centre + body, width - body, taps, tap_count,
                                       codes + body);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4),
                                             _mm256_loadu_pd(b + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    alignas(32) std::array<double, kLanes> lanes;
    _mm256_store_pd(lanes.data(), _mm256_add_pd(s0, s1));
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) acc = acc + a[i] * b[i];
    return acc;
}

}  // namespace

namespace detail {
const Kernels avx2_kernels{Level::avx2, &bsif_row_avx2, &lbp_row_avx2, &dot_avx2};
}

}  // namespace kinverify::simd
