#include <cstdlib>
#include <string>

#include "kinverify/error.hpp"
#include "kinverify/simd/kernels.hpp"

namespace kinverify::simd {

std::string_view to_string(Level level) noexcept {
    switch (level) {
        case Level::scalar: return "scalar";
        case Level::avx2: return "avx2";
    }
    return "unknown";
}

bool supported(Level level) noexcept {
    switch (level) {
        case Level::scalar: return true;
        case Level::avx2:
#if defined(KINVERIFY_WITH_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
    }
    return false;
}

const Kernels& kernels(Level level) {
    require(supported(level), ErrorCode::invalid_argument,
            std::string("SIMD level not available: ") + std::string(to_string(level)));
#if defined(KINVERIFY_WITH_AVX2)
    if (level == Level::avx2) return detail::avx2_kernels;
#endif
    return detail::scalar_kernels;
}

namespace {

Level select_level() {
    if (const char* forced = std::getenv("KINVERIFY_SIMD")) {
        const std::string_view name(forced);
        if (name == "scalar") return Level::scalar;
        if (name == "avx2" && supported(Level::avx2)) return Level::avx2;
    }
    return supported(Level::avx2) ? Level::avx2 : Level::scalar;
}

}  // namespace

const Kernels& kernels() {
    static const Kernels& active = kernels(select_level());
    return active;
}

}  // namespace kinverify::simd
