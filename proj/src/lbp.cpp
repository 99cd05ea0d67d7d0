#include "kinverify/lbp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kinverify/error.hpp"

namespace kinverify {
namespace {

double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

void check_config(const LbpConfig& cfg) {
    require(cfg.radius >= 1, ErrorCode::invalid_argument,
            "LBP radius must be >= 1, got " + std::to_string(cfg.radius));
    require(cfg.neighbors >= 4 && cfg.neighbors <= 16, ErrorCode::invalid_argument,
            "LBP neighbour count must be in [4, 16], got " + std::to_string(cfg.neighbors));
}

}  // namespace

LbpOffset lbp_offset(const LbpConfig& cfg, int neighbor) {
    const double angle = 2.0 * std::numbers::pi * neighbor / cfg.neighbors;
    return {snap(cfg.radius * std::cos(angle)), snap(-cfg.radius * std::sin(angle))};
}

CodeMap lbp_encode(const Plane& plane, const LbpConfig& cfg) {
    return lbp_encode(plane, cfg, simd::kernels());
}

CodeMap lbp_encode(const Plane& plane, const LbpConfig& cfg, const simd::Kernels& kernels) {
    check_config(cfg);
    const int R = cfg.radius;
    require(plane.width() >= 2 * R + 1 && plane.height() >= 2 * R + 1,
            ErrorCode::invalid_argument,
            "plane " + std::to_string(plane.width()) + "x" + std::to_string(plane.height()) +
                " too small for LBP radius " + std::to_string(R));

    const auto stride = std::ptrdiff_t(plane.width());
    std::vector<simd::LbpTap> taps(std::size_t(cfg.neighbors));
    for (int i = 0; i < cfg.neighbors; ++i) {
        const auto [dx, dy] = lbp_offset(cfg, i);
        const double x0 = std::floor(dx);
        const double y0 = std::floor(dy);
        simd::LbpTap t{};
        t.fx = dx - x0;
        t.fy = dy - y0;
        t.o00 = std::ptrdiff_t(y0) * stride + std::ptrdiff_t(x0);
        t.o10 = t.fx > 0.0 ? t.o00 + 1 : t.o00;
        t.o01 = t.fy > 0.0 ? t.o00 + stride : t.o00;
        t.o11 = t.fy > 0.0 ? t.o10 + stride : t.o10;
        taps[std::size_t(i)] = t;
    }

    CodeMap out(plane.width() - 2 * R, plane.height() - 2 * R, cfg.neighbors);
    for (int y = 0; y < out.height; ++y) {
        const double* centre = plane.row(y + R).data() + R;
        kernels.lbp_row(centre, std::size_t(out.width), taps.data(), cfg.neighbors,
                        out.row(y).data());
    }
    return out;
}

std::vector<CodeMap> ms_lbp(const ColorImage& img, std::span<const int> radii, int neighbors) {
    require(!radii.empty(), ErrorCode::invalid_argument, "no LBP radii given");
    std::vector<int> sorted(radii.begin(), radii.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<CodeMap> maps;
    maps.reserve(3 * sorted.size());
    for (const Plane& p : img.planes)
        for (int r : sorted) maps.push_back(lbp_encode(p, {r, neighbors}));
    return maps;
}

}  // namespace kinverify
