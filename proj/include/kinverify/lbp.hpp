#pragma once

#include <span>
#include <vector>

#include "kinverify/code_map.hpp"
#include "kinverify/imaging.hpp"
#include "kinverify/simd/kernels.hpp"

namespace kinverify {

/// Circular LBP sampling: `neighbors` points on a circle of `radius` pixels.
/// Neighbour 0 sits at angle 0 (east), the rest follow counter-clockwise
/// (towards north, i.e. decreasing row index); neighbour i carries weight 2^i.
struct LbpConfig {
    int radius = 1;
    int neighbors = 8;
};

/// Neighbour offset on the LBP circle, snapped to the nearest integer when
/// within 1e-9 so cos(pi/2) and friends land exactly on pixel centres.
struct LbpOffset {
    double dx, dy;
};
LbpOffset lbp_offset(const LbpConfig& cfg, int neighbor);

/// Raw (non-uniform) LBP codes. A neighbour sets its bit when its bilinear
/// sample is >= the centre. The border of width `radius` is dropped, so the
/// map is (w - 2R) x (h - 2R).
CodeMap lbp_encode(const Plane& plane, const LbpConfig& cfg);
CodeMap lbp_encode(const Plane& plane, const LbpConfig& cfg, const simd::Kernels& kernels);

/// One map per (channel, radius), channel-major then radius ascending.
std::vector<CodeMap> ms_lbp(const ColorImage& img, std::span<const int> radii,
                            int neighbors = 8);

}  // namespace kinverify
