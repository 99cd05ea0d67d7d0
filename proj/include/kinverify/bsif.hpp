#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kinverify/code_map.hpp"
#include "kinverify/eigen_util.hpp"
#include "kinverify/imaging.hpp"
#include "kinverify/simd/kernels.hpp"

namespace kinverify {

/// n filters of side*side taps, one filter per row, taps row-major.
using FilterMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Normalized training patches of one colour channel, one flattened
/// (row-major) patch per column.
struct PatchSet {
    int side = 0;
    Channel channel = Channel::red;
    Eigen::MatrixXd samples;  // side^2 x count

    Eigen::Index count() const { return samples.cols(); }
};

struct FilterBank {
    int side = 0;
    int bits = 0;
    std::array<FilterMatrix, 3> filters;  // per channel: bits x side^2
    std::uint64_t seed = 0;
    std::string source_tag;

    friend bool operator==(const FilterBank& a, const FilterBank& b) {
        return a.side == b.side && a.bits == b.bits && a.seed == b.seed &&
               a.source_tag == b.source_tag && identical(a.filters[0], b.filters[0]) &&
               identical(a.filters[1], b.filters[1]) && identical(a.filters[2], b.filters[2]);
    }
};

struct IcaOptions {
    double tolerance = 1e-5;
    int max_iterations = 500;
};

struct IcaStats {
    int iterations = 0;
    double final_delta = 0.0;
    double orthonormality_error = 0.0;  // max |U U^T - I|
};

struct LearnedFilters {
    FilterMatrix filters;        // n x side^2, unit rows, sign-canonical
    Eigen::MatrixXd whitening;   // n x side^2
    Eigen::MatrixXd unmixing;    // n x n, orthonormal
    Eigen::VectorXd eigenvalues; // retained covariance spectrum, descending
    IcaStats stats;
};

/// Draws `count` patches per channel at uniform (image, x, y) positions from
/// a generator seeded by (seed, channel). Constant patches are redrawn.
std::array<PatchSet, 3> sample_patches(std::span<const ColorImage> images, int side,
                                       std::size_t count, std::uint64_t seed);
PatchSet sample_channel_patches(std::span<const ColorImage> images, int side, std::size_t count,
                                std::uint64_t seed, Channel channel);

/// Whitening onto the top `bits` principal directions followed by symmetric
/// FastICA with the cube nonlinearity. Requires count >= 10 * side^2.
LearnedFilters learn_filters(const PatchSet& patches, int bits, std::uint64_t seed,
                             const IcaOptions& options = {});

struct BankLearning {
    FilterBank bank;
    std::array<IcaStats, 3> stats;
};

/// Samples and learns all three channels. `seed` drives patch sampling and is
/// stored in the bank; `ica_seed` drives the unmixing initialisation.
BankLearning learn_filter_bank(std::span<const ColorImage> images, int side, int bits,
                               std::size_t count, std::uint64_t seed, std::uint64_t ica_seed,
                               const std::string& source_tag = {},
                               const IcaOptions& options = {});
inline BankLearning learn_filter_bank(std::span<const ColorImage> images, int side, int bits,
                                      std::size_t count, std::uint64_t seed) {
    return learn_filter_bank(images, side, bits, count, seed, seed);
}

/// Correlates the edge-replicated plane with each filter; bit i is set iff
/// response i is strictly positive. Output has the plane's dimensions.
CodeMap bsif_encode(const Plane& plane, const FilterMatrix& filters, int side);
CodeMap bsif_encode(const Plane& plane, const FilterMatrix& filters, int side,
                    const simd::Kernels& kernels);

/// One map per (channel, bank), channel-major then side ascending.
std::vector<CodeMap> ms_bsif(const ColorImage& img, std::span<const FilterBank> banks);

}  // namespace kinverify
