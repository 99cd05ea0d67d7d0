#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kinverify/code_map.hpp"
#include "kinverify/eigen_util.hpp"

namespace kinverify {

/// Non-overlapping block grid. Blocks are floor(w/cols) x floor(h/rows);
/// the remainder pixels go to the last column / last row of blocks.
struct GridSpec {
    int rows = 4;
    int cols = 4;

    int blocks() const noexcept { return rows * cols; }
};

struct BlockRange {
    int x0, x1, y0, y1;  // half-open
};
BlockRange block_range(int width, int height, const GridSpec& grid, int block_row, int block_col);

/// Raw code counts, blocks row-major, `bins` entries per block.
std::vector<std::uint64_t> block_counts(const CodeMap& map, const GridSpec& grid = {});

/// Block histograms, each block L2-normalized, concatenated row-major.
/// Length = blocks * 2^code_bits.
Eigen::VectorXd block_histograms(const CodeMap& map, const GridSpec& grid = {});

/// Column j holds the block histograms of map j. All maps must share the
/// same code width.
struct FeatureTensor {
    Eigen::MatrixXd data;  // mode1_dim x mode2_dim

    Eigen::Index mode1_dim() const { return data.rows(); }
    Eigen::Index mode2_dim() const { return data.cols(); }

    friend bool operator==(const FeatureTensor& a, const FeatureTensor& b) {
        return identical(a.data, b.data);
    }
};

FeatureTensor assemble_tensor(std::span<const CodeMap> maps, const GridSpec& grid = {});

/// Column-major concatenation (feature-level fusion).
Eigen::VectorXd flatten(const FeatureTensor& t);
FeatureTensor unflatten(const Eigen::VectorXd& v, Eigen::Index mode1_dim, Eigen::Index mode2_dim);

}  // namespace kinverify
