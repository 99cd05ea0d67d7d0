#include "kinverify/features.hpp"

#include <cmath>
#include <string>

#include "kinverify/error.hpp"

namespace kinverify {
namespace {

void check_grid(const CodeMap& map, const GridSpec& grid) {
    require(grid.rows >= 1 && grid.cols >= 1, ErrorCode::invalid_argument,
            "grid dimensions must be positive");
    require(map.width >= grid.cols && map.height >= grid.rows, ErrorCode::invalid_argument,
            "code map " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                " smaller than " + std::to_string(grid.cols) + "x" + std::to_string(grid.rows) +
                " grid");
    require(map.code_bits >= 1 && map.code_bits <= 16, ErrorCode::invalid_argument,
            "code width must be in [1, 16] bits");
}

}  // namespace

BlockRange block_range(int width, int height, const GridSpec& grid, int block_row,
                       int block_col) {
    const int bw = width / grid.cols;
    const int bh = height / grid.rows;
    return {block_col * bw, block_col == grid.cols - 1 ? width : (block_col + 1) * bw,
            block_row * bh, block_row == grid.rows - 1 ? height : (block_row + 1) * bh};
}

std::vector<std::uint64_t> block_counts(const CodeMap& map, const GridSpec& grid) {
    check_grid(map, grid);
    const std::size_t bins = map.bins();
    std::vector<std::uint64_t> counts(bins * std::size_t(grid.blocks()), 0);
    for (int br = 0; br < grid.rows; ++br) {
        for (int bc = 0; bc < grid.cols; ++bc) {
            const auto r = block_range(map.width, map.height, grid, br, bc);
            std::uint64_t* hist = counts.data() + bins * std::size_t(br * grid.cols + bc);
            for (int y = r.y0; y < r.y1; ++y)
                for (int x = r.x0; x < r.x1; ++x) {
                    const std::uint32_t code = map(x, y);
                    if (code >= bins)
                        fail(ErrorCode::invalid_argument,
                             "code " + std::to_string(code) + " exceeds declared width");
                    ++hist[code];
                }
        }
    }
    return counts;
}

Eigen::VectorXd block_histograms(const CodeMap& map, const GridSpec& grid) {
    const auto counts = block_counts(map, grid);
    const auto bins = Eigen::Index(map.bins());
    Eigen::VectorXd out(Eigen::Index(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i) out(Eigen::Index(i)) = double(counts[i]);
    for (int b = 0; b < grid.blocks(); ++b) {
        auto seg = out.segment(b * bins, bins);
        seg /= seg.norm();  // every block holds >= 1 pixel
    }
    return out;
}

FeatureTensor assemble_tensor(std::span<const CodeMap> maps, const GridSpec& grid) {
    require(!maps.empty(), ErrorCode::invalid_argument, "no code maps to assemble");
    const int bits = maps.front().code_bits;
    for (const auto& m : maps)
        require(m.code_bits == bits, ErrorCode::invalid_argument,
                "code maps mix " + std::to_string(bits) + "-bit and " +
                    std::to_string(m.code_bits) + "-bit codes");

    FeatureTensor t;
    t.data.resize(Eigen::Index(grid.blocks()) * Eigen::Index(maps.front().bins()),
                  Eigen::Index(maps.size()));
    for (std::size_t j = 0; j < maps.size(); ++j)
        t.data.col(Eigen::Index(j)) = block_histograms(maps[j], grid);
    return t;
}

Eigen::VectorXd flatten(const FeatureTensor& t) {
    return Eigen::Map<const Eigen::VectorXd>(t.data.data(), t.data.size());
}

FeatureTensor unflatten(const Eigen::VectorXd& v, Eigen::Index mode1_dim, Eigen::Index mode2_dim) {
    require(mode1_dim >= 1 && mode2_dim >= 1 && v.size() == mode1_dim * mode2_dim,
            ErrorCode::invalid_argument, "vector length does not match tensor dimensions");
    return {Eigen::Map<const Eigen::MatrixXd>(v.data(), mode1_dim, mode2_dim)};
}

}  // namespace kinverify
