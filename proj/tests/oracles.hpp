#pragma once

// Test-only reference implementations. They are written for obviousness, not
// speed, and share no code with the library beyond its data types.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "kinverify/code_map.hpp"
#include "kinverify/imaging.hpp"
#include "kinverify/rng.hpp"

namespace oracle {

using kinverify::CodeMap;
using kinverify::Plane;

inline Plane random_plane(kinverify::Rng& rng, int w, int h) {
    Plane p(w, h);
    for (double& v : p.data()) v = rng.uniform();
    return p;
}

/// Neighbour position on the circle, snapped like the encoder's contract says.
inline double snapped(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

/// Per-pixel LBP straight from the definition: sample each neighbour with
/// four-weight bilinear interpolation and compare with the centre.
inline CodeMap lbp(const Plane& p, int radius, int neighbors) {
    CodeMap out(p.width() - 2 * radius, p.height() - 2 * radius, neighbors);
    for (int y = radius; y < p.height() - radius; ++y)
        for (int x = radius; x < p.width() - radius; ++x) {
            std::uint32_t code = 0;
            for (int i = 0; i < neighbors; ++i) {
                const double a = 2.0 * std::numbers::pi * i / neighbors;
                const double sx = x + snapped(radius * std::cos(a));
                const double sy = y + snapped(-radius * std::sin(a));
                const int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
                const double fx = sx - x0, fy = sy - y0;
                auto px = [&](int xx, int yy) {
                    return p(std::min(xx, p.width() - 1), std::min(yy, p.height() - 1));
                };
                const double v = (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x0 + 1, y0) +
                                 (1 - fx) * fy * px(x0, y0 + 1) + fx * fy * px(x0 + 1, y0 + 1);
                if (v >= p(x, y)) code |= 1u << i;
            }
            out.codes[std::size_t((y - radius) * out.width + (x - radius))] = code;
        }
    return out;
}

/// Naive correlation of the edge-replicated plane with each filter row
/// (taps row-major), thresholded at > 0.
inline CodeMap bsif(const Plane& p, const Eigen::MatrixXd& filters, int side) {
    const int half = (side - 1) / 2;
    CodeMap out(p.width(), p.height(), int(filters.rows()));
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) {
            std::uint32_t code = 0;
            for (int i = 0; i < filters.rows(); ++i) {
                double s = 0.0;
                for (int ky = 0; ky < side; ++ky)
                    for (int kx = 0; kx < side; ++kx) {
                        const int sx = std::clamp(x + kx - half, 0, p.width() - 1);
                        const int sy = std::clamp(y + ky - half, 0, p.height() - 1);
                        s += filters(i, ky * side + kx) * p(sx, sy);
                    }
                if (s > 0.0) code |= 1u << i;
            }
            out.codes[std::size_t(y * p.width() + x)] = code;
        }
    return out;
}

/// Counts codes per block by locating each pixel's block directly.
inline std::vector<std::uint64_t> block_counts(const CodeMap& m, int rows, int cols) {
    std::vector<std::uint64_t> counts(m.bins() * std::size_t(rows * cols), 0);
    const int bw = m.width / cols, bh = m.height / rows;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const int br = std::min(y / bh, rows - 1);
            const int bc = std::min(x / bw, cols - 1);
            ++counts[std::size_t(br * cols + bc) * m.bins() + m(x, y)];
        }
    return counts;
}

/// Sum of outer products divided by the sample count.
inline Eigen::MatrixXd scatter(const std::vector<Eigen::VectorXd>& diffs) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(diffs.front().size(), diffs.front().size());
    for (const auto& d : diffs) s += d * d.transpose();
    return s / double(diffs.size());
}

/// Matrix exponential by scaling and squaring with a 30-term Taylor series.
inline Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
    const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = term * x / double(k);
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

/// Best training accuracy over every midpoint between adjacent distinct
/// scores (the lone score when all are equal), found by trying each one.
inline double best_accuracy(const std::vector<double>& scores, const std::vector<bool>& kin) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> candidates;
    for (std::size_t i = 1; i < sorted.size(); ++i) candidates.push_back((sorted[i - 1] + sorted[i]) / 2);
    if (candidates.empty()) candidates.push_back(sorted[0]);
    double best = 0.0;
    for (double t : candidates) {
        std::size_t ok = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) ok += ((scores[i] >= t) == kin[i]) ? 1 : 0;
        best = std::max(best, double(ok) / double(scores.size()));
    }
    return best;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("kinverify-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
