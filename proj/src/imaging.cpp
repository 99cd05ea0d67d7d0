#include "kinverify/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "kinverify/error.hpp"
#include "kinverify/io.hpp"

namespace kinverify {

Plane::Plane(int width, int height, double fill)
    : width_(width), height_(height), data_(std::size_t(width) * std::size_t(height), fill) {
    require(width >= 1 && height >= 1, ErrorCode::invalid_argument,
            "plane dimensions must be positive, got " + std::to_string(width) + "x" +
                std::to_string(height));
}

ColorImage::ColorImage(int width, int height, double white_level)
    : planes{Plane(width, height), Plane(width, height), Plane(width, height)},
      white(white_level) {}

CropWindow full_window(const ColorImage& img) {
    const int side = std::min(img.width(), img.height());
    return {(img.width() - side) / 2, (img.height() - side) / 2, side};
}

ColorImage load_image(const std::filesystem::path& path) {
    std::error_code ec;
    require(std::filesystem::is_regular_file(path, ec), ErrorCode::io,
            "image not found: " + path.string());

    cv::Mat raw;
    try {
        raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        fail(ErrorCode::decode, "cannot decode image " + path.string() + ": " + e.what());
    }
    require(!raw.empty(), ErrorCode::decode, "cannot decode image " + path.string());
    require(raw.depth() == CV_8U, ErrorCode::decode,
            "unsupported sample depth (8-bit required): " + path.string());
    const int nch = raw.channels();
    require(nch == 1 || nch == 3 || nch == 4, ErrorCode::decode,
            "unsupported channel count " + std::to_string(nch) + ": " + path.string());

    ColorImage img(raw.cols, raw.rows, 255.0);
    for (int y = 0; y < raw.rows; ++y) {
        const std::uint8_t* src = raw.ptr<std::uint8_t>(y);
        for (int x = 0; x < raw.cols; ++x) {
            const std::uint8_t* px = src + std::size_t(x) * std::size_t(nch);
            if (nch == 1) {
                for (auto& p : img.planes) p(x, y) = px[0];
            } else {
                // OpenCV decodes to BGR(A)
                img.plane(Channel::red)(x, y) = px[2];
                img.plane(Channel::green)(x, y) = px[1];
                img.plane(Channel::blue)(x, y) = px[0];
            }
        }
    }
    return img;
}

void save_png(const ColorImage& img, const std::filesystem::path& path) {
    cv::Mat out(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        auto* dst = out.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.planes[2 - c](x, y) / img.white, 0.0, 1.0);
                dst[3 * x + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    std::vector<std::uint8_t> bytes;
    bool ok = false;
    try {
        ok = cv::imencode(".png", out, bytes);
    } catch (const cv::Exception& e) {
        fail(ErrorCode::io, "cannot encode " + path.string() + ": " + e.what());
    }
    require(ok, ErrorCode::io, "cannot encode " + path.string());
    write_file_atomic(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

ColorImage preprocess(const ColorImage& img, const CropWindow& w) {
    require(w.side >= 1 && w.x >= 0 && w.y >= 0 && w.x + w.side <= img.width() &&
                w.y + w.side <= img.height(),
            ErrorCode::invalid_argument,
            "crop window (" + std::to_string(w.x) + "," + std::to_string(w.y) + ",side " +
                std::to_string(w.side) + ") exceeds " + std::to_string(img.width()) + "x" +
                std::to_string(img.height()) + " image");
    require(img.white > 0.0, ErrorCode::invalid_argument, "white level must be positive");

    // Half-pixel-centred sampling; a window of side 64 maps every output
    // pixel exactly onto a source pixel with zero interpolation weight.
    const double scale = double(w.side) / kCanonicalSide;
    const int last = w.side - 1;
    struct Tap {
        int i0, i1;
        double frac;
    };
    std::array<Tap, kCanonicalSide> taps{};
    for (int o = 0; o < kCanonicalSide; ++o) {
        const double s = std::clamp((o + 0.5) * scale - 0.5, 0.0, double(last));
        const int i0 = static_cast<int>(std::floor(s));
        taps[o] = {i0, std::min(i0 + 1, last), s - i0};
    }

    ColorImage out(kCanonicalSide, kCanonicalSide, 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
        const Plane& src = img.planes[c];
        Plane& dst = out.planes[c];
        for (int oy = 0; oy < kCanonicalSide; ++oy) {
            const Tap ty = taps[oy];
            for (int ox = 0; ox < kCanonicalSide; ++ox) {
                const Tap tx = taps[ox];
                const double p00 = src(w.x + tx.i0, w.y + ty.i0);
                const double p10 = src(w.x + tx.i1, w.y + ty.i0);
                const double p01 = src(w.x + tx.i0, w.y + ty.i1);
                const double p11 = src(w.x + tx.i1, w.y + ty.i1);
                const double top = p00 + tx.frac * (p10 - p00);
                const double bottom = p01 + tx.frac * (p11 - p01);
                dst(ox, oy) = (top + ty.frac * (bottom - top)) / img.white;
            }
        }
    }
    return out;
}

std::vector<double> normalize_patch(std::span<const double> patch) {
    require(!patch.empty(), ErrorCode::invalid_argument, "empty patch");
    const auto [lo, hi] = std::minmax_element(patch.begin(), patch.end());
    require(*lo != *hi, ErrorCode::degenerate_input, "constant patch has zero deviation");

    const double n = double(patch.size());
    double mean = 0.0;
    for (double v : patch) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : patch) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    require(sd > 0.0 && std::isfinite(sd), ErrorCode::degenerate_input,
            "patch deviation is not a positive finite number");

    std::vector<double> out(patch.size());
    for (std::size_t i = 0; i < patch.size(); ++i) out[i] = (patch[i] - mean) / sd;
    return out;
}

}  // namespace kinverify
