#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace kinverify {

inline constexpr int kCanonicalSide = 64;

/// Row-major raster of real samples.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(int x, int y) { return data_[index(x, y)]; }
    double operator()(int x, int y) const { return data_[index(x, y)]; }

    std::span<double> row(int y) { return {data_.data() + index(0, y), std::size_t(width_)}; }
    std::span<const double> row(int y) const {
        return {data_.data() + index(0, y), std::size_t(width_)};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return std::size_t(y) * std::size_t(width_) + std::size_t(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

enum class Channel { red = 0, green = 1, blue = 2 };
inline constexpr std::array<Channel, 3> kChannels{Channel::red, Channel::green, Channel::blue};

/// Three equally sized planes (R, G, B). `white` is the sample value that
/// maps to 1.0 on preprocessing: 255 for decoded 8-bit files, 1 afterwards.
struct ColorImage {
    std::array<Plane, 3> planes;
    double white = 255.0;

    ColorImage() = default;
    ColorImage(int width, int height, double white_level = 255.0);

    int width() const noexcept { return planes[0].width(); }
    int height() const noexcept { return planes[0].height(); }

    Plane& plane(Channel c) { return planes[static_cast<std::size_t>(c)]; }
    const Plane& plane(Channel c) const { return planes[static_cast<std::size_t>(c)]; }

    friend bool operator==(const ColorImage&, const ColorImage&) = default;
};

struct CropWindow {
    int x = 0;
    int y = 0;
    int side = 0;

    friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

/// Largest centered square that fits the image.
CropWindow full_window(const ColorImage& img);

/// Decodes an 8-bit PNG or JPEG. Grayscale sources are replicated to three
/// planes, alpha is dropped.
ColorImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG; samples are divided by `img.white`, clamped to
/// [0, 1] and rounded to 0..255.
void save_png(const ColorImage& img, const std::filesystem::path& path);

/// Crops `window`, bilinearly resamples it to 64x64 and rescales intensities
/// by 1/white into [0, 1].
ColorImage preprocess(const ColorImage& img, const CropWindow& window);

/// Zero mean, unit population standard deviation.
std::vector<double> normalize_patch(std::span<const double> patch);

}  // namespace kinverify
