#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kinverify {

/// Per-pixel binary codes produced by an encoder. Every code is in
/// [0, 2^code_bits).
struct CodeMap {
    int width = 0;
    int height = 0;
    int code_bits = 0;
    std::vector<std::uint32_t> codes;  // row-major

    CodeMap() = default;
    CodeMap(int w, int h, int bits)
        : width(w), height(h), code_bits(bits), codes(std::size_t(w) * std::size_t(h), 0) {}

    std::uint32_t operator()(int x, int y) const {
        return codes[std::size_t(y) * std::size_t(width) + std::size_t(x)];
    }
    std::span<std::uint32_t> row(int y) {
        return {codes.data() + std::size_t(y) * std::size_t(width), std::size_t(width)};
    }

    std::size_t bins() const noexcept { return std::size_t(1) << code_bits; }

    friend bool operator==(const CodeMap&, const CodeMap&) = default;
};

}  // namespace kinverify
