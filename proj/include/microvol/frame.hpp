#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace microvol {

/// 8-bit RGBA image, row-major, top row first. RGB is composited over black
/// (premultiplied); alpha is the accumulated opacity.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgba;

    Frame() = default;
    Frame(int w, int h) : width(w), height(h), rgba(static_cast<std::size_t>(w) * h * 4, 0) {}

    std::uint8_t* pixel(int x, int y) { return rgba.data() + (static_cast<std::size_t>(y) * width + x) * 4; }
    const std::uint8_t* pixel(int x, int y) const {
        return rgba.data() + (static_cast<std::size_t>(y) * width + x) * 4;
    }
    friend bool operator==(const Frame&, const Frame&) = default;
};

std::vector<std::uint8_t> encode_png(const Frame& frame);
Frame decode_png(std::span<const std::uint8_t> bytes);
void write_png(const std::filesystem::path& path, const Frame& frame);
Frame read_png(const std::filesystem::path& path);

}  // namespace microvol
