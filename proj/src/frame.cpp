#include "microvol/frame.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <png.h>

#include "microvol/errors.hpp"

namespace microvol {

namespace {

void write_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + length > cur->bytes.size()) png_error(png, "truncated PNG");
    std::memcpy(data, cur->bytes.data() + cur->offset, length);
    cur->offset += length;
}

[[noreturn]] void error_callback(png_structp, png_const_charp message) { throw FormatError(std::string("PNG: ") + message); }
void warning_callback(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const Frame& frame) {
    if (frame.width <= 0 || frame.height <= 0) throw DomainError("cannot encode an empty frame");
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &out, write_callback, flush_callback);
        png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width), static_cast<png_uint_32>(frame.height), 8,
                     PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < frame.height; ++y) png_write_row(png, frame.pixel(0, y));
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

Frame decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError("not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
    if (!png) throw Error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes, 0};
    Frame frame;
    try {
        png_set_read_fn(png, &cursor, read_callback);
        png_read_info(png, info);
        png_set_expand(png);
        png_set_strip_16(png);
        png_set_gray_to_rgb(png);
        png_set_add_alpha(png, 0xff, PNG_FILLER_AFTER);
        png_read_update_info(png, info);
        frame = Frame(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
        for (int y = 0; y < frame.height; ++y) png_read_row(png, frame.pixel(0, y), nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return frame;
}

void write_png(const std::filesystem::path& path, const Frame& frame) {
    const auto bytes = encode_png(frame);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Frame read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace microvol
