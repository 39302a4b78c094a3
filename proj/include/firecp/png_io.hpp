#pragma once

// PNG reading and writing. Images are 8-bit RGB. Masks are paletted PNGs in
// which palette index i is class id i; 8-bit grayscale masks holding raw class
// ids are accepted on read.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "firecp/error.hpp"
#include "firecp/imgcore.hpp"

namespace firecp {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw Error("io_error", "cannot open '" + path.string() + "'");
    return f;
}

// Display colours for the four classes. Only the indices carry meaning.
inline constexpr png_color kMaskPalette[kNumClasses] = {
    {0, 0, 0},        // background
    {128, 128, 128},  // ash
    {0, 160, 0},      // vegetation
    {255, 64, 0},     // fire
};

}  // namespace detail

inline Raster read_rgb_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw Error("io_error", "cannot read PNG '" + path.string() + "': " + image.message);
    image.format = PNG_FORMAT_RGB;
    Raster out(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error("io_error", "cannot decode PNG '" + path.string() + "': " + msg);
    }
    return out;
}

inline void write_rgb_png(const std::filesystem::path& path, const Raster& img) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.data.data(), 0, nullptr))
        throw Error("io_error", "cannot write PNG '" + path.string() + "': " + image.message);
}

inline ClassMask read_mask_png(const std::filesystem::path& path) {
    auto file = detail::open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("io_error", "libpng initialisation failed");
    }
    ClassMask out;
    std::string failure;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("io_error", "cannot decode mask PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE || (color_type == PNG_COLOR_TYPE_GRAY && bit_depth <= 8)) {
        if (bit_depth < 8) png_set_packing(png);
        png_read_update_info(png, info);
        out = ClassMask(static_cast<int>(width), static_cast<int>(height));
        rows.resize(height);
        for (png_uint_32 y = 0; y < height; ++y) rows[y] = out.labels.data() + static_cast<std::size_t>(y) * width;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    } else {
        failure = "mask PNG must be paletted or 8-bit grayscale: '" + path.string() + "'";
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!failure.empty()) throw Error("invalid_mask", failure);
    validate(out);
    return out;
}

inline void write_mask_png(const std::filesystem::path& path, const ClassMask& mask) {
    validate(mask);
    auto file = detail::open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("io_error", "libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("io_error", "cannot write mask PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width), static_cast<png_uint_32>(mask.height), 8,
                 PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_PLTE(png, info, detail::kMaskPalette, kNumClasses);
    png_write_info(png, info);
    for (int y = 0; y < mask.height; ++y)
        png_write_row(png, mask.labels.data() + static_cast<std::size_t>(y) * mask.width);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace firecp
