#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

#include <png.h>

#include "triband/bev.hpp"
#include "triband/errors.hpp"

namespace triband {

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major H x W x 3
};

inline void write_png(const RgbImage& img, const std::filesystem::path& path) {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp)
        throw IoError("cannot open for write: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("png write failed: " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int r = 0; r < img.height; ++r)
        rows[r] = const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(r) * img.width * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

inline RgbImage read_png(const std::filesystem::path& path) {
    std::FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp)
        throw IoError("cannot open: " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("png read failed: " + path.string());
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    RgbImage img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    std::vector<png_bytep> rows(img.height);
    for (int r = 0; r < img.height; ++r)
        rows[r] = img.pixels.data() + static_cast<std::size_t>(r) * img.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

/// Render a BEV image as an RGB PNG. Row 0 corresponds to the y_min edge;
/// bands 1..3 map to the R, G, B channels.
inline void render_png(const BevImage& img, const std::filesystem::path& path) {
    RgbImage rgb;
    rgb.width = img.width();
    rgb.height = img.height();
    rgb.pixels = img.pixels;
    write_png(rgb, path);
}

// ---------------------------------------------------------------------------
// Raw tensor sidecar: "TBT1" magic, u32 height/width/channels, byte payload.
// Avoids PNG re-decode between the encode and inference stages.

inline void write_bev_tensor(const BevImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open for write: " + path.string());
    const char magic[4] = {'T', 'B', 'T', '1'};
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(img.height()),
                                   static_cast<std::uint32_t>(img.width()), 3u};
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out)
        throw IoError("short write on " + path.string());
}

inline BevImage read_bev_tensor(const std::filesystem::path& path, const GridConfig& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open: " + path.string());
    char magic[4];
    std::uint32_t dims[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || std::string_view(magic, 4) != "TBT1")
        throw MalformedFile("bad tensor header: " + path.string());
    if (dims[0] != static_cast<std::uint32_t>(grid.height()) ||
        dims[1] != static_cast<std::uint32_t>(grid.width()) || dims[2] != 3u)
        throw MalformedFile("tensor dims disagree with grid config: " + path.string());
    BevImage img(grid);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in)
        throw MalformedFile("truncated tensor payload: " + path.string());
    return img;
}

} // namespace triband
