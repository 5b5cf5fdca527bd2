#ifndef GABORSPLAT_PNG_IO_HPP
#define GABORSPLAT_PNG_IO_HPP

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/dataset.hpp"
#include "gaborsplat/image.hpp"

namespace gsp {

// libpng reports through these instead of printing to stderr; the message
// lands in the std::string behind error_ptr.
inline void png_capture_error(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err && err->empty() && msg) *err = msg;
    png_longjmp(png, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

// 8-bit RGB in, values / 255, no gamma handling. Palette and grayscale
// files are expanded, alpha is stripped, 16-bit files are rejected.
inline Image load_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open '" + path + "'");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("png: out of memory");
    }

    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    std::string err;
    png_set_error_fn(png, &err, png_capture_error, png_ignore_warning);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("'" + path + "': " + (err.empty() ? "invalid PNG" : err));
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    if (png_get_bit_depth(png, info) == 16) {
        err = "16-bit PNG unsupported";
        longjmp(png_jmpbuf(png), 1);
    }
    png_byte color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    int w = int(png_get_image_width(png, info));
    int h = int(png_get_image_height(png, info));
    if (w < 1 || h < 1 || png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
        err = "unsupported PNG layout";
        longjmp(png_jmpbuf(png), 1);
    }
    if (std::int64_t(w) * h > (std::int64_t(1) << 24)) {
        err = "image too large";
        longjmp(png_jmpbuf(png), 1);
    }

    pixels.resize(size_t(w) * h * 3);
    rows.resize(h);
    for (int y = 0; y < h; ++y) rows[y] = pixels.data() + size_t(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    Image img(w, h, 3);
    for (size_t i = 0; i < pixels.size(); ++i) img.data[i] = Real(pixels[i]) / 255.0;
    return img;
}

// Quantizes round(clamp(v) * 255); byte output depends only on the pixels.
inline void save_png(const std::string& path, const Image& img) {
    if (img.channels != 3 || img.width < 1 || img.height < 1)
        throw std::invalid_argument("save_png: need a non-empty 3-channel image");

    std::vector<png_byte> pixels(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        Real v = img.data[i];
        v = v < 0 ? 0 : (v > 1 ? 1 : v);
        pixels[i] = png_byte(std::lround(v * 255.0));
    }
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = pixels.data() + size_t(y) * img.width * 3;

    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open '" + path + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("png: out of memory");
    }
    std::string err;
    png_set_error_fn(png, &err, png_capture_error, png_ignore_warning);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("'" + path + "': PNG write failed" +
                                 (err.empty() ? "" : " (" + err + ")"));
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) throw std::runtime_error("'" + path + "': close failed");
}

inline void load_view_images(Dataset& ds) {
    for (View& v : ds.views) v.image = load_png(v.path);
    ds.validate();
}

}  // namespace gsp

#endif
