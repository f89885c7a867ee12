#include "tacmode/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace tacmode {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("png: " + path.string() + ": " + what);
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

// Decodes to 8-bit rows with `want_channels` (3 = RGB, 1 = gray).
std::vector<std::uint8_t> read_png_8bit(const std::filesystem::path& path,
                                        int want_channels, int& out_w, int& out_h) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) fail(path, "cannot open file");

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        fail(path, "not a PNG file");

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) fail(path, "png_create_read_struct failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) fail(path, "png_create_info_struct failed");

    if (setjmp(png_jmpbuf(r.png))) fail(path, "malformed PNG data");

    png_init_io(r.png, fp.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);

    if (bit_depth == 16)
        fail(path, "unsupported bit depth 16 (expected 8-bit)");

    // normalize to 8-bit gray or RGB
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
    png_set_strip_alpha(r.png);
    if (want_channels == 3)
        png_set_gray_to_rgb(r.png);
    else
        png_set_rgb_to_gray_fixed(r.png, 1 /*error_action: silent*/, -1, -1);

    png_read_update_info(r.png, r.info);
    const int channels = png_get_channels(r.png, r.info);
    if (channels != want_channels)
        fail(path, "unexpected channel count " + std::to_string(channels));

    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h * want_channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * want_channels;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);

    out_w = static_cast<int>(w);
    out_h = static_cast<int>(h);
    return pixels;
}

void write_png_8bit(const std::filesystem::path& path, const std::uint8_t* pixels,
                    int w, int h, int channels) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) fail(path, "cannot open file for writing");

    PngWriter wr;
    wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!wr.png) fail(path, "png_create_write_struct failed");
    wr.info = png_create_info_struct(wr.png);
    if (!wr.info) fail(path, "png_create_info_struct failed");

    if (setjmp(png_jmpbuf(wr.png))) fail(path, "write error");

    png_init_io(wr.png, fp.get());
    png_set_IHDR(wr.png, wr.info, w, h, 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(wr.png, wr.info);

    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * w * channels);
    png_write_image(wr.png, rows.data());
    png_write_end(wr.png, nullptr);
}

std::uint8_t quantize(float v) {
    // round-half-up on [0,1] -> [0,255]
    const float scaled = std::clamp(v, 0.0f, 1.0f) * 255.0f;
    return static_cast<std::uint8_t>(std::floor(scaled + 0.5f));
}

} // namespace

TactileImage load_image_png(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail(path, "no such file");
    int w = 0, h = 0;
    const auto pixels = read_png_8bit(path, 3, w, h);
    TactileImage img(w, h);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        img.data()[i] = static_cast<float>(pixels[i]) / 255.0f;
    return img;
}

MarkerMask load_mask_png(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail(path, "no such file");
    int w = 0, h = 0;
    const auto pixels = read_png_8bit(path, 1, w, h);
    MarkerMask mask(w, h);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        mask.data()[i] = pixels[i] > 127 ? 1 : 0;
    return mask;
}

void save_png(const TactileImage& img, const std::filesystem::path& path) {
    if (img.width() == 0) throw std::invalid_argument("save_png: empty image");
    std::vector<std::uint8_t> pixels(img.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = quantize(img.data()[i]);
    write_png_8bit(path, pixels.data(), img.width(), img.height(), 3);
}

void save_png(const MarkerMask& mask, const std::filesystem::path& path) {
    if (mask.width() == 0) throw std::invalid_argument("save_png: empty mask");
    std::vector<std::uint8_t> pixels(mask.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = mask.data()[i] ? 255 : 0;
    write_png_8bit(path, pixels.data(), mask.width(), mask.height(), 1);
}

} // namespace tacmode
