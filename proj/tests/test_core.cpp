#include "doctest.h"

#include <png.h>

#include <cstdio>
#include <fstream>

#include "tacmode/image.hpp"
#include "tacmode/png_io.hpp"
#include "tacmode/rng.hpp"
#include "test_helpers.hpp"

using namespace tacmode;

namespace {

// 16-bit grayscale fixture for the unsupported-depth error path
void write_png16(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, 2, 2, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::uint8_t row[4] = {0x12, 0x34, 0x56, 0x78};
    png_bytep rows[2] = {const_cast<png_bytep>(row), const_cast<png_bytep>(row)};
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

} // namespace

TEST_CASE("image and mask invariants") {
    TactileImage img(4, 3, 0.5f);
    CHECK(img.size() == 4 * 3 * 3);
    CHECK(img.is_normalized());
    img.at(1, 2, 0) = 1.5f;
    CHECK_FALSE(img.is_normalized());
    img.clamp01();
    CHECK(img.at(1, 2, 0) == 1.0f);

    MarkerMask mask(4, 3, 0);
    CHECK(mask.size() == 12);
    mask.at(0, 0) = 1;
    CHECK(mask.count_set() == 1);
    CHECK_THROWS(TactileImage(0, 5));
}

TEST_CASE("crop: identity, single pixel, composition") {
    testutil::ScratchDir scratch("crop");
    Rng rng(7);
    const TactileImage img = testutil::random_image(13, 9, rng);

    SUBCASE("full-image rect is an identical copy") {
        const TactileImage out = crop(img, {0, 0, 13, 9});
        CHECK(testutil::bit_equal(out, img));
    }
    SUBCASE("1x1 rect picks the top-left pixel") {
        const TactileImage out = crop(img, {0, 0, 1, 1});
        for (int c = 0; c < 3; ++c) CHECK(out.at(0, 0, c) == img.at(0, 0, c));
    }
    SUBCASE("nested crops compose") {
        const Rect a{2, 1, 8, 6};
        const Rect b{3, 2, 4, 3};
        const TactileImage once = crop(crop(img, a), b);
        const TactileImage composed = crop(img, {a.x0 + b.x0, a.y0 + b.y0, b.w, b.h});
        CHECK(testutil::bit_equal(once, composed));
    }
    SUBCASE("out-of-bounds rect throws") {
        CHECK_THROWS(crop(img, {10, 0, 8, 4}));
        CHECK_THROWS(crop(img, {-1, 0, 4, 4}));
        CHECK_THROWS(crop(img, {0, 0, 0, 4}));
    }
    SUBCASE("mask crop preserves binary values") {
        MarkerMask mask = testutil::random_mask(13, 9, 0.3, rng);
        const MarkerMask out = crop(mask, {1, 1, 10, 7});
        for (std::uint8_t v : out.data()) CHECK(v <= 1);
    }
}

TEST_CASE("dilate grows a mask by Chebyshev distance") {
    MarkerMask mask(7, 7, 0);
    mask.at(3, 3) = 1;
    const MarkerMask grown = dilate(mask, 1);
    CHECK(grown.count_set() == 9);
    for (int y = 2; y <= 4; ++y)
        for (int x = 2; x <= 4; ++x) CHECK(grown.at(x, y) == 1);
    CHECK(grown.at(1, 3) == 0);

    // radius 0 is the identity; edges clip
    CHECK(dilate(mask, 0).data() == mask.data());
    MarkerMask corner(4, 4, 0);
    corner.at(0, 0) = 1;
    CHECK(dilate(corner, 2).count_set() == 9);
    CHECK_THROWS_AS(dilate(mask, -1), std::invalid_argument);
}

TEST_CASE("png: quantization anchors") {
    testutil::ScratchDir scratch("png_quant");

    TactileImage img(2, 1);
    img.at(0, 0, 0) = 1.0f; // stored byte 255
    img.at(1, 0, 0) = 0.5f; // stored byte 128 (round-half-up)
    save_png(img, scratch.path / "img.png");
    const TactileImage back = load_image_png(scratch.path / "img.png");
    CHECK(back.at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(back.at(1, 0, 0) == doctest::Approx(128.0 / 255.0));

    // 1x1 red pixel maps to {1, 0, 0}
    TactileImage red(1, 1);
    red.at(0, 0, 0) = 1.0f;
    save_png(red, scratch.path / "red.png");
    const TactileImage red_back = load_image_png(scratch.path / "red.png");
    CHECK(red_back.at(0, 0, 0) == 1.0f);
    CHECK(red_back.at(0, 0, 1) == 0.0f);
    CHECK(red_back.at(0, 0, 2) == 0.0f);

    // mask value 1 stores as byte 255; threshold sits between 127 and 128
    MarkerMask mask(2, 1, 0);
    mask.at(0, 0) = 1;
    save_png(mask, scratch.path / "mask.png");
    const MarkerMask mask_back = load_mask_png(scratch.path / "mask.png");
    CHECK(mask_back.at(0, 0) == 1);
    CHECK(mask_back.at(1, 0) == 0);

    // gray image at exactly 128 vs 127 through the mask loader
    TactileImage gray(2, 1);
    for (int c = 0; c < 3; ++c) {
        gray.at(0, 0, c) = 128.0f / 255.0f;
        gray.at(1, 0, c) = 127.0f / 255.0f;
    }
    save_png(gray, scratch.path / "gray.png");
    const MarkerMask thresholded = load_mask_png(scratch.path / "gray.png");
    CHECK(thresholded.at(0, 0) == 1);
    CHECK(thresholded.at(1, 0) == 0);
}

TEST_CASE("png: save/load round trip stays within half a quantization step") {
    testutil::ScratchDir scratch("png_roundtrip");
    Rng rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const TactileImage img = testutil::random_image(17, 11, rng);
        save_png(img, scratch.path / "t.png");
        const TactileImage back = load_image_png(scratch.path / "t.png");
        REQUIRE(back.same_size(img));
        CHECK(testutil::max_abs_diff(img, back) <= 1.0 / 510.0 + 1e-9);
    }
    // masks round-trip exactly
    MarkerMask mask = testutil::random_mask(17, 11, 0.4, rng);
    save_png(mask, scratch.path / "m.png");
    CHECK(load_mask_png(scratch.path / "m.png").data() == mask.data());
}

TEST_CASE("png: error paths") {
    testutil::ScratchDir scratch("png_errors");

    CHECK_THROWS_WITH_AS(load_image_png(scratch.path / "missing.png"),
                         doctest::Contains("no such file"), std::runtime_error);

    std::ofstream bad(scratch.path / "bad.png", std::ios::binary);
    bad << "this is not a png";
    bad.close();
    CHECK_THROWS_WITH_AS(load_image_png(scratch.path / "bad.png"),
                         doctest::Contains("not a PNG"), std::runtime_error);

    // truncated but correctly signed file
    TactileImage img(8, 8, 0.5f);
    save_png(img, scratch.path / "trunc.png");
    {
        std::ifstream in(scratch.path / "trunc.png", std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(scratch.path / "trunc.png", std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_image_png(scratch.path / "trunc.png"), std::runtime_error);

    write_png16(scratch.path / "deep.png");
    CHECK_THROWS_WITH_AS(load_image_png(scratch.path / "deep.png"),
                         doctest::Contains("unsupported bit depth"), std::runtime_error);
    CHECK_THROWS_AS(load_mask_png(scratch.path / "deep.png"), std::runtime_error);
}
