#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tacmode {

// Axis-aligned pixel rectangle. x = column index, y = row index, origin top-left.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;
};

// H x W x 3 tactile image, row-major, channel-interleaved floats.
// Nominal range is [0,1]; diffusion intermediates may leave it and are
// clamped once at emission (see diffusion.hpp).
class TactileImage {
public:
    static constexpr int kChannels = 3;

    TactileImage() = default;
    TactileImage(int width, int height, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    float& at(int x, int y, int c) { return data_[idx(x, y, c)]; }
    float at(int x, int y, int c) const { return data_[idx(x, y, c)]; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool same_size(const TactileImage& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    // True when every value lies in [0,1].
    bool is_normalized() const;
    // Clamp all values into [0,1].
    void clamp01();

private:
    std::size_t idx(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

// H x W binary mask, row-major, values exactly 0 or 1.
class MarkerMask {
public:
    MarkerMask() = default;
    MarkerMask(int width, int height, std::uint8_t fill = 0);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<std::uint8_t>& data() { return data_; }
    const std::vector<std::uint8_t>& data() const { return data_; }

    bool same_size(const MarkerMask& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    std::size_t count_set() const;
    bool any() const { return count_set() > 0; }
    bool all() const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Throws std::invalid_argument when r does not fit inside (w, h).
void check_rect(const Rect& r, int w, int h);

TactileImage crop(const TactileImage& img, const Rect& r);
MarkerMask crop(const MarkerMask& mask, const Rect& r);

// Chebyshev dilation: a pixel is set when any set pixel lies within L-inf
// distance `radius`. Grows extracted marker masks over anti-aliased rims.
MarkerMask dilate(const MarkerMask& mask, int radius);

} // namespace tacmode
