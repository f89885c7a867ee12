#include "tacmode/image.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tacmode {

TactileImage::TactileImage(int width, int height, float fill)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("TactileImage: dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

bool TactileImage::is_normalized() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](float v) { return v >= 0.0f && v <= 1.0f; });
}

void TactileImage::clamp01() {
    for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
}

MarkerMask::MarkerMask(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("MarkerMask: dimensions must be positive");
    if (fill > 1)
        throw std::invalid_argument("MarkerMask: fill must be 0 or 1");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

std::size_t MarkerMask::count_set() const {
    std::size_t n = 0;
    for (std::uint8_t v : data_) n += v;
    return n;
}

bool MarkerMask::all() const {
    return std::all_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v == 1; });
}

void check_rect(const Rect& r, int w, int h) {
    if (r.w <= 0 || r.h <= 0 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > w || r.y0 + r.h > h)
        throw std::invalid_argument(
            "rect [" + std::to_string(r.x0) + "," + std::to_string(r.y0) + " " +
            std::to_string(r.w) + "x" + std::to_string(r.h) + "] out of bounds for " +
            std::to_string(w) + "x" + std::to_string(h));
}

TactileImage crop(const TactileImage& img, const Rect& r) {
    check_rect(r, img.width(), img.height());
    TactileImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < TactileImage::kChannels; ++c)
                out.at(x, y, c) = img.at(r.x0 + x, r.y0 + y, c);
    return out;
}

MarkerMask crop(const MarkerMask& mask, const Rect& r) {
    check_rect(r, mask.width(), mask.height());
    MarkerMask out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            out.at(x, y) = mask.at(r.x0 + x, r.y0 + y);
    return out;
}

MarkerMask dilate(const MarkerMask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("dilate: radius must be non-negative");
    if (radius == 0) return mask;
    const int w = mask.width(), h = mask.height();
    MarkerMask out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
            for (int yy = y0; yy <= y1; ++yy)
                for (int xx = x0; xx <= x1; ++xx) out.at(xx, yy) = 1;
        }
    }
    return out;
}

} // namespace tacmode
