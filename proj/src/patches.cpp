#include "tacmode/patches.hpp"

#include <stdexcept>
#include <string>

namespace tacmode {

namespace {

// Origin positions along one axis: n = ceil((extent-patch)/patch) + 1 patches,
// uniform integer stride, remainder folded into the last step.
std::vector<int> axis_origins(int extent, int patch) {
    const int span = extent - patch;
    if (span == 0) return {0};
    const int n = (span + patch - 1) / patch + 1;
    const int stride = span / (n - 1);
    std::vector<int> origins(n);
    for (int i = 0; i < n - 1; ++i) origins[i] = i * stride;
    origins[n - 1] = span;
    return origins;
}

} // namespace

PatchLayout plan_patches(int w, int h, int patch) {
    if (patch <= 0) throw std::invalid_argument("plan_patches: patch must be positive");
    if (patch > w || patch > h)
        throw std::invalid_argument("plan_patches: patch " + std::to_string(patch) +
                                    " exceeds image " + std::to_string(w) + "x" +
                                    std::to_string(h));
    PatchLayout layout;
    layout.image_w = w;
    layout.image_h = h;
    layout.patch = patch;
    for (int y : axis_origins(h, patch))
        for (int x : axis_origins(w, patch))
            layout.origins.push_back({x, y, patch, patch});
    return layout;
}

std::vector<TactileImage> slice_patches(const TactileImage& img, const PatchLayout& layout) {
    std::vector<TactileImage> out;
    out.reserve(layout.size());
    for (const Rect& r : layout.origins) out.push_back(crop(img, r));
    return out;
}

std::vector<MarkerMask> slice_patches(const MarkerMask& mask, const PatchLayout& layout) {
    std::vector<MarkerMask> out;
    out.reserve(layout.size());
    for (const Rect& r : layout.origins) out.push_back(crop(mask, r));
    return out;
}

TactileImage merge_patches(const PatchLayout& layout, const std::vector<TactileImage>& patches) {
    if (patches.size() != layout.size())
        throw std::invalid_argument("merge_patches: expected " + std::to_string(layout.size()) +
                                    " patches, got " + std::to_string(patches.size()));
    for (const TactileImage& p : patches)
        if (p.width() != layout.patch || p.height() != layout.patch)
            throw std::invalid_argument("merge_patches: patch dimensions do not match layout");

    const int w = layout.image_w, h = layout.image_h;
    std::vector<double> acc(static_cast<std::size_t>(w) * h * TactileImage::kChannels, 0.0);
    std::vector<std::uint32_t> cover(static_cast<std::size_t>(w) * h, 0);

    for (std::size_t p = 0; p < patches.size(); ++p) {
        const Rect& r = layout.origins[p];
        for (int y = 0; y < r.h; ++y) {
            for (int x = 0; x < r.w; ++x) {
                const std::size_t i = static_cast<std::size_t>(r.y0 + y) * w + (r.x0 + x);
                ++cover[i];
                for (int c = 0; c < TactileImage::kChannels; ++c)
                    acc[i * TactileImage::kChannels + c] += patches[p].at(x, y, c);
            }
        }
    }

    TactileImage out(w, h);
    for (std::size_t i = 0; i < cover.size(); ++i) {
        if (cover[i] == 0)
            throw std::logic_error("merge_patches: layout leaves a pixel uncovered");
        for (int c = 0; c < TactileImage::kChannels; ++c)
            out.data()[i * TactileImage::kChannels + c] =
                static_cast<float>(acc[i * TactileImage::kChannels + c] / cover[i]);
    }
    return out;
}

} // namespace tacmode
