#pragma once

#include <vector>

#include "tacmode/image.hpp"

namespace tacmode {

// Minimal uniform-stride set of square patches covering the image. The stride
// remainder goes to the last step, so the final origin sits flush with the
// image edge.
struct PatchLayout {
    int image_w = 0;
    int image_h = 0;
    int patch = 0;
    std::vector<Rect> origins;

    std::size_t size() const { return origins.size(); }
};

PatchLayout plan_patches(int w, int h, int patch);

// Cuts the image into the layout's patches.
std::vector<TactileImage> slice_patches(const TactileImage& img, const PatchLayout& layout);
std::vector<MarkerMask> slice_patches(const MarkerMask& mask, const PatchLayout& layout);

// Per-pixel arithmetic mean of every patch covering the pixel. Pixels covered
// once copy their patch value exactly.
TactileImage merge_patches(const PatchLayout& layout, const std::vector<TactileImage>& patches);

} // namespace tacmode
