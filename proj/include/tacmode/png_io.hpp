#pragma once

#include <filesystem>

#include "tacmode/image.hpp"

namespace tacmode {

// 8-bit PNG IO. Images are RGB (alpha stripped if present, palette expanded),
// masks are grayscale thresholded at >127. 16-bit files are rejected.
// Values map by v/255 on load and round(v*255) on save, so a save/load
// round trip is exact to within 1/510 per channel.

TactileImage load_image_png(const std::filesystem::path& path);
MarkerMask load_mask_png(const std::filesystem::path& path);

void save_png(const TactileImage& img, const std::filesystem::path& path);
void save_png(const MarkerMask& mask, const std::filesystem::path& path);

} // namespace tacmode
