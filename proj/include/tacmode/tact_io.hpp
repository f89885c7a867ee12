#pragma once

#include <cstdint>
#include <filesystem>

#include "tacmode/image.hpp"

namespace tacmode {

// TACT tensor files, the wire format between the sampler and an external
// denoiser. All integers are little-endian u32, floats are little-endian
// 32-bit.
//
// request: "TACT" | version=1 | H | W | C | t | H*W*C floats | H*W mask bytes
// reply:   "TACT" | version=1 | H | W | C     | H*W*C floats
//
// The denoiser program is invoked as: program <request path> <reply path>
// and must exit 0 on success.

inline constexpr std::uint32_t kTactVersion = 1;

struct TactRequest {
    TactileImage image;
    MarkerMask mask;
    std::uint32_t t = 0;
};

void write_tact_request(const TactRequest& req, const std::filesystem::path& path);
TactRequest read_tact_request(const std::filesystem::path& path);

void write_tact_reply(const TactileImage& img, const std::filesystem::path& path);
TactileImage read_tact_reply(const std::filesystem::path& path);

} // namespace tacmode
