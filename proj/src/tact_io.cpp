#include "tacmode/tact_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

namespace tacmode {

namespace {

static_assert(sizeof(float) == 4, "TACT protocol requires 32-bit floats");

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("tact: " + path.string() + ": " + what);
}

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return __builtin_bswap32(v);
}

void put_u32(std::FILE* f, std::uint32_t v) {
    const std::uint32_t le = to_le(v);
    std::fwrite(&le, 4, 1, f);
}

std::uint32_t get_u32(std::FILE* f, const std::filesystem::path& path) {
    std::uint32_t v = 0;
    if (std::fread(&v, 4, 1, f) != 1) fail(path, "truncated header");
    return to_le(v);
}

void put_floats(std::FILE* f, const std::vector<float>& data) {
    if constexpr (std::endian::native == std::endian::little) {
        std::fwrite(data.data(), 4, data.size(), f);
    } else {
        for (float v : data) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(f, bits);
        }
    }
}

void get_floats(std::FILE* f, std::vector<float>& data, const std::filesystem::path& path) {
    if constexpr (std::endian::native == std::endian::little) {
        if (std::fread(data.data(), 4, data.size(), f) != data.size())
            fail(path, "truncated float payload");
    } else {
        for (float& v : data) {
            const std::uint32_t bits = get_u32(f, path);
            std::memcpy(&v, &bits, 4);
        }
    }
}

void check_magic_version(std::FILE* f, const std::filesystem::path& path) {
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "TACT", 4) != 0)
        fail(path, "bad magic (expected \"TACT\")");
    const std::uint32_t version = get_u32(f, path);
    if (version != kTactVersion)
        fail(path, "unsupported version " + std::to_string(version));
}

} // namespace

void write_tact_request(const TactRequest& req, const std::filesystem::path& path) {
    if (req.image.width() != req.mask.width() || req.image.height() != req.mask.height())
        throw std::invalid_argument("tact: request image/mask dimension mismatch");
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) fail(path, "cannot open for writing");
    std::fwrite("TACT", 1, 4, f.get());
    put_u32(f.get(), kTactVersion);
    put_u32(f.get(), static_cast<std::uint32_t>(req.image.height()));
    put_u32(f.get(), static_cast<std::uint32_t>(req.image.width()));
    put_u32(f.get(), TactileImage::kChannels);
    put_u32(f.get(), req.t);
    put_floats(f.get(), req.image.data());
    if (std::fwrite(req.mask.data().data(), 1, req.mask.size(), f.get()) != req.mask.size())
        fail(path, "short write");
}

TactRequest read_tact_request(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) fail(path, "cannot open");
    check_magic_version(f.get(), path);
    const std::uint32_t h = get_u32(f.get(), path);
    const std::uint32_t w = get_u32(f.get(), path);
    const std::uint32_t c = get_u32(f.get(), path);
    const std::uint32_t t = get_u32(f.get(), path);
    if (c != TactileImage::kChannels) fail(path, "expected 3 channels");
    if (w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16) fail(path, "implausible dimensions");

    TactRequest req;
    req.image = TactileImage(static_cast<int>(w), static_cast<int>(h));
    req.mask = MarkerMask(static_cast<int>(w), static_cast<int>(h));
    req.t = t;
    get_floats(f.get(), req.image.data(), path);
    if (std::fread(req.mask.data().data(), 1, req.mask.size(), f.get()) != req.mask.size())
        fail(path, "truncated mask payload");
    for (std::uint8_t& v : req.mask.data())
        if (v > 1) fail(path, "mask bytes must be 0 or 1");
    return req;
}

void write_tact_reply(const TactileImage& img, const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) fail(path, "cannot open for writing");
    std::fwrite("TACT", 1, 4, f.get());
    put_u32(f.get(), kTactVersion);
    put_u32(f.get(), static_cast<std::uint32_t>(img.height()));
    put_u32(f.get(), static_cast<std::uint32_t>(img.width()));
    put_u32(f.get(), TactileImage::kChannels);
    put_floats(f.get(), img.data());
}

TactileImage read_tact_reply(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) fail(path, "cannot open");
    check_magic_version(f.get(), path);
    const std::uint32_t h = get_u32(f.get(), path);
    const std::uint32_t w = get_u32(f.get(), path);
    const std::uint32_t c = get_u32(f.get(), path);
    if (c != TactileImage::kChannels) fail(path, "expected 3 channels");
    if (w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16) fail(path, "implausible dimensions");
    TactileImage img(static_cast<int>(w), static_cast<int>(h));
    get_floats(f.get(), img.data(), path);
    return img;
}

} // namespace tacmode
