#include "tacmode/diffusion.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "tacmode/tact_io.hpp"

namespace tacmode {

NoiseSchedule schedule_linear(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw std::invalid_argument("schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule sched;
    sched.betas.resize(static_cast<std::size_t>(T));
    sched.alpha_bars.resize(static_cast<std::size_t>(T) + 1);
    sched.alpha_bars[0] = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        const double beta = beta_start + frac * (beta_end - beta_start);
        sched.betas[static_cast<std::size_t>(t - 1)] = beta;
        sched.alpha_bars[static_cast<std::size_t>(t)] =
            sched.alpha_bars[static_cast<std::size_t>(t - 1)] * (1.0 - beta);
    }
    return sched;
}

namespace {

void check_step(int t, const NoiseSchedule& sched) {
    if (t < 0 || t > sched.steps())
        throw std::invalid_argument("diffusion: step " + std::to_string(t) +
                                    " outside schedule [0, " + std::to_string(sched.steps()) + "]");
}

} // namespace

TactileImage add_noise_with(const TactileImage& clean, int t, const NoiseSchedule& sched,
                            const TactileImage& noise) {
    check_step(t, sched);
    if (!clean.same_size(noise))
        throw std::invalid_argument("add_noise: clean/noise dimension mismatch");
    if (t == 0) return clean;
    const double abar = sched.alpha_bar(t);
    const double signal = std::sqrt(abar);
    const double spread = std::sqrt(1.0 - abar);
    TactileImage out = clean;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = static_cast<float>(signal * clean.data()[i] + spread * noise.data()[i]);
    return out;
}

TactileImage add_noise(const TactileImage& clean, int t, const NoiseSchedule& sched, Rng& rng) {
    check_step(t, sched);
    if (t == 0) return clean;
    TactileImage noise(clean.width(), clean.height());
    for (float& v : noise.data()) v = static_cast<float>(rng.normal());
    return add_noise_with(clean, t, sched, noise);
}

DenoiserHandle DenoiserHandle::oracle(TactileImage clean) {
    DenoiserHandle h;
    h.kind = Kind::oracle;
    h.oracle_clean = std::move(clean);
    return h;
}

DenoiserHandle DenoiserHandle::classical(double sigma_max) {
    DenoiserHandle h;
    h.kind = Kind::classical;
    h.smooth_sigma_max = sigma_max;
    return h;
}

DenoiserHandle DenoiserHandle::external(std::filesystem::path program, int patch_size) {
    DenoiserHandle h;
    h.kind = Kind::external;
    h.program = std::move(program);
    h.patch_size = patch_size;
    return h;
}

void DenoiserHandle::validate() const {
    if (patch_size < 16)
        throw std::invalid_argument("denoiser: patch_size must be >= 16");
    if (kind == Kind::external && program.empty())
        throw std::invalid_argument("denoiser: external handle needs a program path");
    if (kind == Kind::oracle && oracle_clean.width() == 0)
        throw std::invalid_argument("denoiser: oracle handle needs a clean image");
}

TactileImage gaussian_blur(const TactileImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(radius) + 1);
    for (int k = 0; k <= radius; ++k)
        kernel[static_cast<std::size_t>(k)] = std::exp(-0.5 * k * k / (sigma * sigma));

    const int w = img.width(), h = img.height();
    TactileImage tmp(w, h), out(w, h);

    // horizontal pass, kernel renormalized over the in-bounds support
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[TactileImage::kChannels] = {0, 0, 0};
            double wsum = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = x + k;
                if (xx < 0 || xx >= w) continue;
                const double kw = kernel[static_cast<std::size_t>(std::abs(k))];
                wsum += kw;
                for (int c = 0; c < TactileImage::kChannels; ++c)
                    acc[c] += kw * img.at(xx, y, c);
            }
            for (int c = 0; c < TactileImage::kChannels; ++c)
                tmp.at(x, y, c) = static_cast<float>(acc[c] / wsum);
        }
    }
    // vertical pass
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[TactileImage::kChannels] = {0, 0, 0};
            double wsum = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = y + k;
                if (yy < 0 || yy >= h) continue;
                const double kw = kernel[static_cast<std::size_t>(std::abs(k))];
                wsum += kw;
                for (int c = 0; c < TactileImage::kChannels; ++c)
                    acc[c] += kw * tmp.at(x, yy, c);
            }
            for (int c = 0; c < TactileImage::kChannels; ++c)
                out.at(x, y, c) = static_cast<float>(acc[c] / wsum);
        }
    }
    return out;
}

TactileImage classical_denoiser(const TactileImage& noisy, int t, const NoiseSchedule& sched,
                                double sigma_max) {
    check_step(t, sched);
    // smoothing scale tracks the noise level: wide early, narrow late; the
    // floor of 2 px keeps late-step residual noise from surviving the loop
    const double frac = sched.steps() > 0 ? static_cast<double>(t) / sched.steps() : 0.0;
    const double sigma = std::max(t > 0 ? 2.0 : 1.0, sigma_max * frac);
    TactileImage smoothed = gaussian_blur(noisy, sigma);
    const double scale = 1.0 / std::sqrt(sched.alpha_bar(t));
    if (scale != 1.0)
        for (float& v : smoothed.data()) v = static_cast<float>(v * scale);
    return smoothed;
}

namespace {

std::filesystem::path unique_temp_path(const char* tag) {
    static std::atomic<std::uint64_t> counter{0};
    const auto n = counter.fetch_add(1);
    std::ostringstream name;
    name << "tacmode_" << tag << "_" << ::getpid() << "_" << n << ".tact";
    return std::filesystem::temp_directory_path() / name.str();
}

struct TempFile {
    std::filesystem::path path;
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

} // namespace

TactileImage external_denoiser(const TactileImage& noisy, const MarkerMask& mask, int t,
                               const DenoiserHandle& handle) {
    handle.validate();
    if (handle.kind != DenoiserHandle::Kind::external)
        throw std::invalid_argument("external_denoiser: handle is not external");

    TempFile request{unique_temp_path("req")};
    TempFile reply{unique_temp_path("rep")};
    write_tact_request({noisy, mask, static_cast<std::uint32_t>(t)}, request.path);

    const std::string cmd = "\"" + handle.program.string() + "\" \"" + request.path.string() +
                            "\" \"" + reply.path.string() + "\" 2>&1";
    std::string diagnostics;
    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe)
        throw std::runtime_error("external denoiser: failed to launch " +
                                 handle.program.string());
    char buf[512];
    while (std::fgets(buf, sizeof(buf), pipe)) diagnostics += buf;
    const int status = ::pclose(pipe);
    if (status != 0) {
        if (diagnostics.size() > 2000) diagnostics.resize(2000);
        throw std::runtime_error("external denoiser exited with status " +
                                 std::to_string(status) + " at step " + std::to_string(t) +
                                 (diagnostics.empty() ? "" : (": " + diagnostics)));
    }

    TactileImage out = read_tact_reply(reply.path);
    if (!out.same_size(noisy))
        throw std::runtime_error("external denoiser: reply is " + std::to_string(out.width()) +
                                 "x" + std::to_string(out.height()) + ", expected " +
                                 std::to_string(noisy.width()) + "x" +
                                 std::to_string(noisy.height()));
    return out;
}

TactileImage denoise(const DenoiserHandle& handle, const TactileImage& noisy,
                     const MarkerMask& mask, int t, const NoiseSchedule& sched) {
    switch (handle.kind) {
    case DenoiserHandle::Kind::oracle:
        if (!handle.oracle_clean.same_size(noisy))
            throw std::invalid_argument("oracle denoiser: clean image dimension mismatch");
        return handle.oracle_clean;
    case DenoiserHandle::Kind::classical:
        return classical_denoiser(noisy, t, sched, handle.smooth_sigma_max);
    case DenoiserHandle::Kind::external:
        return external_denoiser(noisy, mask, t, handle);
    }
    throw std::logic_error("denoise: unknown handle kind");
}

namespace {

// est = mask * src + (1-mask) * keep, as a per-pixel select so the known
// region stays bit-exact through every iteration.
void compose(TactileImage& est, const TactileImage& src, const TactileImage& keep,
             const MarkerMask& mask) {
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            const TactileImage& from = mask.at(x, y) ? src : keep;
            for (int c = 0; c < TactileImage::kChannels; ++c)
                est.at(x, y, c) = from.at(x, y, c);
        }
}

} // namespace

TactileImage sample(const TactileImage& image, const MarkerMask& mask,
                    const DenoiserHandle& denoiser, const NoiseSchedule& sched, Rng& rng,
                    const SampleOptions& opts) {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw std::invalid_argument("sample: image/mask dimension mismatch");
    denoiser.validate();
    if (denoiser.kind == DenoiserHandle::Kind::external &&
        (image.width() != denoiser.patch_size || image.height() != denoiser.patch_size))
        throw std::invalid_argument(
            "sample: external denoiser accepts " + std::to_string(denoiser.patch_size) + "x" +
            std::to_string(denoiser.patch_size) + " patches; route larger inputs through "
            "the patch planner");

    const int T = sched.steps();

    // est(T): pure unit noise inside the mask, the observed image outside
    TactileImage noise(image.width(), image.height());
    for (float& v : noise.data()) v = static_cast<float>(rng.normal());
    TactileImage est(image.width(), image.height());
    compose(est, noise, image, mask);

    for (int t = T; t >= 1; --t) {
        const TactileImage den = denoise(denoiser, est, mask, t, sched);
        if (!den.same_size(image))
            throw std::runtime_error("sample: denoiser changed dimensions at step " +
                                     std::to_string(t));
        const TactileImage renoised = add_noise(den, t - 1, sched, rng);
        compose(est, renoised, image, mask);
        if (opts.on_step) opts.on_step(t - 1, est);
    }
    est.clamp01();
    return est;
}

double reference_loss(const TactileImage& denoised, const TactileImage& target,
                      const MarkerMask& mask) {
    if (!denoised.same_size(target) || denoised.width() != mask.width() ||
        denoised.height() != mask.height())
        throw std::invalid_argument("reference_loss: dimension mismatch");
    double loss = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            for (int c = 0; c < TactileImage::kChannels; ++c) {
                const double d = static_cast<double>(denoised.at(x, y, c)) - target.at(x, y, c);
                loss += d * d;
            }
        }
    return loss;
}

TrainingPair make_offset_pair(const TactileImage& image, Rng& rng, int patch_size,
                              const OffsetPairOptions& opts) {
    if (patch_size > image.width() || patch_size > image.height())
        throw std::invalid_argument("make_offset_pair: patch exceeds image");

    auto [marker_mask, markers] = extract_markers(image, opts.extract);
    if (markers.empty())
        throw std::runtime_error("make_offset_pair: no markers found in image");

    // the fill uses a grown mask so anti-aliased marker rims do not leak into
    // the target; the offset/disjointness contract stays on the raw mask
    const TactileImage filled =
        inpaint_fmm({image, dilate(marker_mask, opts.fill_dilate)}, opts.fmm);

    const int offset = std::max(1, default_offset(markers));
    auto [shifted_mask, shifted_set] = offset_mask(marker_mask, markers, offset, offset);
    if (shifted_set.empty())
        throw std::runtime_error("make_offset_pair: every marker left the frame");

    // random crop that fully contains at least one translated marker
    const double r = markers.radius;
    const int max_x = image.width() - patch_size;
    const int max_y = image.height() - patch_size;
    Rect rect{0, 0, patch_size, patch_size};
    bool found = false;
    for (int attempt = 0; attempt < opts.max_crop_retries && !found; ++attempt) {
        rect.x0 = max_x == 0 ? 0 : static_cast<int>(rng.uniform_below(max_x + 1));
        rect.y0 = max_y == 0 ? 0 : static_cast<int>(rng.uniform_below(max_y + 1));
        for (const Point2& c : shifted_set.centers) {
            if (c.x - r >= rect.x0 && c.x + r < rect.x0 + patch_size && c.y - r >= rect.y0 &&
                c.y + r < rect.y0 + patch_size) {
                found = true;
                break;
            }
        }
    }
    if (!found)
        throw std::runtime_error("make_offset_pair: no crop containing a marker after " +
                                 std::to_string(opts.max_crop_retries) + " tries");

    TrainingPair pair;
    pair.crop_rect = rect;
    pair.offset_dx = offset;
    pair.offset_dy = offset;
    pair.target_patch = crop(filled, rect);
    pair.mask_patch = crop(shifted_mask, rect);
    pair.input_patch = pair.target_patch;
    for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
            if (pair.mask_patch.at(x, y))
                for (int c = 0; c < TactileImage::kChannels; ++c)
                    pair.input_patch.at(x, y, c) = opts.marker_value;
    return pair;
}

} // namespace tacmode
