#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "tacmode/image.hpp"
#include "tacmode/inpaint.hpp"
#include "tacmode/markers.hpp"
#include "tacmode/rng.hpp"

namespace tacmode {

// Forward-process noise levels: beta_t in (0,1) for t = 1..T and the
// cumulative products alpha_bar_t = prod_{s<=t}(1 - beta_s), alpha_bar_0 = 1.
struct NoiseSchedule {
    std::vector<double> betas;      // betas[t-1] = beta_t
    std::vector<double> alpha_bars; // alpha_bars[t], t = 0..T; alpha_bars[0] = 1

    int steps() const { return static_cast<int>(betas.size()); }
    double alpha_bar(int t) const { return alpha_bars[static_cast<std::size_t>(t)]; }
};

// Linear beta ramp from beta_start to beta_end over T steps.
NoiseSchedule schedule_linear(int T, double beta_start = 1e-4, double beta_end = 0.02);

// x_t = sqrt(abar_t) * clean + sqrt(1 - abar_t) * noise, elementwise.
// Output is deliberately unclamped; the sampling loop clamps once at emission.
TactileImage add_noise_with(const TactileImage& clean, int t, const NoiseSchedule& sched,
                            const TactileImage& noise);
// Same, drawing the noise field from rng. t = 0 returns clean unchanged.
TactileImage add_noise(const TactileImage& clean, int t, const NoiseSchedule& sched, Rng& rng);

struct DenoiserHandle {
    enum class Kind { oracle, classical, external };

    Kind kind = Kind::classical;
    TactileImage oracle_clean;      // Kind::oracle: the clean image to return
    std::filesystem::path program;  // Kind::external: the denoiser executable
    int patch_size = 256;           // square side an external denoiser accepts
    double smooth_sigma_max = 6.0;  // Kind::classical: smoothing scale at t = T

    static DenoiserHandle oracle(TactileImage clean);
    static DenoiserHandle classical(double sigma_max = 6.0);
    static DenoiserHandle external(std::filesystem::path program, int patch_size = 256);

    void validate() const; // patch_size >= 16 etc.
};

// Built-in denoiser with no learned weights: Gaussian smoothing at a scale
// that shrinks as t falls, then a 1/sqrt(abar_t) rescale toward the clean
// image statistics. Deterministic.
TactileImage classical_denoiser(const TactileImage& noisy, int t, const NoiseSchedule& sched,
                                double sigma_max = 6.0);

// Out-of-process denoiser speaking the TACT tensor protocol (see tact_io).
// Throws with captured diagnostics on protocol violation or nonzero exit.
TactileImage external_denoiser(const TactileImage& noisy, const MarkerMask& mask, int t,
                               const DenoiserHandle& handle);

// Dispatch over the handle kind.
TactileImage denoise(const DenoiserHandle& handle, const TactileImage& noisy,
                     const MarkerMask& mask, int t, const NoiseSchedule& sched);

struct SampleOptions {
    // Called after every composition step with the loop index t (T-1 .. 0)
    // and the current estimate; known pixels are asserted there in tests.
    std::function<void(int t, const TactileImage& current)> on_step;
};

// Iterative masked-diffusion inpainting:
//   est(T) = mask * noise + (1-mask) * image
//   for t = T..1: den = D(est(t), t); est(t-1) = mask * A(den, t-1) + (1-mask) * image
// Returns est(0) clamped to [0,1]. Known pixels equal the input bit-exact.
TactileImage sample(const TactileImage& image, const MarkerMask& mask,
                    const DenoiserHandle& denoiser, const NoiseSchedule& sched, Rng& rng,
                    const SampleOptions& opts = {});

// Squared L2 distance between denoised and target restricted to the mask,
// summed over masked pixels and channels.
double reference_loss(const TactileImage& denoised, const TactileImage& target,
                      const MarkerMask& mask);

// Self-supervised training sample built from a single marker image: the
// markers are extracted, filled with FMM inpainting, translated by half the
// marker spacing, and a random patch containing at least one translated
// marker is cropped jointly from the fill and the translated mask.
struct TrainingPair {
    TactileImage input_patch;  // fill with translated markers composited
    TactileImage target_patch; // fill alone
    MarkerMask mask_patch;     // translated markers
    Rect crop_rect;            // where the patch came from
    int offset_dx = 0;
    int offset_dy = 0;
};

struct OffsetPairOptions {
    ExtractConfig extract;
    FmmOptions fmm;
    int fill_dilate = 1;        // mask growth for the fill only, covers marker rims
    float marker_value = 0.06f; // intensity of composited markers
    int max_crop_retries = 100;
};

TrainingPair make_offset_pair(const TactileImage& image, Rng& rng, int patch_size,
                              const OffsetPairOptions& opts = {});

// Separable Gaussian blur with kernel renormalized at the borders.
TactileImage gaussian_blur(const TactileImage& img, double sigma);

} // namespace tacmode
