#pragma once

#include "tacmode/diffusion.hpp"
#include "tacmode/image.hpp"
#include "tacmode/patches.hpp"

namespace tacmode {

// Full-resolution iterative inpainting: inputs larger than the denoiser patch
// are split by the patch planner, sampled per patch (patch i uses rng fork i,
// so results do not depend on worker scheduling), merged by overlap averaging,
// and composed with the observed image so known pixels stay bit-exact.
TactileImage inpaint_tacdiff(const TactileImage& image, const MarkerMask& mask,
                             const DenoiserHandle& denoiser, const NoiseSchedule& sched,
                             const Rng& rng, int jobs = 1);

} // namespace tacmode
