#include "tacmode/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "tacmode/inpaint.hpp"

namespace tacmode {

namespace {

DenoiserHandle crop_handle(const DenoiserHandle& handle, const Rect& r) {
    if (handle.kind != DenoiserHandle::Kind::oracle) return handle;
    DenoiserHandle cropped = handle;
    cropped.oracle_clean = crop(handle.oracle_clean, r);
    return cropped;
}

} // namespace

TactileImage inpaint_tacdiff(const TactileImage& image, const MarkerMask& mask,
                             const DenoiserHandle& denoiser, const NoiseSchedule& sched,
                             const Rng& rng, int jobs) {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw std::invalid_argument("inpaint_tacdiff: image/mask dimension mismatch");
    denoiser.validate();

    const int patch = denoiser.patch_size;
    if (image.width() <= patch && image.height() <= patch) {
        Rng local = rng.fork(0);
        TactileImage raw = sample(image, mask, denoiser, sched, local);
        return rectify(raw, image, mask);
    }
    if (image.width() < patch || image.height() < patch)
        throw std::invalid_argument("inpaint_tacdiff: image smaller than the patch on one side");

    const PatchLayout layout = plan_patches(image.width(), image.height(), patch);
    const auto image_patches = slice_patches(image, layout);
    const auto mask_patches = slice_patches(mask, layout);

    std::vector<TactileImage> results(layout.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    // external denoisers are serialized per handle
    const int workers = denoiser.kind == DenoiserHandle::Kind::external
                            ? 1
                            : std::max(1, std::min<int>(jobs, static_cast<int>(layout.size())));

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= layout.size()) return;
            try {
                Rng patch_rng = rng.fork(i);
                results[i] = sample(image_patches[i], mask_patches[i],
                                    crop_handle(denoiser, layout.origins[i]), sched, patch_rng);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    const TactileImage merged = merge_patches(layout, results);
    return rectify(merged, image, mask); // pin the known region bit-exact
}

} // namespace tacmode
