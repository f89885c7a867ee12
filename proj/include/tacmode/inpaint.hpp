#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tacmode/image.hpp"

namespace tacmode {

struct InpaintRequest {
    TactileImage image; // observed image, markers included
    MarkerMask mask;    // 1 = pixel to fill

    void validate() const; // dimensions match, mask not all-ones
};

// Composition of a raw inpainter output with the observed image: masked
// pixels come from `raw`, the rest from `known`, copied bit-exact.
TactileImage rectify(const TactileImage& raw, const TactileImage& known,
                     const MarkerMask& mask);

struct FmmOptions {
    double window_radius = 5.0; // neighborhood radius for the fill estimate
};

// Fill order and boundary distance of every filled pixel, in fill order.
struct FmmTrace {
    struct Fill {
        int x;
        int y;
        double distance;
    };
    std::vector<Fill> fills;
};

// Fast-Marching inpainting: unknown pixels are filled in increasing
// distance-from-boundary order; each fill is a weighted average of first-order
// estimates from already-known pixels in the window, with direction, distance
// and level-set weight factors. Known pixels pass through untouched.
TactileImage inpaint_fmm(const InpaintRequest& req, const FmmOptions& opts = {},
                         FmmTrace* trace = nullptr);

struct HarmonicOptions {
    double tol = 1e-6;          // stop when the max per-iteration change drops below
    std::size_t max_iters = 0;  // 0 = 10 * hole pixel count
};

struct HarmonicResult {
    TactileImage image;
    bool converged = true;
    std::size_t iterations = 0;
};

// Solves the discrete Laplace equation on the hole with known pixels as
// Dirichlet boundary (Gauss-Seidel relaxation). Known pixels pass through
// untouched; non-convergence is flagged, not thrown.
HarmonicResult inpaint_harmonic(const InpaintRequest& req, const HarmonicOptions& opts = {});

} // namespace tacmode
