#pragma once

#include <cstddef>
#include <vector>

#include "tacmode/image.hpp"
#include "tacmode/markers.hpp"

namespace tacmode {

// Image metrics are computed on the 0-255 scale so the magnitudes stay
// comparable across implementations that store bytes.

// Mean over pixels and channels of (255a - 255b)^2.
double mse(const TactileImage& a, const TactileImage& b);

// 10 * log10(255^2 / mse); +infinity when the images are identical.
double psnr(const TactileImage& a, const TactileImage& b);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
// dynamic range 255, evaluated where the full window fits, computed per
// channel and averaged. Requires min side >= 11.
double ssim(const TactileImage& a, const TactileImage& b);

struct MotionErrorReport {
    double e_rmse = 0.0; // sqrt(mean squared vector error) over matched markers
    double e_mag = 0.0;  // mean absolute magnitude error over matched markers
    std::size_t n_matched = 0;
    bool failed = false; // zero matches
};

// Matches predicted anchors to ground-truth anchors (nearest-neighbor within
// gate) and compares the displacement vectors on the matched pairs.
MotionErrorReport motion_errors(const MotionField& pred, const MotionField& truth, double gate);

// Fraction of reports with failed = true. Throws on an empty list.
double nan_rate(const std::vector<MotionErrorReport>& reports);

} // namespace tacmode
