#include "tacmode/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tacmode {

namespace {

void check_same(const TactileImage& a, const TactileImage& b) {
    if (!a.same_size(b)) throw std::invalid_argument("metrics: image dimensions differ");
}

} // namespace

double mse(const TactileImage& a, const TactileImage& b) {
    check_same(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = 255.0 * a.data()[i] - 255.0 * b.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(const TactileImage& a, const TactileImage& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / m);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

// normalized 1D Gaussian tap set; the 2D window is its outer product
const std::vector<double>& ssim_taps() {
    static const std::vector<double> taps = [] {
        std::vector<double> t(kWindow);
        double sum = 0.0;
        for (int k = 0; k < kWindow; ++k) {
            const double d = k - (kWindow - 1) / 2.0;
            t[static_cast<std::size_t>(k)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += t[static_cast<std::size_t>(k)];
        }
        for (double& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// Separable Gaussian-window mean, output indexed by window corner (valid
// placements only).
std::vector<double> window_filter(const std::vector<double>& plane, int w, int h) {
    const auto& taps = ssim_taps();
    const int vw = w - kWindow + 1, vh = h - kWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(vw) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k)
                acc += taps[static_cast<std::size_t>(k)] *
                       plane[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * vw + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(vw) * vh, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k)
                acc += taps[static_cast<std::size_t>(k)] *
                       rows[static_cast<std::size_t>(y + k) * vw + x];
            out[static_cast<std::size_t>(y) * vw + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const TactileImage& a, const TactileImage& b) {
    check_same(a, b);
    if (a.width() < kWindow || a.height() < kWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const int w = a.width(), h = a.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> va(n), vb(n), vaa(n), vbb(n), vab(n);

    double channel_sum = 0.0;
    for (int c = 0; c < TactileImage::kChannels; ++c) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                va[i] = 255.0 * a.at(x, y, c);
                vb[i] = 255.0 * b.at(x, y, c);
                vaa[i] = va[i] * va[i];
                vbb[i] = vb[i] * vb[i];
                vab[i] = va[i] * vb[i];
            }
        const auto mu_a = window_filter(va, w, h);
        const auto mu_b = window_filter(vb, w, h);
        const auto raw_aa = window_filter(vaa, w, h);
        const auto raw_bb = window_filter(vbb, w, h);
        const auto raw_ab = window_filter(vab, w, h);

        double ssim_sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double var_a = raw_aa[i] - mu_a[i] * mu_a[i];
            const double var_b = raw_bb[i] - mu_b[i] * mu_b[i];
            const double cov = raw_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cov + kC2);
            const double den =
                (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (var_a + var_b + kC2);
            ssim_sum += num / den;
        }
        channel_sum += ssim_sum / static_cast<double>(mu_a.size());
    }
    return channel_sum / TactileImage::kChannels;
}

MotionErrorReport motion_errors(const MotionField& pred, const MotionField& truth, double gate) {
    if (pred.vectors.size() != pred.anchors.size() ||
        truth.vectors.size() != truth.anchors.size())
        throw std::invalid_argument("motion_errors: malformed field");

    MotionErrorReport report;
    const MarkerMatch match = match_nearest(pred.anchors, truth.anchors, gate);
    if (match.pairs.empty()) {
        report.failed = true;
        return report;
    }

    double sq_sum = 0.0, mag_sum = 0.0;
    for (const auto& p : match.pairs) {
        const Vec2& vp = pred.vectors[p.a];
        const Vec2& vt = truth.vectors[p.b];
        const double ex = vp.dx - vt.dx;
        const double ey = vp.dy - vt.dy;
        sq_sum += ex * ex + ey * ey;
        mag_sum += std::fabs(std::hypot(vp.dx, vp.dy) - std::hypot(vt.dx, vt.dy));
    }
    report.n_matched = match.pairs.size();
    report.e_rmse = std::sqrt(sq_sum / static_cast<double>(match.pairs.size()));
    report.e_mag = mag_sum / static_cast<double>(match.pairs.size());
    return report;
}

double nan_rate(const std::vector<MotionErrorReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("nan_rate: empty report list");
    std::size_t failed = 0;
    for (const MotionErrorReport& r : reports) failed += r.failed ? 1 : 0;
    return static_cast<double>(failed) / static_cast<double>(reports.size());
}

} // namespace tacmode
