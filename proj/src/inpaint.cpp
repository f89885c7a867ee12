#include "tacmode/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace tacmode {

void InpaintRequest::validate() const {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw std::invalid_argument("inpaint: image and mask dimensions differ");
    if (mask.all())
        throw std::invalid_argument("inpaint: mask covers every pixel, nothing is known");
}

TactileImage rectify(const TactileImage& raw, const TactileImage& known,
                     const MarkerMask& mask) {
    if (!raw.same_size(known) || raw.width() != mask.width() || raw.height() != mask.height())
        throw std::invalid_argument("rectify: dimension mismatch");
    TactileImage out = known;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y))
                for (int c = 0; c < TactileImage::kChannels; ++c)
                    out.at(x, y, c) = raw.at(x, y, c);
    return out;
}

namespace {

enum class State : std::uint8_t { known, band, inside };

constexpr double kInf = std::numeric_limits<double>::infinity();

// Eikonal update |grad T| = 1 from the frozen axis neighbors.
double solve_eikonal(double tx, double ty) {
    const double a = std::min(tx, ty);
    const double b = std::max(tx, ty);
    if (b == kInf) return a + 1.0;
    if (b - a >= 1.0) return a + 1.0;
    const double diff = a - b;
    return 0.5 * (a + b + std::sqrt(2.0 - diff * diff));
}

struct HeapEntry {
    double t;
    int x, y;
    bool operator>(const HeapEntry& o) const { return t > o.t; }
};

struct FmmGrid {
    int w, h;
    std::vector<double> dist;
    std::vector<State> state;

    FmmGrid(const MarkerMask& mask)
        : w(mask.width()), h(mask.height()),
          dist(static_cast<std::size_t>(w) * h, kInf),
          state(static_cast<std::size_t>(w) * h, State::inside) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!mask.at(x, y)) {
                    dist[idx(x, y)] = 0.0;
                    state[idx(x, y)] = State::known;
                }
            }
        }
    }

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w + x; }
    bool inside(int x, int y) const { return x >= 0 && x < w && y >= 0 && y < h; }

    double frozen_dist(int x, int y) const {
        if (!inside(x, y) || state[idx(x, y)] == State::inside) return kInf;
        return dist[idx(x, y)];
    }

    double update_candidate(int x, int y) const {
        const double tx = std::min(frozen_dist(x - 1, y), frozen_dist(x + 1, y));
        const double ty = std::min(frozen_dist(x, y - 1), frozen_dist(x, y + 1));
        return solve_eikonal(tx, ty);
    }

    // Gradient of the distance field, one-sided where a neighbor is unfrozen.
    void gradient(int x, int y, double& gx, double& gy) const {
        const double t0 = dist[idx(x, y)];
        const double tl = frozen_dist(x - 1, y), tr = frozen_dist(x + 1, y);
        const double tu = frozen_dist(x, y - 1), td = frozen_dist(x, y + 1);
        if (tl != kInf && tr != kInf)
            gx = 0.5 * (tr - tl);
        else if (tr != kInf)
            gx = tr - t0;
        else if (tl != kInf)
            gx = t0 - tl;
        else
            gx = 0.0;
        if (tu != kInf && td != kInf)
            gy = 0.5 * (td - tu);
        else if (td != kInf)
            gy = td - t0;
        else if (tu != kInf)
            gy = t0 - tu;
        else
            gy = 0.0;
    }
};

// Telea-style estimate for pixel p from frozen pixels within the window:
// each contribution is the neighbor value extrapolated along its image
// gradient, weighted by direction * distance * level-set factors.
void fill_pixel(TactileImage& img, const FmmGrid& grid, int px, int py, int radius) {
    double nx, ny;
    grid.gradient(px, py, nx, ny);
    const double nlen = std::hypot(nx, ny);
    if (nlen > 1e-12) {
        nx /= nlen;
        ny /= nlen;
    }

    const double tp = grid.dist[grid.idx(px, py)];
    double wsum = 0.0;
    double acc[TactileImage::kChannels] = {0.0, 0.0, 0.0};

    // value sources must be settled pixels (original known or already filled);
    // band pixels still hold the masked-out content
    auto settled = [&](int x, int y) {
        return grid.inside(x, y) && grid.state[grid.idx(x, y)] == State::known;
    };

    const int x0 = std::max(0, px - radius), x1 = std::min(grid.w - 1, px + radius);
    const int y0 = std::max(0, py - radius), y1 = std::min(grid.h - 1, py + radius);
    for (int qy = y0; qy <= y1; ++qy) {
        for (int qx = x0; qx <= x1; ++qx) {
            if (!settled(qx, qy)) continue;
            const double rx = static_cast<double>(px - qx);
            const double ry = static_cast<double>(py - qy);
            const double rlen2 = rx * rx + ry * ry;
            if (rlen2 == 0.0 || rlen2 > static_cast<double>(radius) * radius) continue;
            const double rlen = std::sqrt(rlen2);

            double dir = (rx * nx + ry * ny) / rlen;
            if (std::fabs(dir) < 1e-6) dir = 1e-6;
            const double dst = 1.0 / rlen2;
            const double lev = 1.0 / (1.0 + std::fabs(tp - grid.dist[grid.idx(qx, qy)]));
            const double w = std::fabs(dir * dst * lev);

            // first-order extrapolation of q toward p, central difference where
            // possible, one-sided toward settled pixels otherwise
            for (int c = 0; c < TactileImage::kChannels; ++c) {
                const bool l = settled(qx - 1, qy), r = settled(qx + 1, qy);
                const bool u = settled(qx, qy - 1), d = settled(qx, qy + 1);
                double gx = 0.0, gy = 0.0;
                if (l && r)
                    gx = 0.5 * (img.at(qx + 1, qy, c) - img.at(qx - 1, qy, c));
                else if (r)
                    gx = img.at(qx + 1, qy, c) - img.at(qx, qy, c);
                else if (l)
                    gx = img.at(qx, qy, c) - img.at(qx - 1, qy, c);
                if (u && d)
                    gy = 0.5 * (img.at(qx, qy + 1, c) - img.at(qx, qy - 1, c));
                else if (d)
                    gy = img.at(qx, qy + 1, c) - img.at(qx, qy, c);
                else if (u)
                    gy = img.at(qx, qy, c) - img.at(qx, qy - 1, c);
                acc[c] += w * (img.at(qx, qy, c) + gx * rx + gy * ry);
            }
            wsum += w;
        }
    }
    if (wsum > 0.0) {
        for (int c = 0; c < TactileImage::kChannels; ++c)
            img.at(px, py, c) = static_cast<float>(acc[c] / wsum);
    }
}

} // namespace

TactileImage inpaint_fmm(const InpaintRequest& req, const FmmOptions& opts, FmmTrace* trace) {
    req.validate();
    TactileImage out = req.image;
    if (!req.mask.any()) return out; // empty mask -> identity

    FmmGrid grid(req.mask);
    const int radius = std::max(1, static_cast<int>(std::lround(opts.window_radius)));

    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;
    for (int y = 0; y < grid.h; ++y) {
        for (int x = 0; x < grid.w; ++x) {
            if (grid.state[grid.idx(x, y)] != State::inside) continue;
            const bool boundary =
                (grid.inside(x - 1, y) && grid.state[grid.idx(x - 1, y)] == State::known) ||
                (grid.inside(x + 1, y) && grid.state[grid.idx(x + 1, y)] == State::known) ||
                (grid.inside(x, y - 1) && grid.state[grid.idx(x, y - 1)] == State::known) ||
                (grid.inside(x, y + 1) && grid.state[grid.idx(x, y + 1)] == State::known);
            if (!boundary) continue;
            const double t = grid.update_candidate(x, y);
            grid.dist[grid.idx(x, y)] = t;
            grid.state[grid.idx(x, y)] = State::band;
            heap.push({t, x, y});
        }
    }

    while (!heap.empty()) {
        const HeapEntry e = heap.top();
        heap.pop();
        const std::size_t i = grid.idx(e.x, e.y);
        if (grid.state[i] != State::band || e.t != grid.dist[i]) continue; // stale entry

        // fill before freezing so the pixel's stale masked value cannot feed
        // its neighbors' gradient estimates during its own fill
        fill_pixel(out, grid, e.x, e.y, radius);
        grid.state[i] = State::known;
        if (trace) trace->fills.push_back({e.x, e.y, e.t});

        const int nx[4] = {e.x - 1, e.x + 1, e.x, e.x};
        const int ny[4] = {e.y, e.y, e.y - 1, e.y + 1};
        for (int k = 0; k < 4; ++k) {
            if (!grid.inside(nx[k], ny[k])) continue;
            const std::size_t j = grid.idx(nx[k], ny[k]);
            if (grid.state[j] == State::known) continue;
            const double t = grid.update_candidate(nx[k], ny[k]);
            if (t < grid.dist[j]) {
                grid.dist[j] = t;
                grid.state[j] = State::band;
                heap.push({t, nx[k], ny[k]});
            }
        }
    }
    return out;
}

HarmonicResult inpaint_harmonic(const InpaintRequest& req, const HarmonicOptions& opts) {
    req.validate();
    HarmonicResult res;
    res.image = req.image;
    if (!req.mask.any()) return res; // empty mask -> identity

    const int w = req.mask.width(), h = req.mask.height();
    std::vector<std::pair<int, int>> hole;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (req.mask.at(x, y)) hole.emplace_back(x, y);

    // relaxation runs in double so tolerances below float resolution converge
    std::vector<double> plane(static_cast<std::size_t>(w) * h * TactileImage::kChannels);
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = req.image.data()[i];
    auto val = [&](int x, int y, int c) -> double& {
        return plane[(static_cast<std::size_t>(y) * w + x) * TactileImage::kChannels + c];
    };

    // seed hole pixels with the mean of the known pixels bordering the hole,
    // so every update stays inside the boundary value range (maximum principle)
    double seed[TactileImage::kChannels] = {0.0, 0.0, 0.0};
    std::size_t n_border = 0;
    for (const auto& [x, y] : hole) {
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
            if (!req.mask.in_bounds(nx[k], ny[k]) || req.mask.at(nx[k], ny[k])) continue;
            for (int c = 0; c < TactileImage::kChannels; ++c)
                seed[c] += val(nx[k], ny[k], c);
            ++n_border;
        }
    }
    if (n_border == 0)
        throw std::invalid_argument("inpaint_harmonic: hole has no known border pixels");
    for (const auto& [x, y] : hole)
        for (int c = 0; c < TactileImage::kChannels; ++c)
            val(x, y, c) = seed[c] / n_border;

    const std::size_t max_iters =
        opts.max_iters > 0 ? opts.max_iters : 10 * hole.size();

    res.converged = false;
    for (std::size_t it = 0; it < max_iters; ++it) {
        double max_change = 0.0;
        for (const auto& [x, y] : hole) {
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int c = 0; c < TactileImage::kChannels; ++c) {
                double sum = 0.0;
                int n = 0;
                for (int k = 0; k < 4; ++k) {
                    if (!req.mask.in_bounds(nx[k], ny[k])) continue;
                    sum += val(nx[k], ny[k], c);
                    ++n;
                }
                const double updated = sum / n;
                max_change = std::max(max_change, std::fabs(updated - val(x, y, c)));
                val(x, y, c) = updated;
            }
        }
        res.iterations = it + 1;
        if (max_change < opts.tol) {
            res.converged = true;
            break;
        }
    }
    for (const auto& [x, y] : hole)
        for (int c = 0; c < TactileImage::kChannels; ++c)
            res.image.at(x, y, c) = static_cast<float>(val(x, y, c));
    return res;
}

} // namespace tacmode
