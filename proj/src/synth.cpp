#include "tacmode/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tacmode/rng.hpp"

namespace tacmode {

Vec2 shear_at(const ShearField& f, double x, double y) {
    if (f.amplitude == 0.0) return {0.0, 0.0};
    const double d2 = (x - f.cx) * (x - f.cx) + (y - f.cy) * (y - f.cy);
    const double mag = f.amplitude * std::exp(-d2 / (2.0 * f.sigma * f.sigma));
    return {mag * f.dir_x, mag * f.dir_y};
}

namespace {

void check_spec(const SceneSpec& spec) {
    if (spec.width < 16 || spec.height < 16)
        throw std::invalid_argument("scene: image too small");
    if (spec.spacing <= 2.0 * spec.radius + 2.0)
        throw std::invalid_argument("scene: spacing must exceed 2*radius + 2");
    if (spec.dome.radius >= std::min(spec.width, spec.height) / 2.0)
        throw std::invalid_argument("scene: dome radius must be below min(w,h)/2");
    // the rest grid is shear-independent, so peak shear must fit the margin
    if (spec.shear.amplitude > spec.spacing / 2.0 - spec.radius - 1.0)
        throw std::invalid_argument(
            "scene: shear amplitude exceeds the grid margin (spacing/2 - radius - 1)");
}

// Coarse-lattice value noise, bilinearly interpolated. Smooth enough that the
// classical inpainters can restore it through marker-sized holes.
struct ValueNoise {
    int gw, gh, cell;
    std::vector<double> values;

    ValueNoise(int w, int h, int cell_size, Rng rng) : cell(cell_size) {
        gw = w / cell + 2;
        gh = h / cell + 2;
        values.resize(static_cast<std::size_t>(gw) * gh);
        for (double& v : values) v = 2.0 * rng.uniform() - 1.0;
    }

    double at(double x, double y) const {
        const double gx = x / cell, gy = y / cell;
        const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
        const double fx = gx - ix, fy = gy - iy;
        auto v = [&](int i, int j) {
            return values[static_cast<std::size_t>(std::min(j, gh - 1)) * gw +
                          std::min(i, gw - 1)];
        };
        const double top = v(ix, iy) * (1 - fx) + v(ix + 1, iy) * fx;
        const double bot = v(ix, iy + 1) * (1 - fx) + v(ix + 1, iy + 1) * fx;
        return top * (1 - fy) + bot * fy;
    }
};

TactileImage make_background(const SceneSpec& spec) {
    const int w = spec.width, h = spec.height;
    TactileImage img(w, h);
    ValueNoise noise(w, h, 24, Rng(spec.seed).fork(0x7e8));
    ValueNoise fine(w, h, 7, Rng(spec.seed).fork(0x7e9));

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = static_cast<double>(x) / w;
            const double v = static_cast<double>(y) / h;
            // tri-color illumination gradient, one light per channel direction
            double r = 0.45 + 0.22 * u;
            double g = 0.48 + 0.20 * v;
            double b = 0.58 - 0.16 * (u + v) * 0.5;
            if (spec.dome.radius > 0.0) {
                const double ddx = x - spec.dome.cx, ddy = y - spec.dome.cy;
                const double rho2 = (ddx * ddx + ddy * ddy) / (spec.dome.radius * spec.dome.radius);
                if (rho2 < 1.0) {
                    // hemisphere height plus a directional term per channel
                    const double height = std::sqrt(1.0 - rho2);
                    const double nx = ddx / spec.dome.radius;
                    const double ny = ddy / spec.dome.radius;
                    r += spec.dome.intensity * height * (0.8 + 0.5 * nx);
                    g += spec.dome.intensity * height * (0.8 + 0.5 * ny);
                    b += spec.dome.intensity * height * 0.6;
                }
            }
            const double t = spec.texture_amplitude * (noise.at(x, y) + 0.5 * fine.at(x, y));
            img.at(x, y, 0) = static_cast<float>(std::clamp(r + t, 0.02, 0.98));
            img.at(x, y, 1) = static_cast<float>(std::clamp(g + t, 0.02, 0.98));
            img.at(x, y, 2) = static_cast<float>(std::clamp(b + t, 0.02, 0.98));
        }
    }
    return img;
}

constexpr float kMarkerValue = 0.06f;

std::vector<Point2> grid_centers(const SceneSpec& spec, double extra_margin) {
    const double margin = spec.spacing / 2.0 + extra_margin;
    std::vector<Point2> centers;
    for (double y = margin; y <= spec.height - margin; y += spec.spacing)
        for (double x = margin; x <= spec.width - margin; x += spec.spacing)
            centers.push_back({x, y});
    return centers;
}

} // namespace

void stamp_disk(TactileImage& img, double cx, double cy, double radius, float dark_value) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cx + radius + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(cy + radius + 1)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            // coverage ramp that stays inside the crisp d <= radius mask disk,
            // so the mask covers every darkened pixel
            const double alpha = std::clamp(radius - d, 0.0, 1.0);
            if (alpha <= 0.0) continue;
            for (int c = 0; c < TactileImage::kChannels; ++c) {
                const float v = img.at(x, y, c);
                img.at(x, y, c) = static_cast<float>((1.0 - alpha) * v + alpha * dark_value);
            }
        }
    }
}

void stamp_disk_mask(MarkerMask& mask, double cx, double cy, double radius) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    const int x1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(cx + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    const int y1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(cy + radius)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (std::hypot(x - cx, y - cy) <= radius) mask.at(x, y) = 1;
}

Scene gen_scene(const SceneSpec& spec) {
    check_spec(spec);

    Scene scene;
    scene.markerless = make_background(spec);
    scene.with_markers = scene.markerless;
    scene.mask = MarkerMask(spec.width, spec.height, 0);
    scene.markers.radius = spec.radius;
    scene.field.anchors.radius = spec.radius;

    // same rest grid for every shear amplitude, so scenes stay comparable
    const std::vector<Point2> anchors = grid_centers(spec, 0.0);
    for (const Point2& a : anchors) {
        const Vec2 v = shear_at(spec.shear, a.x, a.y);
        const Point2 c{a.x + v.dx, a.y + v.dy};
        stamp_disk(scene.with_markers, c.x, c.y, spec.radius, kMarkerValue);
        stamp_disk_mask(scene.mask, c.x, c.y, spec.radius);
        scene.markers.centers.push_back(c);
        scene.field.anchors.centers.push_back(a);
        scene.field.vectors.push_back(v);
    }
    return scene;
}

std::vector<SlipFrame> gen_slip_sequence(const SlipSequenceSpec& spec) {
    check_spec(spec.scene);
    if (spec.slip_start >= spec.n_frames)
        throw std::invalid_argument("slip sequence: slip_start must precede n_frames");
    if (spec.noise_amplitude > 0.2)
        throw std::invalid_argument("slip sequence: noise amplitude capped at 0.2 px");

    const double total_slip =
        std::max(0, spec.n_frames - 1 - spec.slip_start) * spec.slip_rate;
    const double margin = spec.scene.radius + 1.0 + total_slip + spec.noise_amplitude;
    const std::vector<Point2> anchors = grid_centers(spec.scene, margin - spec.scene.spacing / 2.0);
    if (anchors.empty())
        throw std::invalid_argument("slip sequence: slip run leaves no room for markers");

    const TactileImage background = make_background(spec.scene);
    Rng seq_rng = Rng(spec.scene.seed).fork(0x511b);

    std::vector<SlipFrame> frames;
    frames.reserve(spec.n_frames);
    for (int k = 0; k < spec.n_frames; ++k) {
        Rng frame_rng = seq_rng.fork(static_cast<std::uint64_t>(k));
        const double disp = std::max(0, k - spec.slip_start) * spec.slip_rate;

        SlipFrame frame;
        frame.true_displacement = disp;
        frame.markers.radius = spec.scene.radius;
        if (spec.with_images) frame.image = background;

        for (std::size_t i = 0; i < anchors.size(); ++i) {
            Rng jitter = frame_rng.fork(i);
            const double jx = spec.noise_amplitude * (2.0 * jitter.uniform() - 1.0);
            const double jy = spec.noise_amplitude * (2.0 * jitter.uniform() - 1.0);
            const Point2 c{anchors[i].x + disp * spec.dir_x + jx,
                           anchors[i].y + disp * spec.dir_y + jy};
            frame.markers.centers.push_back(c);
            if (spec.with_images)
                stamp_disk(frame.image, c.x, c.y, spec.scene.radius, kMarkerValue);
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

} // namespace tacmode
