#include "tacmode/markers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tacmode {

double ExtractConfig::min_area() const {
    const double r = std::max(nominal_radius - 1.0, 1.0);
    return std::numbers::pi * r * r;
}

double ExtractConfig::max_area() const {
    const double r = nominal_radius + 2.0;
    return std::numbers::pi * r * r;
}

namespace {

// Box-window local mean and stddev via summed-area tables.
struct LocalStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

LocalStats local_stats(const std::vector<double>& gray, int w, int h, int radius) {
    const int sw = w + 1;
    std::vector<double> sat(static_cast<std::size_t>(sw) * (h + 1), 0.0);
    std::vector<double> sat2(sat.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = gray[static_cast<std::size_t>(y) * w + x];
            const std::size_t i = static_cast<std::size_t>(y + 1) * sw + (x + 1);
            sat[i] = v + sat[i - 1] + sat[i - sw] - sat[i - sw - 1];
            sat2[i] = v * v + sat2[i - 1] + sat2[i - sw] - sat2[i - sw - 1];
        }
    }
    LocalStats out;
    out.mean.resize(gray.size());
    out.stddev.resize(gray.size());
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
            const double n = static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1);
            auto box = [&](const std::vector<double>& s) {
                return s[static_cast<std::size_t>(y1 + 1) * sw + (x1 + 1)] -
                       s[static_cast<std::size_t>(y1 + 1) * sw + x0] -
                       s[static_cast<std::size_t>(y0) * sw + (x1 + 1)] +
                       s[static_cast<std::size_t>(y0) * sw + x0];
            };
            const double m = box(sat) / n;
            const double var = std::max(0.0, box(sat2) / n - m * m);
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            out.mean[i] = m;
            out.stddev[i] = std::sqrt(var);
        }
    }
    return out;
}

} // namespace

std::pair<MarkerMask, MarkerSet> extract_markers(const TactileImage& img,
                                                 const ExtractConfig& cfg) {
    const int w = img.width(), h = img.height();
    if (w == 0 || h == 0) throw std::invalid_argument("extract_markers: empty image");

    std::vector<double> gray(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            gray[static_cast<std::size_t>(y) * w + x] =
                (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;

    const int window = std::max(2, static_cast<int>(std::lround(2.0 * cfg.expected_spacing)));
    const LocalStats stats = local_stats(gray, w, h, window / 2);

    // candidate pixels: darker than the local mean by max(k*sigma, min_contrast)
    std::vector<std::uint8_t> cand(gray.size(), 0);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const double margin = std::max(cfg.k_sigma * stats.stddev[i], cfg.min_contrast);
        if (gray[i] < stats.mean[i] - margin) cand[i] = 1;
    }

    // 4-connected labeling, flood fill per component
    std::vector<int> label(gray.size(), -1);
    MarkerMask mask(w, h, 0);
    MarkerSet set;
    set.radius = cfg.nominal_radius;

    std::vector<std::size_t> stack, component;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
            if (!cand[si] || label[si] >= 0) continue;
            component.clear();
            stack.assign(1, si);
            label[si] = 0;
            while (!stack.empty()) {
                const std::size_t i = stack.back();
                stack.pop_back();
                component.push_back(i);
                const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                    const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (cand[j] && label[j] < 0) {
                        label[j] = 0;
                        stack.push_back(j);
                    }
                }
            }
            const double area = static_cast<double>(component.size());
            if (area < cfg.min_area() || area > cfg.max_area()) continue;

            // darkness-weighted centroid for sub-pixel precision
            double wsum = 0.0, cx = 0.0, cy = 0.0;
            for (std::size_t i : component) {
                const double darkness = std::max(stats.mean[i] - gray[i], 1e-9);
                const double x = static_cast<double>(i % w);
                const double y = static_cast<double>(i / w);
                wsum += darkness;
                cx += darkness * x;
                cy += darkness * y;
                mask.data()[i] = 1;
            }
            set.centers.push_back({cx / wsum, cy / wsum});
        }
    }
    return {std::move(mask), std::move(set)};
}

std::pair<MarkerMask, MarkerSet> offset_mask(const MarkerMask& mask, const MarkerSet& set,
                                             int dx, int dy) {
    if (dx == 0 && dy == 0)
        throw std::invalid_argument("offset_mask: offset must be nonzero");
    const int w = mask.width(), h = mask.height();

    MarkerMask out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (mask.at(nx, ny))
                throw std::runtime_error(
                    "offset_mask: offset (" + std::to_string(dx) + "," + std::to_string(dy) +
                    ") makes translated markers overlap the originals; use an offset "
                    "larger than the marker diameter");
            out.at(nx, ny) = 1;
        }
    }

    MarkerSet shifted;
    shifted.radius = set.radius;
    for (const Point2& c : set.centers) {
        const double nx = c.x + dx, ny = c.y + dy;
        if (nx < 0.0 || nx >= w || ny < 0.0 || ny >= h) continue; // translated out of frame
        shifted.centers.push_back({nx, ny});
    }
    return {std::move(out), std::move(shifted)};
}

MarkerMatch match_nearest(const MarkerSet& a, const MarkerSet& b, double gate) {
    if (gate <= 0.0) throw std::invalid_argument("match_nearest: gate must be positive");

    struct Cand {
        double d;
        std::size_t i, j;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double dx = a.centers[i].x - b.centers[j].x;
            const double dy = a.centers[i].y - b.centers[j].y;
            const double d = std::hypot(dx, dy);
            if (d <= gate) cands.push_back({d, i, j});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
        if (l.d != r.d) return l.d < r.d;
        if (l.i != r.i) return l.i < r.i;
        return l.j < r.j;
    });

    MarkerMatch match;
    std::vector<std::uint8_t> used_a(a.size(), 0), used_b(b.size(), 0);
    for (const Cand& c : cands) {
        if (used_a[c.i] || used_b[c.j]) continue;
        used_a[c.i] = used_b[c.j] = 1;
        match.pairs.push_back({c.i, c.j, c.d});
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!used_a[i]) match.unmatched_a.push_back(i);
    for (std::size_t j = 0; j < b.size(); ++j)
        if (!used_b[j]) match.unmatched_b.push_back(j);
    return match;
}

MotionFieldResult motion_field(const MarkerSet& ref, const MarkerSet& cur, double gate) {
    MotionFieldResult res;
    res.field.anchors.radius = ref.radius;
    if (ref.empty()) {
        res.failed = true;
        return res;
    }
    MarkerMatch match = match_nearest(ref, cur, gate);
    std::sort(match.pairs.begin(), match.pairs.end(),
              [](const auto& l, const auto& r) { return l.a < r.a; });
    for (const auto& p : match.pairs) {
        const Point2& r = ref.centers[p.a];
        const Point2& c = cur.centers[p.b];
        res.field.anchors.centers.push_back(r);
        res.field.vectors.push_back({c.x - r.x, c.y - r.y});
    }
    res.matched_fraction = static_cast<double>(match.pairs.size()) / ref.size();
    res.failed = match.pairs.empty();
    return res;
}

double median_spacing(const MarkerSet& set) {
    if (set.size() < 2) return 0.0;
    std::vector<double> nn(set.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t j = 0; j < set.size(); ++j) {
            if (i == j) continue;
            const double d = std::hypot(set.centers[i].x - set.centers[j].x,
                                        set.centers[i].y - set.centers[j].y);
            nn[i] = std::min(nn[i], d);
        }
    }
    std::sort(nn.begin(), nn.end());
    const std::size_t mid = nn.size() / 2;
    return nn.size() % 2 ? nn[mid] : 0.5 * (nn[mid - 1] + nn[mid]);
}

double default_gate(const MarkerSet& set) {
    return 0.45 * median_spacing(set);
}

int default_offset(const MarkerSet& set) {
    return static_cast<int>(std::lround(0.5 * median_spacing(set)));
}

namespace {

void write_rows(const std::filesystem::path& path, const MarkerSet& set,
                const std::vector<Vec2>* vectors) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("markers: cannot write " + path.string());
    out << "x,y,dx,dy\n";
    char line[128];
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Vec2 v = vectors ? (*vectors)[i] : Vec2{};
        std::snprintf(line, sizeof(line), "%.3f,%.3f,%.3f,%.3f\n", set.centers[i].x,
                      set.centers[i].y, v.dx, v.dy);
        out << line;
    }
}

MotionField read_rows(const std::filesystem::path& path, double radius) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("markers: cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "x,y,dx,dy")
        throw std::runtime_error("markers: " + path.string() +
                                 ": bad header (expected \"x,y,dx,dy\")");
    MotionField field;
    field.anchors.radius = radius;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double x, y, dx, dy;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x, &y, &dx, &dy) != 4)
            throw std::runtime_error("markers: " + path.string() + ": bad row at line " +
                                     std::to_string(lineno));
        field.anchors.centers.push_back({x, y});
        field.vectors.push_back({dx, dy});
    }
    return field;
}

} // namespace

void save_markers(const MarkerSet& set, const std::filesystem::path& path) {
    write_rows(path, set, nullptr);
}

void save_motion_field(const MotionField& field, const std::filesystem::path& path) {
    if (field.vectors.size() != field.anchors.size())
        throw std::invalid_argument("save_motion_field: vector/anchor count mismatch");
    write_rows(path, field.anchors, &field.vectors);
}

MarkerSet load_markers(const std::filesystem::path& path, double radius) {
    return read_rows(path, radius).anchors;
}

MotionField load_motion_field(const std::filesystem::path& path, double radius) {
    return read_rows(path, radius);
}

} // namespace tacmode
