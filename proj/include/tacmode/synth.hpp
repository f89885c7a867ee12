#pragma once

#include <cstdint>
#include <vector>

#include "tacmode/image.hpp"
#include "tacmode/markers.hpp"

namespace tacmode {

// Deterministic synthetic tactile scene with analytic ground truth. Stands in
// for sensor captures so every stage is testable without hardware.
struct Dome {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;    // px; 0 disables the indenter
    double intensity = 0.3; // depth-proxy shading strength
};

struct ShearField {
    double amplitude = 0.0; // px, peak displacement
    double cx = 0.0;
    double cy = 0.0;
    double sigma = 40.0;  // px, Gaussian spread
    double dir_x = 1.0;   // unit direction of displacement
    double dir_y = 0.0;
};

struct SceneSpec {
    int width = 320;
    int height = 240;
    double spacing = 24.0; // marker grid pitch, must exceed 2*radius + 2
    double radius = 3.0;   // marker radius
    Dome dome;             // radius 0 = no indenter
    ShearField shear;
    double texture_amplitude = 0.015;
    std::uint64_t seed = 1;
};

struct Scene {
    TactileImage markerless;  // plain membrane image
    TactileImage with_markers;
    MarkerMask mask;          // exact stamped marker geometry
    MarkerSet markers;        // actual (displaced) sub-pixel centers
    MotionField field;        // anchors = rest grid, vectors = shear sampled there
};

// Evaluates the shear displacement at a point: amplitude * exp(-|p-c|^2 / 2 sigma^2)
// along the configured unit direction.
Vec2 shear_at(const ShearField& f, double x, double y);

Scene gen_scene(const SceneSpec& spec);

// Slip sequence: frames before slip_start are static up to seeded sub-pixel
// centroid jitter; from slip_start every marker translates by slip_rate per
// frame, so frame k carries displacement max(0, k - slip_start) * slip_rate.
struct SlipFrame {
    TactileImage image;       // empty (width 0) unless with_images
    MarkerSet markers;
    double true_displacement; // analytic displacement magnitude of this frame
};

struct SlipSequenceSpec {
    SceneSpec scene;
    int n_frames = 12;
    int slip_start = 5;
    double slip_rate = 1.0;   // px per frame, 0 = no slip
    double dir_x = 1.0;       // unit slip direction
    double dir_y = 0.0;
    double noise_amplitude = 0.15; // centroid jitter, <= 0.2 px
    bool with_images = true;
};

std::vector<SlipFrame> gen_slip_sequence(const SlipSequenceSpec& spec);

// Stamps an anti-aliased dark disk; exposed for tests that need bare disks.
void stamp_disk(TactileImage& img, double cx, double cy, double radius, float dark_value);
// Crisp geometric disk: pixel centers within `radius` of (cx, cy).
void stamp_disk_mask(MarkerMask& mask, double cx, double cy, double radius);

} // namespace tacmode
