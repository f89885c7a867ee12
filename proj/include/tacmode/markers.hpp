#pragma once

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

#include "tacmode/image.hpp"

namespace tacmode {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec2 {
    double dx = 0.0;
    double dy = 0.0;
};

// Marker centers (sub-pixel) with a shared nominal radius.
struct MarkerSet {
    std::vector<Point2> centers;
    double radius = 3.0;

    std::size_t size() const { return centers.size(); }
    bool empty() const { return centers.empty(); }
};

// Injective pairing between two marker sets. Every pair distance is <= the
// gate used to build the match.
struct MarkerMatch {
    struct Pair {
        std::size_t a;
        std::size_t b;
        double distance;
    };
    std::vector<Pair> pairs;
    std::vector<std::size_t> unmatched_a;
    std::vector<std::size_t> unmatched_b;
};

// Per-marker displacement vectors anchored at marker centers.
struct MotionField {
    MarkerSet anchors;
    std::vector<Vec2> vectors; // one per anchor
};

struct MotionFieldResult {
    MotionField field;
    double matched_fraction = 0.0; // matched ref markers / total ref markers
    bool failed = false;           // true when zero matches
};

struct ExtractConfig {
    double expected_spacing = 16.0; // px between neighboring markers
    double nominal_radius = 3.0;    // px
    double k_sigma = 2.0;           // threshold: v < local_mean - k_sigma * local_std
    double min_contrast = 0.1;      // absolute floor on the threshold margin
    // area gate [pi*(r-1)^2, pi*(r+2)^2] derived from nominal_radius
    double min_area() const;
    double max_area() const;
};

// Finds dark, roughly circular markers on a brighter background.
// Local-mean thresholding over a window of 2*expected_spacing, 4-connected
// labeling, area gate around the nominal radius, darkness-weighted centroids.
// Empty results are allowed.
std::pair<MarkerMask, MarkerSet> extract_markers(const TactileImage& img,
                                                 const ExtractConfig& cfg = {});

// Translates every marker pixel by (dx, dy), dropping pixels that leave the
// frame and clearing all original positions, so output AND input is empty.
// Throws when (dx,dy) = (0,0) or when the translated mask would intersect the
// original (offset smaller than the marker diameter).
std::pair<MarkerMask, MarkerSet> offset_mask(const MarkerMask& mask, const MarkerSet& set,
                                             int dx, int dy);

// Greedy mutual-nearest matching: repeatedly pair the globally closest
// unpaired (a, b) with distance <= gate. Ties break on lowest (a, b) index.
MarkerMatch match_nearest(const MarkerSet& a, const MarkerSet& b, double gate);

// Displacements cur - ref over matched pairs, anchored at the matched ref
// centers. Zero matches is reported as failure, not thrown.
MotionFieldResult motion_field(const MarkerSet& ref, const MarkerSet& cur, double gate);

// Median nearest-neighbor distance between centers; 0 when fewer than 2 markers.
double median_spacing(const MarkerSet& set);

// Default matching gate (0.45 * median spacing) and default mask offset
// (half the median spacing, rounded).
double default_gate(const MarkerSet& set);
int default_offset(const MarkerSet& set);

// Line-oriented text format shared by MarkerSet and MotionField:
// header "x,y,dx,dy", one row per marker, fixed point with 3 decimals.
// A plain MarkerSet serializes with dx = dy = 0.
void save_markers(const MarkerSet& set, const std::filesystem::path& path);
void save_motion_field(const MotionField& field, const std::filesystem::path& path);
MarkerSet load_markers(const std::filesystem::path& path, double radius = 3.0);
MotionField load_motion_field(const std::filesystem::path& path, double radius = 3.0);

} // namespace tacmode
