#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tacmode/markers.hpp"

namespace tacmode {

struct SlipConfig {
    double epsilon_v = 1.5;     // px; slip when max displacement exceeds this (strict)
    double gate = 8.0;          // px matching gate
    std::size_t min_markers = 4; // fewest matches needed to trust a frame

    void validate() const;
};

struct SlipEvent {
    std::size_t frame_index = 0;
    double max_disp = 0.0;      // > epsilon_v at emission
    std::size_t marker_index = 0; // reference-set index of the triggering marker
};

// One frame's evaluation against the reference. `valid` is false when fewer
// than min_markers markers could be matched; the condition is then
// indeterminate.
struct SlipCheck {
    bool slipped = false;
    double max_disp = 0.0;
    std::size_t marker_index = 0;
    std::size_t n_matched = 0;
    bool valid = false;
};

// Max displacement of matched markers relative to the reference positions;
// slip when it strictly exceeds epsilon_v. Throws on an empty set.
SlipCheck slip_condition(const MarkerSet& current, const MarkerSet& reference,
                         const SlipConfig& cfg);

struct StreamResult {
    std::vector<SlipEvent> events;            // one per frame where the condition held
    std::vector<std::size_t> warning_frames;  // frames with indeterminate condition
};

// Streams marker sets against the first frame as reference. Matching is
// direct (frame 0 <-> frame k); when direct matching drops below min_markers
// the detector falls back to per-marker displacements accumulated frame to
// frame. Indeterminate frames produce warnings, not an abort.
StreamResult process_stream(std::span<const MarkerSet> frames, const SlipConfig& cfg);

// Suggested threshold from a known-static hold: 3x the maximum displacement
// observed against the first frame.
double calibrate_epsilon(std::span<const MarkerSet> frames, const SlipConfig& cfg);

} // namespace tacmode
