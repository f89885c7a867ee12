#include "tacmode/slip.hpp"

#include <cmath>
#include <stdexcept>

namespace tacmode {

void SlipConfig::validate() const {
    if (epsilon_v <= 0.0) throw std::invalid_argument("slip: epsilon_v must be positive");
    if (gate <= 0.0) throw std::invalid_argument("slip: gate must be positive");
}

SlipCheck slip_condition(const MarkerSet& current, const MarkerSet& reference,
                         const SlipConfig& cfg) {
    cfg.validate();
    if (current.empty() || reference.empty())
        throw std::invalid_argument("slip_condition: empty marker set");

    const MarkerMatch match = match_nearest(reference, current, cfg.gate);
    SlipCheck check;
    check.n_matched = match.pairs.size();
    if (match.pairs.size() < cfg.min_markers) return check; // indeterminate

    for (const auto& p : match.pairs) {
        const Point2& r = reference.centers[p.a];
        const Point2& c = current.centers[p.b];
        const double d = std::hypot(c.x - r.x, c.y - r.y);
        if (d > check.max_disp) {
            check.max_disp = d;
            check.marker_index = p.a;
        }
    }
    check.valid = true;
    check.slipped = check.max_disp > cfg.epsilon_v; // strict
    return check;
}

namespace {

// Frame-to-frame chained track of the reference markers, used when direct
// matching to frame 0 breaks down (displacement beyond the gate).
struct ChainTrack {
    std::vector<Point2> positions; // current best position per reference marker
    std::vector<Point2> reference;

    explicit ChainTrack(const MarkerSet& ref)
        : positions(ref.centers), reference(ref.centers) {}

    void advance(const MarkerSet& frame, double gate) {
        MarkerSet tracked;
        tracked.centers = positions;
        const MarkerMatch match = match_nearest(tracked, frame, gate);
        for (const auto& p : match.pairs) positions[p.a] = frame.centers[p.b];
        // unmatched markers keep their last position
    }

    SlipCheck check(const SlipConfig& cfg, std::size_t n_matched) const {
        SlipCheck out;
        out.n_matched = n_matched;
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const double d = std::hypot(positions[i].x - reference[i].x,
                                        positions[i].y - reference[i].y);
            if (d > out.max_disp) {
                out.max_disp = d;
                out.marker_index = i;
            }
        }
        out.valid = n_matched >= cfg.min_markers;
        out.slipped = out.valid && out.max_disp > cfg.epsilon_v;
        return out;
    }
};

} // namespace

StreamResult process_stream(std::span<const MarkerSet> frames, const SlipConfig& cfg) {
    cfg.validate();
    if (frames.empty()) throw std::invalid_argument("process_stream: empty stream");

    StreamResult result;
    const MarkerSet& reference = frames[0];
    if (reference.empty())
        throw std::invalid_argument("process_stream: reference frame has no markers");

    ChainTrack chain(reference);
    bool chain_engaged = false;
    for (std::size_t k = 1; k < frames.size(); ++k) {
        const MarkerSet& frame = frames[k];
        if (frame.empty()) {
            result.warning_frames.push_back(k);
            continue;
        }

        // chain advances every frame so the fallback never starts cold
        MarkerSet tracked;
        tracked.centers = chain.positions;
        const std::size_t chain_matches = match_nearest(tracked, frame, cfg.gate).pairs.size();
        chain.advance(frame, cfg.gate);

        SlipCheck check = slip_condition(frame, reference, cfg);
        if (!check.valid) {
            // once direct matching to frame 0 has broken, nearest-to-reference
            // pairings are no longer identity-safe; stay on the chain
            chain_engaged = true;
        }
        if (chain_engaged) check = chain.check(cfg, chain_matches);

        if (!check.valid) {
            result.warning_frames.push_back(k);
            continue;
        }
        if (check.slipped)
            result.events.push_back({k, check.max_disp, check.marker_index});
    }
    return result;
}

double calibrate_epsilon(std::span<const MarkerSet> frames, const SlipConfig& cfg) {
    cfg.validate();
    if (frames.size() < 2)
        throw std::invalid_argument("calibrate_epsilon: need at least two frames");

    double max_disp = 0.0;
    const MarkerSet& reference = frames[0];
    for (std::size_t k = 1; k < frames.size(); ++k) {
        const MarkerMatch match = match_nearest(reference, frames[k], cfg.gate);
        for (const auto& p : match.pairs) {
            const Point2& r = reference.centers[p.a];
            const Point2& c = frames[k].centers[p.b];
            max_disp = std::max(max_disp, std::hypot(c.x - r.x, c.y - r.y));
        }
    }
    return 3.0 * max_disp;
}

} // namespace tacmode
