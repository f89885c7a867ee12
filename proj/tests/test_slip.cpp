#include "doctest.h"

#include <cmath>
#include <limits>

#include "tacmode/slip.hpp"
#include "tacmode/synth.hpp"

using namespace tacmode;

namespace {

MarkerSet grid(int n, double spacing) {
    MarkerSet set;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            set.centers.push_back({10.0 + i * spacing, 10.0 + j * spacing});
    return set;
}

std::vector<MarkerSet> marker_frames(const std::vector<SlipFrame>& frames) {
    std::vector<MarkerSet> out;
    out.reserve(frames.size());
    for (const SlipFrame& f : frames) out.push_back(f.markers);
    return out;
}

} // namespace

TEST_CASE("slip_condition: identity, direct displacement, strict threshold") {
    const MarkerSet ref = grid(4, 15.0);
    SlipConfig cfg;
    cfg.epsilon_v = 2.0;
    cfg.gate = 7.0;
    cfg.min_markers = 4;

    SUBCASE("current equals reference") {
        const SlipCheck check = slip_condition(ref, ref, cfg);
        CHECK(check.valid);
        CHECK_FALSE(check.slipped);
        CHECK(check.max_disp == 0.0);
    }
    SUBCASE("one marker moved by (3,4) trips at 5") {
        MarkerSet cur = ref;
        cur.centers[5].x += 3.0;
        cur.centers[5].y += 4.0;
        const SlipCheck check = slip_condition(cur, ref, cfg);
        CHECK(check.valid);
        CHECK(check.slipped);
        CHECK(check.max_disp == doctest::Approx(5.0));
        CHECK(check.marker_index == 5);
    }
    SUBCASE("displacement exactly at the threshold does not trip") {
        MarkerSet cur = ref;
        for (Point2& c : cur.centers) c.x += 2.0; // equals epsilon_v
        const SlipCheck check = slip_condition(cur, ref, cfg);
        CHECK(check.valid);
        CHECK_FALSE(check.slipped);
        CHECK(check.max_disp == doctest::Approx(2.0));
    }
    SUBCASE("too few matches is indeterminate") {
        MarkerSet cur;
        cur.centers.push_back(ref.centers[0]);
        const SlipCheck check = slip_condition(cur, ref, cfg);
        CHECK_FALSE(check.valid);
        CHECK_FALSE(check.slipped);
    }
    SUBCASE("empty sets and bad configs throw") {
        CHECK_THROWS_AS(slip_condition(MarkerSet{}, ref, cfg), std::invalid_argument);
        SlipConfig bad = cfg;
        bad.epsilon_v = 0.0;
        CHECK_THROWS_AS(slip_condition(ref, ref, bad), std::invalid_argument);
    }
}

TEST_CASE("process_stream: static sequences never trigger") {
    const MarkerSet ref = grid(5, 12.0);
    std::vector<MarkerSet> frames(10, ref);
    SlipConfig cfg;
    cfg.gate = 5.0;
    for (double eps : {0.1, 1.5, 10.0}) {
        cfg.epsilon_v = eps;
        const StreamResult res = process_stream(frames, cfg);
        CHECK(res.events.empty());
        CHECK(res.warning_frames.empty());
    }
}

TEST_CASE("process_stream: ramp crosses the threshold at the analytic frame") {
    SlipSequenceSpec spec;
    spec.scene.width = 200;
    spec.scene.height = 160;
    spec.scene.spacing = 20.0;
    spec.scene.seed = 3;
    spec.n_frames = 14;
    spec.slip_start = 5;
    spec.slip_rate = 1.0;
    spec.noise_amplitude = 0.0;
    spec.with_images = false;

    const auto frames = marker_frames(gen_slip_sequence(spec));
    SlipConfig cfg;
    cfg.epsilon_v = 2.0;
    cfg.gate = 8.0;

    const StreamResult res = process_stream(frames, cfg);
    REQUIRE_FALSE(res.events.empty());
    // displacement (k-5) first strictly exceeds 2 at frame 8
    CHECK(res.events.front().frame_index == 8);
    CHECK(res.events.front().max_disp == doctest::Approx(3.0));
    // events form a suffix: every frame from the first event onward fires
    std::size_t expect = 8;
    for (const SlipEvent& e : res.events) {
        CHECK(e.frame_index == expect);
        ++expect;
    }
    CHECK(expect == frames.size());
}

TEST_CASE("process_stream: chained fallback covers displacement past the gate") {
    SlipSequenceSpec spec;
    spec.scene.width = 280;
    spec.scene.height = 200;
    spec.scene.spacing = 24.0;
    spec.scene.seed = 8;
    spec.n_frames = 16;
    spec.slip_start = 2;
    spec.slip_rate = 2.5; // total run 32.5 px, far beyond the gate
    spec.noise_amplitude = 0.1;
    spec.with_images = false;

    const auto frames = marker_frames(gen_slip_sequence(spec));
    SlipConfig cfg;
    cfg.epsilon_v = 2.0;
    cfg.gate = 8.0;

    const StreamResult res = process_stream(frames, cfg);
    REQUIRE_FALSE(res.events.empty());
    CHECK(res.events.front().frame_index == 3); // displacement 2.5 > 2 at frame 3

    // the last frame's displacement estimate must track the full accumulated run
    const double final_truth = (spec.n_frames - 1 - spec.slip_start) * spec.slip_rate;
    CHECK(res.events.back().frame_index == static_cast<std::size_t>(spec.n_frames - 1));
    CHECK(res.events.back().max_disp == doctest::Approx(final_truth).epsilon(0.05));
}

TEST_CASE("process_stream: threshold monotonicity") {
    SlipSequenceSpec spec;
    spec.scene.width = 180;
    spec.scene.height = 140;
    spec.scene.spacing = 22.0;
    spec.scene.seed = 12;
    spec.n_frames = 12;
    spec.slip_start = 4;
    spec.slip_rate = 0.8;
    spec.noise_amplitude = 0.15;
    spec.with_images = false;

    const auto frames = marker_frames(gen_slip_sequence(spec));
    SlipConfig cfg;
    cfg.gate = 8.0;

    std::size_t prev_events = std::numeric_limits<std::size_t>::max();
    for (double eps : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        cfg.epsilon_v = eps;
        const StreamResult res = process_stream(frames, cfg);
        CHECK(res.events.size() <= prev_events);
        prev_events = res.events.size();
    }
}

TEST_CASE("process_stream: error paths and warnings") {
    SlipConfig cfg;
    CHECK_THROWS_AS(process_stream({}, cfg), std::invalid_argument);

    const MarkerSet ref = grid(3, 15.0);
    std::vector<MarkerSet> frames(4, ref);
    frames[2].centers.clear(); // dropout frame
    const StreamResult res = process_stream(frames, cfg);
    REQUIRE(res.warning_frames.size() == 1);
    CHECK(res.warning_frames[0] == 2);
    CHECK(res.events.empty());
}

TEST_CASE("calibrate_epsilon: three times the static-hold maximum") {
    SlipSequenceSpec spec;
    spec.scene.width = 160;
    spec.scene.height = 120;
    spec.scene.spacing = 20.0;
    spec.scene.seed = 31;
    spec.n_frames = 10;
    spec.slip_start = 9; // effectively static
    spec.slip_rate = 0.0;
    spec.noise_amplitude = 0.15;
    spec.with_images = false;

    const auto frames = marker_frames(gen_slip_sequence(spec));
    SlipConfig cfg;
    cfg.gate = 5.0;
    const double suggested = calibrate_epsilon(frames, cfg);
    CHECK(suggested > 0.0);
    // jitter amplitude 0.15 per axis bounds the hold displacement by 0.43
    CHECK(suggested <= 3.0 * 0.15 * 2.0 * std::sqrt(2.0));

    // a slip sequence thresholded at the calibrated value detects cleanly
    SlipSequenceSpec slip = spec;
    slip.slip_start = 3;
    slip.slip_rate = 1.0;
    slip.n_frames = 12;
    const auto slip_frames = marker_frames(gen_slip_sequence(slip));
    cfg.epsilon_v = suggested;
    CHECK_FALSE(process_stream(slip_frames, cfg).events.empty());
    CHECK(process_stream(frames, cfg).events.empty());

    CHECK_THROWS_AS(calibrate_epsilon(std::span<const MarkerSet>(frames.data(), 1), cfg),
                    std::invalid_argument);
}
