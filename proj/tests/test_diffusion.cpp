#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "tacmode/diffusion.hpp"
#include "tacmode/pipeline.hpp"
#include "tacmode/synth.hpp"
#include "tacmode/tact_io.hpp"
#include "test_helpers.hpp"

using namespace tacmode;

#ifndef TACMODE_TEST_BIN_DIR
#define TACMODE_TEST_BIN_DIR "."
#endif

namespace {

std::filesystem::path helper(const char* name) {
    return std::filesystem::path(TACMODE_TEST_BIN_DIR) / name;
}

MarkerMask disk_mask(int w, int h, double cx, double cy, double r) {
    MarkerMask mask(w, h, 0);
    stamp_disk_mask(mask, cx, cy, r);
    return mask;
}

} // namespace

TEST_CASE("schedule_linear: anchors and monotonicity") {
    const NoiseSchedule one = schedule_linear(1, 0.5, 0.5);
    CHECK(one.alpha_bar(0) == 1.0);
    CHECK(one.alpha_bar(1) == doctest::Approx(0.5));

    const NoiseSchedule two = schedule_linear(2, 0.1, 0.2);
    CHECK(two.betas[0] == doctest::Approx(0.1));
    CHECK(two.betas[1] == doctest::Approx(0.2));
    CHECK(two.alpha_bar(1) == doctest::Approx(0.9));
    CHECK(two.alpha_bar(2) == doctest::Approx(0.72));

    const NoiseSchedule dflt = schedule_linear(50);
    CHECK(dflt.alpha_bar(0) == 1.0);
    for (int t = 1; t <= 50; ++t) {
        CHECK(dflt.alpha_bar(t) < dflt.alpha_bar(t - 1));
        CHECK(dflt.betas[static_cast<std::size_t>(t - 1)] > 0.0);
        CHECK(dflt.betas[static_cast<std::size_t>(t - 1)] < 1.0);
    }

    CHECK_THROWS_AS(schedule_linear(0), std::invalid_argument);
    CHECK_THROWS_AS(schedule_linear(10, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(schedule_linear(10, 0.2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(schedule_linear(10, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("add_noise: identity at t=0 and the closed-form blend") {
    const NoiseSchedule sched = schedule_linear(1, 0.75, 0.75); // alpha_bar_1 = 0.25
    TactileImage clean(1, 1);
    for (int c = 0; c < 3; ++c) clean.at(0, 0, c) = 0.8f;

    Rng rng(1);
    CHECK(testutil::bit_equal(add_noise(clean, 0, sched, rng), clean));

    TactileImage unit_noise(1, 1, 1.0f);
    const TactileImage noised = add_noise_with(clean, 1, sched, unit_noise);
    // 0.5 * 0.8 + sqrt(0.75) * 1.0 = 1.26603
    CHECK(noised.at(0, 0, 0) == doctest::Approx(1.26603).epsilon(1e-5));
    CHECK_FALSE(noised.is_normalized()); // intermediates are deliberately unclamped

    CHECK_THROWS_AS(add_noise(clean, 2, sched, rng), std::invalid_argument);
    CHECK_THROWS_AS(add_noise(clean, -1, sched, rng), std::invalid_argument);
}

TEST_CASE("add_noise: Monte-Carlo mean matches sqrt(abar)*clean") {
    const NoiseSchedule sched = schedule_linear(10, 0.02, 0.2);
    const int t = 6;
    const double abar = sched.alpha_bar(t);
    TactileImage clean(2, 2);
    for (std::size_t i = 0; i < clean.size(); ++i)
        clean.data()[i] = 0.1f + 0.07f * static_cast<float>(i);

    Rng rng(99);
    const int n = 100000;
    std::vector<double> mean(clean.size(), 0.0);
    for (int k = 0; k < n; ++k) {
        const TactileImage draw = add_noise(clean, t, sched, rng);
        for (std::size_t i = 0; i < draw.size(); ++i) mean[i] += draw.data()[i];
    }
    const double sigma = std::sqrt(1.0 - abar);
    const double tol = 3.0 * sigma / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < clean.size(); ++i) {
        mean[i] /= n;
        CHECK(std::fabs(mean[i] - std::sqrt(abar) * clean.data()[i]) <= tol);
    }
}

TEST_CASE("sample: oracle denoiser reproduces the rectified clean image exactly") {
    SceneSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.spacing = 16.0;
    spec.radius = 3.0;
    spec.seed = 2;
    const Scene scene = gen_scene(spec);
    const TactileImage expected = rectify(scene.markerless, scene.with_markers, scene.mask);
    const DenoiserHandle oracle = DenoiserHandle::oracle(scene.markerless);

    for (int T : {1, 5, 50}) {
        const NoiseSchedule sched = schedule_linear(T);
        for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
            Rng rng(seed);
            const TactileImage out = sample(scene.with_markers, scene.mask, oracle, sched, rng);
            CHECK(testutil::bit_equal(out, expected));
        }
    }
}

TEST_CASE("sample: all-zero mask returns the input for any denoiser") {
    Rng img_rng(4);
    const TactileImage img = testutil::random_image(32, 32, img_rng);
    const MarkerMask mask(32, 32, 0);
    const NoiseSchedule sched = schedule_linear(10);

    Rng rng(5);
    const TactileImage out =
        sample(img, mask, DenoiserHandle::classical(), sched, rng);
    CHECK(testutil::bit_equal(out, img));
}

TEST_CASE("sample: known pixels conserved at every iteration") {
    SceneSpec spec;
    spec.width = 48;
    spec.height = 48;
    spec.spacing = 14.0;
    spec.radius = 2.5;
    spec.seed = 6;
    const Scene scene = gen_scene(spec);
    const NoiseSchedule sched = schedule_linear(8);

    SampleOptions opts;
    std::size_t steps_seen = 0;
    opts.on_step = [&](int, const TactileImage& current) {
        ++steps_seen;
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) {
                if (scene.mask.at(x, y)) continue;
                for (int c = 0; c < 3; ++c)
                    REQUIRE(current.at(x, y, c) == scene.with_markers.at(x, y, c));
            }
    };
    Rng rng(9);
    sample(scene.with_markers, scene.mask, DenoiserHandle::classical(), sched, rng, opts);
    CHECK(steps_seen == 8);
}

TEST_CASE("sample: classical denoiser refills a constant hole") {
    const TactileImage img(48, 48, 0.55f);
    const MarkerMask mask = disk_mask(48, 48, 24.0, 24.0, 4.0);
    const NoiseSchedule sched = schedule_linear(10);

    Rng rng(12);
    const TactileImage out = sample(img, mask, DenoiserHandle::classical(), sched, rng);
    const TactileImage reference = inpaint_harmonic({img, mask}).image; // exactly 0.55
    CHECK(testutil::max_abs_diff(out, reference) <= 0.01);
}

TEST_CASE("sample: identical seeds produce identical outputs") {
    SceneSpec spec;
    spec.width = 40;
    spec.height = 40;
    spec.spacing = 12.0;
    spec.radius = 2.0;
    const Scene scene = gen_scene(spec);
    const NoiseSchedule sched = schedule_linear(6);

    Rng rng_a(1234), rng_b(1234), rng_c(77);
    const TactileImage a =
        sample(scene.with_markers, scene.mask, DenoiserHandle::classical(), sched, rng_a);
    const TactileImage b =
        sample(scene.with_markers, scene.mask, DenoiserHandle::classical(), sched, rng_b);
    const TactileImage c =
        sample(scene.with_markers, scene.mask, DenoiserHandle::classical(), sched, rng_c);
    CHECK(testutil::bit_equal(a, b));
    CHECK_FALSE(testutil::bit_equal(a, c));
}

TEST_CASE("classical_denoiser: identity regimes") {
    const NoiseSchedule sched = schedule_linear(10, 0.002, 0.002);

    SUBCASE("no noise at t=0 is near-identity on a smooth image") {
        const TactileImage img = testutil::ramp_image(32, 32);
        const TactileImage out = classical_denoiser(img, 0, sched);
        CHECK(testutil::max_abs_diff(out, img) <= 0.02);
    }
    SUBCASE("constant input stays constant") {
        const TactileImage img(24, 24, 0.3f);
        const TactileImage out = classical_denoiser(img, 7, sched);
        const float v0 = out.at(0, 0, 0);
        for (float v : out.data()) CHECK(v == v0);
    }
    SUBCASE("forward-noised constant is recovered within 0.05 per pixel") {
        // alpha_bar_5 = 0.998^5 -> noise level sqrt(1-abar) ~ 0.1
        const int t = 5;
        const TactileImage clean(64, 64, 0.5f);
        Rng rng(314);
        const TactileImage noisy = add_noise(clean, t, sched, rng);
        const TactileImage out = classical_denoiser(noisy, t, sched);
        CHECK(testutil::max_abs_diff(out, clean) <= 0.05);
    }
}

TEST_CASE("TACT tensor format round trip") {
    testutil::ScratchDir scratch("tact");
    Rng rng(8);
    TactRequest req;
    req.image = testutil::random_image(20, 14, rng);
    req.mask = testutil::random_mask(20, 14, 0.2, rng);
    req.t = 37;

    const auto req_path = scratch.path / "req.tact";
    write_tact_request(req, req_path);
    const TactRequest back = read_tact_request(req_path);
    CHECK(back.t == 37);
    CHECK(testutil::bit_equal(back.image, req.image));
    CHECK(back.mask.data() == req.mask.data());

    // leading magic bytes are literal "TACT"
    std::FILE* f = std::fopen(req_path.string().c_str(), "rb");
    char magic[4];
    REQUIRE(std::fread(magic, 1, 4, f) == 4);
    std::fclose(f);
    CHECK(std::string(magic, 4) == "TACT");

    const auto rep_path = scratch.path / "rep.tact";
    write_tact_reply(req.image, rep_path);
    CHECK(testutil::bit_equal(read_tact_reply(rep_path), req.image));

    CHECK_THROWS_AS(read_tact_reply(scratch.path / "missing.tact"), std::runtime_error);
}

TEST_CASE("external_denoiser: echo, constant, and failure modes") {
    Rng rng(15);
    const TactileImage noisy = testutil::random_image(24, 24, rng);
    const MarkerMask mask = testutil::random_mask(24, 24, 0.2, rng);
    const NoiseSchedule sched = schedule_linear(4);

    SUBCASE("echo program returns the input bit-exact") {
        const DenoiserHandle h = DenoiserHandle::external(helper("tact_echo"), 24);
        const TactileImage out = external_denoiser(noisy, mask, 2, h);
        CHECK(testutil::bit_equal(out, noisy));
    }
    SUBCASE("constant program returns an all-0.5 image") {
        const DenoiserHandle h = DenoiserHandle::external(helper("tact_const"), 24);
        const TactileImage out = external_denoiser(noisy, mask, 2, h);
        for (float v : out.data()) CHECK(v == 0.5f);
    }
    SUBCASE("wrong reply dimensions raise a dimension error") {
        const DenoiserHandle h = DenoiserHandle::external(helper("tact_badreply"), 24);
        CHECK_THROWS_WITH_AS(external_denoiser(noisy, mask, 2, h),
                             doctest::Contains("expected 24x24"), std::runtime_error);
    }
    SUBCASE("nonzero exit carries diagnostics and the step index") {
        ::setenv("TACT_FAIL", "1", 1);
        const DenoiserHandle h = DenoiserHandle::external(helper("tact_badreply"), 24);
        CHECK_THROWS_WITH_AS(external_denoiser(noisy, mask, 3, h),
                             doctest::Contains("simulated denoiser crash"), std::runtime_error);
        ::unsetenv("TACT_FAIL");
    }
    SUBCASE("sample drives an external denoiser end to end") {
        const DenoiserHandle h = DenoiserHandle::external(helper("tact_echo"), 24);
        Rng loop_rng(21);
        const TactileImage out = sample(noisy, mask, h, sched, loop_rng);
        // echo behaves as an identity denoiser; known pixels must be conserved
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 24; ++x)
                if (!mask.at(x, y))
                    for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == noisy.at(x, y, c));
    }
    SUBCASE("patch-size contract is enforced") {
        const DenoiserHandle h = DenoiserHandle::external(helper("tact_echo"), 64);
        Rng loop_rng(22);
        CHECK_THROWS_AS(sample(noisy, mask, h, sched, loop_rng), std::invalid_argument);
        CHECK_THROWS_AS(DenoiserHandle::external(helper("tact_echo"), 8).validate(),
                        std::invalid_argument);
    }
}

TEST_CASE("reference_loss: closed-form cases") {
    TactileImage denoised(1, 1), target(1, 1);
    for (int c = 0; c < 3; ++c) {
        denoised.at(0, 0, c) = 0.5f;
        target.at(0, 0, c) = 0.2f;
    }
    MarkerMask on(1, 1, 1), off(1, 1, 0);

    CHECK(reference_loss(target, target, on) == 0.0);
    CHECK(reference_loss(denoised, target, on) == doctest::Approx(0.27).epsilon(1e-6));
    CHECK(reference_loss(denoised, target, off) == 0.0);
    CHECK_THROWS_AS(reference_loss(denoised, TactileImage(2, 1), on), std::invalid_argument);

    // non-negative, zero iff masked regions agree
    Rng rng(33);
    const TactileImage a = testutil::random_image(8, 8, rng);
    TactileImage b = a;
    MarkerMask mask = testutil::random_mask(8, 8, 0.3, rng);
    CHECK(reference_loss(a, b, mask) == 0.0);
    b.at(0, 0, 0) += 0.25f;
    if (mask.at(0, 0)) CHECK(reference_loss(a, b, mask) > 0.0);
}

TEST_CASE("make_offset_pair: contract on synthetic scenes") {
    SceneSpec spec;
    spec.width = 200;
    spec.height = 160;
    spec.spacing = 20.0;
    spec.radius = 3.0;
    spec.seed = 77;
    const Scene scene = gen_scene(spec);

    OffsetPairOptions opts;
    opts.extract.expected_spacing = spec.spacing;
    opts.extract.nominal_radius = spec.radius;

    SUBCASE("mask disjointness and marker presence") {
        Rng rng(100);
        const TrainingPair pair = make_offset_pair(scene.with_markers, rng, 96, opts);
        CHECK(pair.mask_patch.count_set() > 0);
        CHECK(pair.input_patch.same_size(pair.target_patch));
        CHECK(pair.mask_patch.width() == 96);

        // translated markers must not touch the original marker pixels
        const auto [orig_mask, orig_set] = extract_markers(scene.with_markers, opts.extract);
        const MarkerMask orig_in_patch = crop(orig_mask, pair.crop_rect);
        for (std::size_t i = 0; i < orig_in_patch.size(); ++i)
            CHECK((orig_in_patch.data()[i] & pair.mask_patch.data()[i]) == 0);

        // offsets equal half the median marker spacing, within rounding
        const double half = 0.5 * median_spacing(orig_set);
        CHECK(std::fabs(pair.offset_dx - half) <= 1.0);
        CHECK(std::fabs(pair.offset_dy - half) <= 1.0);

        // input = target with markers composited; outside the mask they agree
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x)
                for (int c = 0; c < 3; ++c) {
                    if (pair.mask_patch.at(x, y))
                        CHECK(pair.input_patch.at(x, y, c) == opts.marker_value);
                    else
                        CHECK(pair.input_patch.at(x, y, c) == pair.target_patch.at(x, y, c));
                }
    }
    SUBCASE("deterministic under a fixed seed") {
        Rng rng_a(55), rng_b(55);
        const TrainingPair a = make_offset_pair(scene.with_markers, rng_a, 96, opts);
        const TrainingPair b = make_offset_pair(scene.with_markers, rng_b, 96, opts);
        CHECK(testutil::bit_equal(a.input_patch, b.input_patch));
        CHECK(testutil::bit_equal(a.target_patch, b.target_patch));
        CHECK(a.mask_patch.data() == b.mask_patch.data());
        CHECK(a.crop_rect.x0 == b.crop_rect.x0);
    }
    SUBCASE("image with no markers is an error") {
        const TactileImage flat(128, 128, 0.5f);
        Rng rng(1);
        CHECK_THROWS_WITH_AS(make_offset_pair(flat, rng, 96, opts),
                             doctest::Contains("no markers"), std::runtime_error);
    }
}

TEST_CASE("inpaint_tacdiff: patched full-image path") {
    SceneSpec spec;
    spec.width = 96;
    spec.height = 72;
    spec.spacing = 14.0;
    spec.radius = 2.0;
    spec.seed = 41;
    const Scene scene = gen_scene(spec);
    const NoiseSchedule sched = schedule_linear(5);
    DenoiserHandle handle = DenoiserHandle::classical();
    handle.patch_size = 48; // forces a 3x2 patch layout

    const TactileImage a =
        inpaint_tacdiff(scene.with_markers, scene.mask, handle, sched, Rng(7), 1);
    const TactileImage b =
        inpaint_tacdiff(scene.with_markers, scene.mask, handle, sched, Rng(7), 4);

    // worker count must not change the result
    CHECK(testutil::bit_equal(a, b));
    // known pixels bit-exact after merging
    for (int y = 0; y < 72; ++y)
        for (int x = 0; x < 96; ++x)
            if (!scene.mask.at(x, y))
                for (int c = 0; c < 3; ++c)
                    CHECK(a.at(x, y, c) == scene.with_markers.at(x, y, c));

    // oracle denoiser through the patched path reproduces the rectified image
    const TactileImage expected = rectify(scene.markerless, scene.with_markers, scene.mask);
    DenoiserHandle oracle = DenoiserHandle::oracle(scene.markerless);
    oracle.patch_size = 48;
    const TactileImage out =
        inpaint_tacdiff(scene.with_markers, scene.mask, oracle, sched, Rng(3), 2);
    CHECK(testutil::max_abs_diff(out, expected) <= 1e-6);
}
