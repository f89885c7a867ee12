// tacmode: marker <-> markerless transitions for optical tactile images.
//
// Subcommands cover the full pipeline: synthetic scene generation, marker
// extraction, mask offsetting, inpainting (fmm / harmonic / tacdiff),
// patch-merge demonstration, training-pair export, marker tracking, image and
// motion metrics, and streaming slip detection with threshold calibration.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tacmode/diffusion.hpp"
#include "tacmode/image.hpp"
#include "tacmode/inpaint.hpp"
#include "tacmode/markers.hpp"
#include "tacmode/metrics.hpp"
#include "tacmode/patches.hpp"
#include "tacmode/pipeline.hpp"
#include "tacmode/png_io.hpp"
#include "tacmode/slip.hpp"
#include "tacmode/synth.hpp"

namespace fs = std::filesystem;
using namespace tacmode;

namespace {

// ---------------------------------------------------------------- helpers

std::uint64_t env_seed_default() {
    if (const char* env = std::getenv("TACMODE_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw std::runtime_error("TACMODE_SEED is not a valid integer");
        }
    }
    return 0;
}

// numbered-frame ordering: sort by the last digit run in the stem, then name
std::vector<fs::path> list_frames(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir))
        throw std::runtime_error("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            files.push_back(entry.path());
    auto frame_number = [](const fs::path& p) {
        const std::string stem = p.stem().string();
        long long value = -1;
        std::size_t end = stem.find_last_of("0123456789");
        if (end != std::string::npos) {
            std::size_t begin = end;
            while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1])))
                --begin;
            value = std::stoll(stem.substr(begin, end - begin + 1));
        }
        return value;
    };
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
        const long long na = frame_number(a), nb = frame_number(b);
        if (na != nb) return na < nb;
        return a.filename() < b.filename();
    });
    return files;
}

struct ExtractFlags {
    double spacing = 16.0;
    double radius = 3.0;
    double k_sigma = 2.0;
    double min_contrast = 0.1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--spacing", spacing, "Expected marker spacing in px");
        cmd->add_option("--radius", radius, "Nominal marker radius in px");
        cmd->add_option("--k-sigma", k_sigma, "Threshold margin in local stddevs");
        cmd->add_option("--min-contrast", min_contrast, "Absolute threshold margin floor");
    }
    ExtractConfig config() const { return {spacing, radius, k_sigma, min_contrast}; }
};

MarkerSet load_set_any(const fs::path& path, const ExtractFlags& flags) {
    if (path.extension() == ".txt") return load_markers(path, flags.radius);
    const TactileImage img = load_image_png(path);
    return extract_markers(img, flags.config()).second;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    fs::path out;
    SceneSpec spec;
};

void run_synth(const SynthArgs& args) {
    const Scene scene = gen_scene(args.spec);
    fs::create_directories(args.out);
    save_png(scene.markerless, args.out / "markerless.png");
    save_png(scene.with_markers, args.out / "with_markers.png");
    save_png(scene.mask, args.out / "mask.png");
    save_markers(scene.markers, args.out / "markers.txt");
    save_motion_field(scene.field, args.out / "field.txt");

    nlohmann::json manifest;
    manifest["width"] = args.spec.width;
    manifest["height"] = args.spec.height;
    manifest["spacing"] = args.spec.spacing;
    manifest["radius"] = args.spec.radius;
    manifest["seed"] = args.spec.seed;
    manifest["texture_amplitude"] = args.spec.texture_amplitude;
    manifest["shear"] = {{"amplitude", args.spec.shear.amplitude},
                         {"cx", args.spec.shear.cx},
                         {"cy", args.spec.shear.cy},
                         {"sigma", args.spec.shear.sigma},
                         {"dir_x", args.spec.shear.dir_x},
                         {"dir_y", args.spec.shear.dir_y}};
    manifest["dome"] = {{"cx", args.spec.dome.cx},
                        {"cy", args.spec.dome.cy},
                        {"radius", args.spec.dome.radius},
                        {"intensity", args.spec.dome.intensity}};
    std::ofstream(args.out / "scene.json") << manifest.dump(2) << "\n";
    std::cout << "markers=" << scene.markers.size() << "\n";
}

// ---------------------------------------------------------------- inpaint

struct InpaintArgs {
    fs::path image, mask, out;
    std::string method = "fmm";
    std::string denoiser = "classical";
    std::uint64_t seed = 0;
    int steps = 50;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int patch = 256;
    int jobs = 1;
    int dilate_radius = 0;
    double window = 5.0;
    double tol = 1e-6;
    std::size_t max_iters = 0;
};

DenoiserHandle parse_denoiser(const std::string& text, int patch) {
    if (text == "classical") {
        DenoiserHandle h = DenoiserHandle::classical();
        h.patch_size = patch;
        return h;
    }
    if (text.rfind("oracle:", 0) == 0) {
        DenoiserHandle h = DenoiserHandle::oracle(load_image_png(text.substr(7)));
        h.patch_size = patch;
        return h;
    }
    if (text.rfind("external:", 0) == 0)
        return DenoiserHandle::external(text.substr(9), patch);
    throw std::runtime_error("unknown denoiser '" + text +
                             "' (expected classical | oracle:IMG | external:PROG)");
}

void run_inpaint(const InpaintArgs& args) {
    const TactileImage image = load_image_png(args.image);
    const MarkerMask mask = dilate(load_mask_png(args.mask), args.dilate_radius);
    const InpaintRequest req{image, mask};

    TactileImage out;
    if (args.method == "fmm") {
        out = inpaint_fmm(req, {args.window});
    } else if (args.method == "harmonic") {
        const HarmonicResult res = inpaint_harmonic(req, {args.tol, args.max_iters});
        if (!res.converged)
            std::cerr << "warning: harmonic relaxation stopped after " << res.iterations
                      << " iterations without reaching tol\n";
        out = res.image;
    } else if (args.method == "tacdiff") {
        const NoiseSchedule sched = schedule_linear(args.steps, args.beta_start, args.beta_end);
        const DenoiserHandle handle = parse_denoiser(args.denoiser, args.patch);
        out = inpaint_tacdiff(image, mask, handle, sched, Rng(args.seed), args.jobs);
    } else {
        throw std::runtime_error("unknown method '" + args.method +
                                 "' (expected fmm | harmonic | tacdiff)");
    }
    save_png(out, args.out);
    std::cout << "method=" << args.method << "\n";
}

// ---------------------------------------------------------------- others

void run_extract(const fs::path& image_path, const fs::path& out_mask,
                 const fs::path& out_markers, const ExtractFlags& flags) {
    const TactileImage img = load_image_png(image_path);
    const auto [mask, set] = extract_markers(img, flags.config());
    if (!out_mask.empty()) save_png(mask, out_mask);
    if (!out_markers.empty()) save_markers(set, out_markers);
    std::cout << "markers=" << set.size() << "\n";
}

void run_offset_mask(const fs::path& mask_path, const fs::path& markers_path,
                     std::optional<int> dx, std::optional<int> dy, const fs::path& out_mask,
                     const fs::path& out_markers, double radius) {
    const MarkerMask mask = load_mask_png(mask_path);
    const MarkerSet set = load_markers(markers_path, radius);
    if (!(dx && dy) && default_offset(set) == 0)
        throw std::runtime_error(
            "offset-mask: cannot derive a default offset from fewer than two markers; "
            "pass --dx/--dy");
    const int odx = dx ? *dx : default_offset(set);
    const int ody = dy ? *dy : default_offset(set);
    const auto [shifted, moved] = offset_mask(mask, set, odx, ody);
    save_png(shifted, out_mask);
    if (!out_markers.empty()) save_markers(moved, out_markers);
    std::cout << "dx=" << odx << "\ndy=" << ody << "\nmarkers=" << moved.size() << "\n";
}

void run_merge_demo(const fs::path& image_path, int patch, const fs::path& out) {
    const TactileImage img = load_image_png(image_path);
    const PatchLayout layout = plan_patches(img.width(), img.height(), patch);
    const TactileImage merged = merge_patches(layout, slice_patches(img, layout));
    if (!out.empty()) save_png(merged, out);

    std::cout << "patches=" << layout.size() << "\n";
    for (const Rect& r : layout.origins)
        std::cout << "origin=" << r.x0 << "," << r.y0 << "\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
        worst = std::max(worst, std::fabs(static_cast<double>(img.data()[i]) -
                                          merged.data()[i]));
    std::printf("max_reconstruction_error=%.3g\n", worst);
}

void run_make_pairs(const fs::path& image_path, const fs::path& out_dir, int count, int patch,
                    std::uint64_t seed, const ExtractFlags& flags) {
    const TactileImage image = load_image_png(image_path);
    fs::create_directories(out_dir);
    OffsetPairOptions opts;
    opts.extract = flags.config();
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        Rng pair_rng = rng.fork(static_cast<std::uint64_t>(i));
        const TrainingPair pair = make_offset_pair(image, pair_rng, patch, opts);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "pair_%04d", i);
        save_png(pair.input_patch, out_dir / (std::string(stem) + "_input.png"));
        save_png(pair.target_patch, out_dir / (std::string(stem) + "_target.png"));
        save_png(pair.mask_patch, out_dir / (std::string(stem) + "_mask.png"));
    }
    std::cout << "pairs=" << count << "\n";
}

void run_track(const fs::path& ref_path, const fs::path& cur_path, std::optional<double> gate,
               const fs::path& out, const ExtractFlags& flags) {
    const MarkerSet ref = load_set_any(ref_path, flags);
    const MarkerSet cur = load_set_any(cur_path, flags);
    if (ref.empty()) throw std::runtime_error("reference contains no markers");
    const double g = gate ? *gate : default_gate(ref);
    const MotionFieldResult res = motion_field(ref, cur, g);
    if (res.failed) throw std::runtime_error("tracking failed: zero marker matches");
    save_motion_field(res.field, out);
    std::printf("matched_fraction=%.4f\nmarkers=%zu\n", res.matched_fraction,
                res.field.anchors.size());
}

void run_metrics(const fs::path& a_path, const fs::path& b_path, const fs::path& pred_path,
                 const fs::path& truth_path, double gate) {
    if (!a_path.empty()) {
        const TactileImage a = load_image_png(a_path);
        const TactileImage b = load_image_png(b_path);
        const double m = mse(a, b);
        const double p = psnr(a, b);
        std::printf("mse=%.6f\n", m);
        if (std::isinf(p))
            std::printf("psnr=inf\n");
        else
            std::printf("psnr=%.6f\n", p);
        std::printf("ssim=%.6f\n", ssim(a, b));
    }
    if (!pred_path.empty()) {
        const MotionField pred = load_motion_field(pred_path);
        const MotionField truth = load_motion_field(truth_path);
        const MotionErrorReport r = motion_errors(pred, truth, gate);
        std::printf("e_rmse=%.6f\ne_mag=%.6f\nn_matched=%zu\nfailed=%d\n", r.e_rmse, r.e_mag,
                    r.n_matched, r.failed ? 1 : 0);
    }
}

std::vector<MarkerSet> load_frame_sets(const fs::path& dir, const ExtractFlags& flags,
                                       double* avg_ms = nullptr) {
    std::vector<fs::path> files = list_frames(dir, ".txt");
    std::vector<MarkerSet> sets;
    if (!files.empty()) {
        for (const fs::path& p : files) sets.push_back(load_markers(p, flags.radius));
        return sets;
    }
    files = list_frames(dir, ".png");
    if (files.empty())
        throw std::runtime_error("no .png or .txt frames in " + dir.string());
    double total_ms = 0.0;
    for (const fs::path& p : files) {
        const TactileImage img = load_image_png(p);
        const auto start = std::chrono::steady_clock::now();
        sets.push_back(extract_markers(img, flags.config()).second);
        total_ms += std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    }
    if (avg_ms) *avg_ms = total_ms / static_cast<double>(files.size());
    return sets;
}

void run_slip(const fs::path& frames_dir, const SlipConfig& cfg, double rate,
              const fs::path& out, const ExtractFlags& flags) {
    if (rate <= 0.0) throw std::runtime_error("--rate must be positive");
    double avg_ms = 0.0;
    const std::vector<MarkerSet> sets = load_frame_sets(frames_dir, flags, &avg_ms);
    const StreamResult res = process_stream(sets, cfg);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw std::runtime_error("cannot write " + out.string());
        os = &file;
    }
    char line[96];
    for (const SlipEvent& e : res.events) {
        std::snprintf(line, sizeof(line), "%zu,%.3f,%zu\n", e.frame_index, e.max_disp,
                      e.marker_index);
        *os << line;
    }
    for (std::size_t frame : res.warning_frames)
        std::cerr << "warning: frame " << frame << " had too few marker matches\n";
    if (avg_ms > 0.0)
        std::cerr << "info: marker extraction averaged " << avg_ms << " ms/frame (budget "
                  << 1000.0 / rate << " ms at " << rate << " Hz)\n";
}

void run_calibrate(const fs::path& frames_dir, double gate, const ExtractFlags& flags) {
    SlipConfig cfg;
    cfg.gate = gate;
    const std::vector<MarkerSet> sets = load_frame_sets(frames_dir, flags);
    const double suggested = calibrate_epsilon(sets, cfg);
    std::printf("suggested_epsilon=%.3f\n", suggested);
    if (suggested == 0.0)
        std::cerr << "warning: hold sequence shows zero displacement; the suggestion is "
                     "degenerate, collect a longer hold\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Marker <-> markerless transitions for optical tactile images"};
    app.require_subcommand(1);

    // ---- synth
    SynthArgs synth_args;
    synth_args.spec.seed = env_seed_default();
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic tactile scene bundle");
    synth->add_option("--out", synth_args.out, "Output directory")->required();
    synth->add_option("--width", synth_args.spec.width);
    synth->add_option("--height", synth_args.spec.height);
    synth->add_option("--spacing", synth_args.spec.spacing, "Marker grid pitch in px");
    synth->add_option("--radius", synth_args.spec.radius, "Marker radius in px");
    synth->add_option("--seed", synth_args.spec.seed, "Random seed");
    synth->add_option("--texture", synth_args.spec.texture_amplitude);
    synth->add_option("--shear-amp", synth_args.spec.shear.amplitude);
    synth->add_option("--shear-cx", synth_args.spec.shear.cx);
    synth->add_option("--shear-cy", synth_args.spec.shear.cy);
    synth->add_option("--shear-sigma", synth_args.spec.shear.sigma);
    synth->add_option("--dome-cx", synth_args.spec.dome.cx);
    synth->add_option("--dome-cy", synth_args.spec.dome.cy);
    synth->add_option("--dome-radius", synth_args.spec.dome.radius);
    synth->add_option("--dome-intensity", synth_args.spec.dome.intensity);

    // ---- extract
    fs::path ex_image, ex_out_mask, ex_out_markers;
    ExtractFlags ex_flags;
    CLI::App* extract = app.add_subcommand("extract", "Extract markers from a tactile image");
    extract->add_option("--image", ex_image, "Input PNG")->required();
    extract->add_option("--out-mask", ex_out_mask, "Marker mask PNG to write");
    extract->add_option("--out-markers", ex_out_markers, "Marker set text file to write");
    ex_flags.attach(extract);

    // ---- offset-mask
    fs::path om_mask, om_markers, om_out_mask, om_out_markers;
    std::optional<int> om_dx, om_dy;
    double om_radius = 3.0;
    CLI::App* offset = app.add_subcommand(
        "offset-mask", "Translate a marker mask so it misses the original markers");
    offset->add_option("--mask", om_mask, "Marker mask PNG")->required();
    offset->add_option("--markers", om_markers, "Marker set text file")->required();
    offset->add_option("--dx", om_dx, "Horizontal offset (default: half median spacing)");
    offset->add_option("--dy", om_dy, "Vertical offset (default: half median spacing)");
    offset->add_option("--radius", om_radius, "Nominal marker radius");
    offset->add_option("--out-mask", om_out_mask, "Translated mask PNG")->required();
    offset->add_option("--out-markers", om_out_markers, "Translated marker set text file");

    // ---- inpaint
    InpaintArgs in_args;
    in_args.seed = env_seed_default();
    CLI::App* inpaint = app.add_subcommand("inpaint", "Fill marker pixels in a tactile image");
    inpaint->add_option("--image", in_args.image, "Input PNG")->required();
    inpaint->add_option("--mask", in_args.mask, "Marker mask PNG")->required();
    inpaint->add_option("--out", in_args.out, "Output PNG")->required();
    inpaint->add_option("--method", in_args.method, "fmm | harmonic | tacdiff");
    inpaint->add_option("--denoiser", in_args.denoiser,
                        "tacdiff denoiser: classical | oracle:IMG | external:PROG");
    inpaint->add_option("--seed", in_args.seed, "Random seed (tacdiff)");
    inpaint->add_option("--steps", in_args.steps, "Diffusion steps (tacdiff)");
    inpaint->add_option("--beta-start", in_args.beta_start);
    inpaint->add_option("--beta-end", in_args.beta_end);
    inpaint->add_option("--patch", in_args.patch, "Denoiser patch side (tacdiff)");
    inpaint->add_option("--jobs", in_args.jobs, "Parallel patch workers (tacdiff)");
    inpaint->add_option("--dilate", in_args.dilate_radius,
                        "Grow the mask by N px before filling (covers marker rims)");
    inpaint->add_option("--window", in_args.window, "FMM neighborhood radius");
    inpaint->add_option("--tol", in_args.tol, "Harmonic convergence tolerance");
    inpaint->add_option("--max-iters", in_args.max_iters,
                        "Harmonic iteration cap (0 = 10x hole size)");

    // ---- merge-demo
    fs::path md_image, md_out;
    int md_patch = 256;
    CLI::App* merge = app.add_subcommand(
        "merge-demo", "Slice an image into patches and merge it back (layout check)");
    merge->add_option("--image", md_image, "Input PNG")->required();
    merge->add_option("--patch", md_patch, "Patch side");
    merge->add_option("--out", md_out, "Merged output PNG");

    // ---- make-pairs
    fs::path mp_image, mp_out;
    int mp_count = 8, mp_patch = 256;
    std::uint64_t mp_seed = env_seed_default();
    ExtractFlags mp_flags;
    CLI::App* pairs = app.add_subcommand(
        "make-pairs", "Export marker-offset training pairs from a marker image");
    pairs->add_option("--image", mp_image, "Input PNG with markers")->required();
    pairs->add_option("--out", mp_out, "Output directory")->required();
    pairs->add_option("--count", mp_count, "Number of pairs");
    pairs->add_option("--patch", mp_patch, "Patch side");
    pairs->add_option("--seed", mp_seed, "Random seed");
    mp_flags.attach(pairs);

    // ---- track
    fs::path tr_ref, tr_cur, tr_out;
    std::optional<double> tr_gate;
    ExtractFlags tr_flags;
    CLI::App* track = app.add_subcommand(
        "track", "Motion field between two frames (PNG images or marker text files)");
    track->add_option("--ref", tr_ref, "Reference frame (.png or .txt)")->required();
    track->add_option("--cur", tr_cur, "Current frame (.png or .txt)")->required();
    track->add_option("--gate", tr_gate, "Matching gate in px (default: 0.45 x spacing)");
    track->add_option("--out", tr_out, "Motion field text file")->required();
    tr_flags.attach(track);

    // ---- metrics
    fs::path me_a, me_b, me_pred, me_truth;
    double me_gate = 8.0;
    CLI::App* metrics_cmd =
        app.add_subcommand("metrics", "Image quality and marker motion metrics");
    metrics_cmd->add_option("--a", me_a, "First image PNG");
    metrics_cmd->add_option("--b", me_b, "Second image PNG");
    metrics_cmd->add_option("--pred", me_pred, "Predicted motion field text file");
    metrics_cmd->add_option("--truth", me_truth, "Ground-truth motion field text file");
    metrics_cmd->add_option("--gate", me_gate, "Anchor matching gate");

    // ---- slip
    fs::path sl_frames, sl_out;
    SlipConfig sl_cfg;
    double sl_rate = 30.0;
    ExtractFlags sl_flags;
    CLI::App* slip = app.add_subcommand(
        "slip", "Detect slip over a directory of numbered frames (PNG or marker text)");
    slip->add_option("--frames", sl_frames, "Frame directory")->required();
    slip->add_option("--epsilon", sl_cfg.epsilon_v, "Slip threshold in px");
    slip->add_option("--gate", sl_cfg.gate, "Matching gate in px");
    slip->add_option("--min-markers", sl_cfg.min_markers, "Minimum matches per frame");
    slip->add_option("--rate", sl_rate, "Nominal frame rate in Hz");
    slip->add_option("--out", sl_out, "Events file (default: stdout)");
    sl_flags.attach(slip);

    // ---- calibrate-slip
    fs::path cs_frames;
    double cs_gate = 8.0;
    ExtractFlags cs_flags;
    CLI::App* calibrate = app.add_subcommand(
        "calibrate-slip", "Suggest an epsilon from a known-static hold sequence");
    calibrate->add_option("--frames", cs_frames, "Frame directory of the static hold")
        ->required();
    calibrate->add_option("--gate", cs_gate, "Matching gate in px");
    cs_flags.attach(calibrate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) run_synth(synth_args);
        if (*extract) run_extract(ex_image, ex_out_mask, ex_out_markers, ex_flags);
        if (*offset)
            run_offset_mask(om_mask, om_markers, om_dx, om_dy, om_out_mask, om_out_markers,
                            om_radius);
        if (*inpaint) run_inpaint(in_args);
        if (*merge) run_merge_demo(md_image, md_patch, md_out);
        if (*pairs) run_make_pairs(mp_image, mp_out, mp_count, mp_patch, mp_seed, mp_flags);
        if (*track) run_track(tr_ref, tr_cur, tr_gate, tr_out, tr_flags);
        if (*metrics_cmd) {
            if (me_a.empty() && me_pred.empty())
                throw std::runtime_error("metrics: pass --a/--b images or --pred/--truth fields");
            if (me_a.empty() != me_b.empty())
                throw std::runtime_error("metrics: --a and --b go together");
            if (me_pred.empty() != me_truth.empty())
                throw std::runtime_error("metrics: --pred and --truth go together");
            run_metrics(me_a, me_b, me_pred, me_truth, me_gate);
        }
        if (*slip) run_slip(sl_frames, sl_cfg, sl_rate, sl_out, sl_flags);
        if (*calibrate) run_calibrate(cs_frames, cs_gate, cs_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
