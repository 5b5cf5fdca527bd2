// gaborsplat command line: train / render / eval / synth / gradcheck.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gaborsplat/gaborsplat.hpp"

namespace fs = std::filesystem;
using namespace gsp;

namespace {

struct ResFlag {
    int w = 0, h = 0;
};

ResFlag parse_res(const std::string& s) {
    ResFlag r;
    char extra;
    if (std::sscanf(s.c_str(), "%dx%d%c", &r.w, &r.h, &extra) != 2 || r.w < 1 || r.h < 1)
        throw std::runtime_error("bad resolution '" + s + "' (want WxH)");
    return r;
}

// A dataset source is a COLMAP model dir, a dir holding transforms.json,
// or a transforms-style .json file.
Dataset load_dataset(const std::string& data, std::string format, const std::string& points_file,
                     bool need_images, bool need_points) {
    if (format == "auto") {
        if (fs::is_directory(data))
            format = fs::exists(fs::path(data) / "cameras.txt") ? "colmap" : "transforms";
        else
            format = "transforms";
    }

    Dataset ds;
    std::string points_default;
    if (format == "colmap") {
        ds = load_colmap(data);
        points_default = (fs::path(data) / "points.txt").string();  // unusual; points3D wins
    } else if (format == "transforms") {
        fs::path file(data);
        if (fs::is_directory(file)) file /= "transforms.json";
        ds = load_transforms(file.string());
        points_default = (file.parent_path() / "points.txt").string();
    } else {
        throw std::runtime_error("unknown format '" + format + "' (want colmap or transforms)");
    }

    if (!points_file.empty())
        ds.points = load_points_txt(points_file);
    else if (ds.points.empty() && need_points) {
        if (!fs::exists(points_default))
            throw std::runtime_error("no init points: supply --points or a points.txt next to "
                                     "the dataset");
        ds.points = load_points_txt(points_default);
    }
    if (need_points && ds.points.empty())
        throw std::runtime_error("dataset has no initialization points");

    if (need_images) load_view_images(ds);
    ds.validate();
    return ds;
}

struct CommonOpts {
    std::string data;
    std::string format = "auto";
    std::string points;
    int threads = 0;
};

// ---------------------------------------------------------------- train

struct TrainOpts {
    CommonOpts common;
    std::string out;
    std::string mode = "gabor";
    int n_waves = 4;
    int iters = 30000;
    std::uint64_t seed = 0;
    bool densify = false;
    int eval_every = 1000;
    int checkpoint_every = 0;
    double split_fraction = 0.125;
    bool split_random = false;
    LossWeights loss;
    LearningRates lrs;
    RasterConfig raster;
};

int cmd_train(const TrainOpts& o) {
    TrainConfig cfg;
    cfg.iterations = o.iters;
    cfg.mode = mode_from_string(o.mode);
    cfg.n_waves = o.n_waves;
    cfg.seed = o.seed;
    cfg.lrs = o.lrs;
    cfg.loss = o.loss;
    cfg.raster = o.raster;
    cfg.raster.threads = o.common.threads;
    cfg.eval_every = o.eval_every;
    cfg.checkpoint_every = o.checkpoint_every;
    cfg.split_fraction = o.split_fraction;
    cfg.split_random = o.split_random;
    cfg.densify = o.densify;
    cfg.validate();

    Dataset ds = load_dataset(o.common.data, o.common.format, o.common.points, true, true);

    fs::create_directories(o.out);
    std::ofstream log(fs::path(o.out) / "train.log", std::ios::binary);
    if (!log) throw std::runtime_error("cannot open '" + o.out + "/train.log' for writing");

    CheckpointSink sink = [&](const Scene& s, int iters_done, bool is_final) {
        char name[64];
        std::snprintf(name, sizeof name, "ckpt_%06d.gspl", iters_done);
        save_checkpoint((fs::path(o.out) / name).string(), s);
        if (is_final) save_checkpoint((fs::path(o.out) / "final.gspl").string(), s);
    };

    TrainResult r = train(ds, cfg, log, sink);

    std::string summary = "final";
    summary += " train_views=" + std::to_string(r.split.train.size());
    summary += " test_views=" + std::to_string(r.split.test.size());
    if (r.final_eval.views > 0) {
        summary += " psnr=" + fmt_real(r.final_eval.psnr);
        summary += " ssim=" + fmt_real(r.final_eval.ssim);
    }
    log << summary << "\n";
    std::cout << summary << "\n";
    std::cout << "checkpoint: " << (fs::path(o.out) / "final.gspl").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- render

struct RenderOpts {
    std::string ckpt;
    std::string camera;
    std::string out;
    bool show_splats = false;
    std::uint64_t seed = 0;
    int threads = 0;
};

Camera camera_from_spec(const std::string& spec) {
    size_t at = spec.rfind('@');
    if (at != std::string::npos && at + 1 < spec.size() &&
        spec.find_first_not_of("0123456789", at + 1) == std::string::npos) {
        std::string path = spec.substr(0, at);
        int index = std::stoi(spec.substr(at + 1));
        Dataset ds = load_dataset(path, "auto", "", false, false);
        if (index < 0 || index >= int(ds.views.size()))
            throw std::runtime_error("camera index " + std::to_string(index) +
                                     " out of range (dataset has " +
                                     std::to_string(ds.views.size()) + " views)");
        return ds.cameras[ds.views[index].camera];
    }
    Dataset ds = load_transforms(spec);
    return ds.cameras[ds.views[0].camera];
}

int cmd_render(const RenderOpts& o) {
    Scene scene = load_checkpoint(o.ckpt);
    Camera cam = camera_from_spec(o.camera);
    RasterConfig rc;
    rc.threads = o.threads;

    save_png(o.out, clamped01(render_forward(scene, cam, rc).color));
    std::cout << "wrote " << o.out << "\n";

    if (o.show_splats) {
        Scene vis = scene;
        Rng rng(o.seed);
        for (int i = 0; i < vis.count(); ++i) {
            Real* r = vis.prim(i);
            Vec3 c{rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95)};
            for (int ch = 0; ch < 3; ++ch) r[10 + ch] = r[13 + ch] = logit((&c.x)[ch]);
            for (int wv = 0; wv < vis.n_waves; ++wv) {
                r[kBaseStride + wv] = (wv == 0) ? 1.0 : 0.0;
                r[kBaseStride + vis.n_waves + wv] = 0.0;
                r[kBaseStride + 2 * vis.n_waves + wv] = 0.0;
            }
        }
        fs::path p(o.out);
        std::string splat_path = (p.parent_path() / (p.stem().string() + ".splats.png")).string();
        save_png(splat_path, clamped01(render_forward(vis, cam, rc).color));
        std::cout << "wrote " << splat_path << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------ eval

struct EvalOpts {
    CommonOpts common;
    std::string ckpt;
    std::string split = "test";
    double split_fraction = 0.125;
};

int cmd_eval(const EvalOpts& o) {
    Scene scene = load_checkpoint(o.ckpt);
    Dataset ds = load_dataset(o.common.data, o.common.format, "", true, false);

    std::vector<std::string> names;
    for (const View& v : ds.views) names.push_back(v.name);
    ViewSplit split = split_train_test(names, o.split_fraction, 0, false);

    std::vector<int> chosen;
    if (o.split == "test")
        chosen = split.test;
    else if (o.split == "train")
        chosen = split.train;
    else if (o.split == "all") {
        chosen = split.train;
        chosen.insert(chosen.end(), split.test.begin(), split.test.end());
        std::sort(chosen.begin(), chosen.end(),
                  [&](int a, int b) { return names[a] < names[b]; });
    } else {
        throw std::runtime_error("unknown split '" + o.split + "' (want test, train, or all)");
    }
    if (chosen.empty()) throw std::runtime_error("split '" + o.split + "' is empty");

    RasterConfig rc;
    rc.threads = o.common.threads;
    Real psnr_sum = 0, ssim_sum = 0;
    std::cout << "view\tpsnr\tssim\n";
    for (int vi : chosen) {
        const View& v = ds.views[vi];
        Image rendered = quantized8(render_forward(scene, ds.cameras[v.camera], rc).color);
        Real p = psnr(rendered, v.image), s = ssim(rendered, v.image);
        psnr_sum += p;
        ssim_sum += s;
        std::cout << v.name << "\t" << fmt_real(p) << "\t" << fmt_real(s) << "\n";
    }
    std::cout << "mean\t" << fmt_real(psnr_sum / Real(chosen.size())) << "\t"
              << fmt_real(ssim_sum / Real(chosen.size())) << "\n";
    std::cout << "LPIPS: not supported\n";
    return 0;
}

// ----------------------------------------------------------------- synth

struct SynthOpts {
    std::string preset = "stripes";
    int views = 16;
    std::string res = "128x128";
    double freq = 8.0;
    std::string out;
    std::uint64_t seed = 0;
    int grid = 8;
};

int cmd_synth(const SynthOpts& o) {
    SynthConfig cfg;
    cfg.preset = preset_from_string(o.preset);
    cfg.views = o.views;
    ResFlag r = parse_res(o.res);
    cfg.width = r.w;
    cfg.height = r.h;
    cfg.freq = o.freq;
    cfg.seed = o.seed;
    cfg.grid = o.grid;
    cfg.validate();

    Dataset ds = synth_dataset(cfg);
    fs::create_directories(o.out);
    std::vector<std::string> files;
    for (const View& v : ds.views) {
        save_png((fs::path(o.out) / v.path).string(), v.image);
        files.push_back(v.path);
    }
    save_transforms((fs::path(o.out) / "transforms.json").string(), ds.cameras, files);
    save_points_txt((fs::path(o.out) / "points.txt").string(), ds.points);
    std::cout << "wrote " << ds.views.size() << " views to " << o.out << "\n";
    return 0;
}

// ------------------------------------------------------------- gradcheck

struct GradcheckOpts {
    std::uint64_t seed = 0;
    int primitives = 8;
    std::string res = "24x24";
    int n_waves = 4;
    std::string mode = "gabor";
    double h = 1e-5;
    double rel_tol = 1e-4;
    double abs_tol = 1e-7;
    std::string corrupt_group;
};

int cmd_gradcheck(const GradcheckOpts& o) {
    GradcheckConfig cfg;
    cfg.seed = o.seed;
    cfg.primitives = o.primitives;
    ResFlag r = parse_res(o.res);
    cfg.width = r.w;
    cfg.height = r.h;
    cfg.n_waves = o.n_waves;
    cfg.mode = mode_from_string(o.mode);
    cfg.h = o.h;
    cfg.rel_tol = o.rel_tol;
    cfg.abs_tol = o.abs_tol;
    cfg.corrupt_group = o.corrupt_group;

    GradcheckReport report = run_gradcheck(cfg);
    for (const GroupReport& g : report.groups)
        std::cout << "group=" << g.group << " max_rel=" << fmt_real(g.max_rel) << "\n";
    if (report.pass) {
        std::cout << "gradcheck: PASS\n";
        return 0;
    }
    for (const GroupReport& g : report.groups)
        if (!g.pass)
            std::cout << "FAIL group=" << g.group << " rel=" << fmt_real(g.max_rel)
                      << " prim=" << g.worst_prim << " offset=" << g.worst_offset
                      << " analytic=" << fmt_real(g.analytic) << " fd=" << fmt_real(g.fd)
                      << "\n";
    std::cout << "gradcheck: FAIL\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaborsplat: differentiable 3D Gabor splatting"};
    app.require_subcommand(1);

    TrainOpts to;
    CLI::App* train_cmd = app.add_subcommand("train", "Fit splats to a posed image dataset");
    train_cmd->set_config("--config", "", "Read flags from a key=value config file");
    train_cmd->add_option("--data", to.common.data, "Dataset directory or transforms.json")
        ->required();
    train_cmd->add_option("--format", to.common.format,
                          "Dataset format: colmap, transforms, or auto");
    train_cmd->add_option("--points", to.common.points, "Init points file (x y z r g b lines)");
    train_cmd->add_option("--out", to.out, "Output directory")->required();
    train_cmd->add_option("--mode", to.mode,
                          "gabor, baselineA, baselineB, baselineC, or gaussian_only");
    train_cmd->add_option("--n-waves", to.n_waves, "Waves per primitive (1-16)");
    train_cmd->add_option("--iters", to.iters, "Training iterations");
    train_cmd->add_option("--seed", to.seed, "RNG seed")->required();
    train_cmd->add_flag("--densify", to.densify, "Densification (unsupported)");
    train_cmd->add_option("--threads", to.common.threads, "Worker threads (0 = hardware)");
    train_cmd->add_option("--eval-every", to.eval_every, "Held-out eval cadence (0 = final only)");
    train_cmd->add_option("--checkpoint-every", to.checkpoint_every,
                          "Checkpoint cadence (0 = final only)");
    train_cmd->add_option("--split-fraction", to.split_fraction, "Held-out view fraction");
    train_cmd->add_flag("--split-random", to.split_random,
                        "Random split instead of every-Nth-by-name");
    train_cmd->add_option("--lambda-dssim", to.loss.lambda_dssim, "D-SSIM weight in (1-l)L1+l*DSSIM");
    train_cmd->add_option("--w-dist", to.loss.w_dist, "Distortion loss weight");
    train_cmd->add_option("--w-normal", to.loss.w_normal, "Normal consistency loss weight");
    train_cmd->add_option("--normal-start-iter", to.loss.normal_start_iter,
                          "First iteration with the normal loss active");
    train_cmd->add_option("--lr-position", to.lrs.position, "Initial position learning rate");
    train_cmd->add_option("--lr-position-final", to.lrs.position_final,
                          "Final position learning rate (exponential decay)");
    train_cmd->add_option("--lr-rotation", to.lrs.rotation, "Quaternion learning rate");
    train_cmd->add_option("--lr-scale", to.lrs.scale, "Log-scale learning rate");
    train_cmd->add_option("--lr-alpha", to.lrs.alpha, "Opacity learning rate");
    train_cmd->add_option("--lr-color", to.lrs.color, "Color learning rate");
    train_cmd->add_option("--lr-waves", to.lrs.wave, "Wave parameter learning rate");
    train_cmd->add_option("--tile-size", to.raster.tile_size, "Rasterizer tile size in pixels");
    train_cmd->add_option("--near-plane", to.raster.near_plane, "Near-plane depth cull");
    train_cmd->add_option("--alpha-min", to.raster.alpha_min, "Per-contribution alpha gate");
    train_cmd->add_option("--stop-threshold", to.raster.transmittance_stop,
                          "Early-stop transmittance");
    train_cmd->add_option("--sigma-screen", to.raster.sigma_screen,
                          "Screen-space low-pass sigma in pixels");

    RenderOpts ro;
    CLI::App* render_cmd = app.add_subcommand("render", "Render a checkpoint from a camera");
    render_cmd->add_option("--ckpt", ro.ckpt, "Checkpoint file")->required();
    render_cmd
        ->add_option("--camera", ro.camera,
                     "Camera spec: DATASET@INDEX or a transforms-style JSON file (frame 0)")
        ->required();
    render_cmd->add_option("--out", ro.out, "Output PNG path")->required();
    render_cmd->add_flag("--show-splats", ro.show_splats,
                         "Also write a flat random-color splat visualization");
    render_cmd->add_option("--seed", ro.seed, "Seed for --show-splats colors");
    render_cmd->add_option("--threads", ro.threads, "Worker threads (0 = hardware)");

    EvalOpts eo;
    CLI::App* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint on a dataset");
    eval_cmd->add_option("--ckpt", eo.ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eo.common.data, "Dataset directory or transforms.json")
        ->required();
    eval_cmd->add_option("--format", eo.common.format,
                         "Dataset format: colmap, transforms, or auto");
    eval_cmd->add_option("--split", eo.split, "Views to evaluate: test, train, or all");
    eval_cmd->add_option("--split-fraction", eo.split_fraction, "Held-out view fraction");
    eval_cmd->add_option("--threads", eo.common.threads, "Worker threads (0 = hardware)");

    SynthOpts so;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic textured-plane scene");
    synth_cmd->add_option("--preset", so.preset, "Texture: stripes, checker, or rings")
        ->required();
    synth_cmd->add_option("--views", so.views, "Number of hemisphere views (>= 2)");
    synth_cmd->add_option("--res", so.res, "Image resolution WxH");
    synth_cmd->add_option("--freq", so.freq, "Texture periods across the plane");
    synth_cmd->add_option("--out", so.out, "Output directory")->required();
    synth_cmd->add_option("--seed", so.seed, "RNG seed")->required();
    synth_cmd->add_option("--grid", so.grid, "Init-point grid side (grid^2 points)");

    GradcheckOpts go;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Finite-difference check of the full loss gradient");
    gradcheck_cmd->add_option("--seed", go.seed, "RNG seed for the random scene");
    gradcheck_cmd->add_option("--primitives", go.primitives, "Primitive count (1-32)");
    gradcheck_cmd->add_option("--res", go.res, "Image resolution WxH (max 64x64)");
    gradcheck_cmd->add_option("--n-waves", go.n_waves, "Waves per primitive (1-16)");
    gradcheck_cmd->add_option("--mode", go.mode,
                              "gabor, baselineA, baselineB, baselineC, or gaussian_only");
    gradcheck_cmd->add_option("--step", go.h, "Central-difference step");
    gradcheck_cmd->add_option("--rel-tol", go.rel_tol, "Relative error tolerance");
    gradcheck_cmd->add_option("--abs-tol", go.abs_tol, "Near-zero absolute tolerance");
    gradcheck_cmd
        ->add_option("--corrupt-group", go.corrupt_group,
                     "Fault-injection hook: corrupt one gradient in this group")
        ->group("");  // hidden

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*train_cmd) return cmd_train(to);
        if (*render_cmd) return cmd_render(ro);
        if (*eval_cmd) return cmd_eval(eo);
        if (*synth_cmd) return cmd_synth(so);
        if (*gradcheck_cmd) return cmd_gradcheck(go);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
