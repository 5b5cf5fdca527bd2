#ifndef GABORSPLAT_TRAIN_HPP
#define GABORSPLAT_TRAIN_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/adam.hpp"
#include "gaborsplat/core.hpp"
#include "gaborsplat/dataset.hpp"
#include "gaborsplat/init.hpp"
#include "gaborsplat/losses.hpp"
#include "gaborsplat/rasterizer.hpp"
#include "gaborsplat/rng.hpp"
#include "gaborsplat/scene.hpp"

namespace gsp {

struct TrainConfig {
    int iterations = 30000;
    RenderMode mode = RenderMode::Gabor;
    int n_waves = 4;
    std::uint64_t seed = 0;
    LearningRates lrs;
    LossWeights loss;
    RasterConfig raster;
    int eval_every = 1000;      // held-out PSNR/SSIM cadence; 0 = final only
    int checkpoint_every = 0;   // checkpoint cadence; 0 = final only
    Real split_fraction = 0.125;
    bool split_random = false;
    bool densify = false;

    void validate() const {
        if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
        if (densify) throw std::invalid_argument("densification unsupported");
        if (n_waves < 1 || n_waves > kMaxWaves)
            throw std::invalid_argument("config: n_waves must be in [1, 16]");
        if (eval_every < 0 || checkpoint_every < 0)
            throw std::invalid_argument("config: cadences must be >= 0");
        loss.validate();
    }
};

// baselineA is the single-wave model; its parameter layout is N = 1.
inline TrainConfig normalized(TrainConfig cfg) {
    if (cfg.mode == RenderMode::BaselineA) cfg.n_waves = 1;
    return cfg;
}

struct DivergenceError : std::runtime_error {
    int iter;
    std::string view;
    DivergenceError(int it, std::string v, const std::string& what)
        : std::runtime_error("diverged at iteration " + std::to_string(it) + " on view '" + v +
                             "': " + what),
          iter(it),
          view(std::move(v)) {}
};

struct EvalSummary {
    Real psnr = std::numeric_limits<Real>::quiet_NaN();
    Real ssim = std::numeric_limits<Real>::quiet_NaN();
    int views = 0;
};

inline EvalSummary evaluate(const Scene& scene, const Dataset& data,
                            const std::vector<int>& view_indices, const RasterConfig& rc) {
    EvalSummary s;
    if (view_indices.empty()) return s;
    Real psnr_sum = 0, ssim_sum = 0;
    for (int vi : view_indices) {
        const View& v = data.views[vi];
        RenderOutput ro = render_forward(scene, data.cameras[v.camera], rc);
        Image c = quantized8(ro.color);
        psnr_sum += psnr(c, v.image);
        ssim_sum += ssim(c, v.image);
    }
    s.views = int(view_indices.size());
    s.psnr = psnr_sum / s.views;
    s.ssim = ssim_sum / s.views;
    return s;
}

struct TrainResult {
    Scene scene;
    ViewSplit split;
    EvalSummary final_eval;
};

using CheckpointSink = std::function<void(const Scene&, int iters_done, bool is_final)>;

// The full schedule: init from the SfM points, seed-shuffled round-robin
// over training views, forward/loss/backward/Adam per iteration, one
// key=value log line per iteration. Deterministic for a fixed config and
// seed, independent of raster.threads.
inline TrainResult train(const Dataset& data, const TrainConfig& cfg_in, std::ostream& log,
                         const CheckpointSink& checkpoint = {}) {
    TrainConfig cfg = normalized(cfg_in);
    cfg.validate();
    data.validate();
    if (data.points.empty())
        throw std::invalid_argument("train: dataset has no initialization points");

    std::vector<std::string> names;
    names.reserve(data.views.size());
    for (const View& v : data.views) names.push_back(v.name);
    ViewSplit split = split_train_test(names, cfg.split_fraction, cfg.seed, cfg.split_random);
    if (split.train.size() < 2)
        throw std::invalid_argument("train: need at least 2 training views");
    for (int vi : split.train)
        if (data.views[vi].image.size() == 0)
            throw std::invalid_argument("train: view '" + data.views[vi].name +
                                        "' has no image data");

    Rng rng(cfg.seed);
    Scene scene = init_from_points(data.points, cfg.n_waves, cfg.mode, rng);
    std::vector<int> order = split.train;
    rng.shuffle(order);

    Adam adam;
    adam.reset(scene.raw.size());

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        int vi = order[iter % order.size()];
        const View& view = data.views[vi];
        const Camera& cam = data.cameras[view.camera];

        RenderOutput ro = render_forward(scene, cam, cfg.raster);
        PixelGradients pg(cam.width, cam.height);
        LossBreakdown lb = training_loss(ro, view.image, cam, cfg.loss, iter, &pg);
        if (!std::isfinite(lb.total))
            throw DivergenceError(iter, view.name, "non-finite loss");

        GradientBuffer gb = render_backward(scene, cam, cfg.raster, pg);
        Real progress = cfg.iterations > 1 ? Real(iter) / Real(cfg.iterations - 1) : 0.0;
        std::vector<Real> lr = learning_rate_table(cfg.lrs, cfg.n_waves, progress);
        try {
            adam.step(scene.raw, gb.raw, lr);
        } catch (const std::runtime_error& e) {
            throw DivergenceError(iter, view.name, e.what());
        }

        log << "iter=" << iter << " total=" << fmt_real(lb.total) << " l1=" << fmt_real(lb.l1)
            << " dssim=" << fmt_real(lb.dssim) << " dist=" << fmt_real(lb.dist)
            << " normal=" << fmt_real(lb.normal);
        bool eval_now = cfg.eval_every > 0 && (iter + 1) % cfg.eval_every == 0 &&
                        !split.test.empty();
        if (eval_now) {
            EvalSummary es = evaluate(scene, data, split.test, cfg.raster);
            log << " psnr=" << fmt_real(es.psnr) << " ssim=" << fmt_real(es.ssim);
        }
        log << "\n";

        if (checkpoint && cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0 &&
            iter + 1 != cfg.iterations)
            checkpoint(scene, iter + 1, false);
    }

    if (checkpoint) checkpoint(scene, cfg.iterations, true);

    TrainResult result{std::move(scene), std::move(split), {}};
    if (!result.split.test.empty())
        result.final_eval = evaluate(result.scene, data, result.split.test, cfg.raster);
    return result;
}

}  // namespace gsp

#endif
