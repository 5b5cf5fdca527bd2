#ifndef GABORSPLAT_GRADCHECK_HPP
#define GABORSPLAT_GRADCHECK_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/geometry.hpp"
#include "gaborsplat/losses.hpp"
#include "gaborsplat/rasterizer.hpp"
#include "gaborsplat/rng.hpp"
#include "gaborsplat/scene.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

struct GradcheckConfig {
    std::uint64_t seed = 0;
    int primitives = 8;
    int width = 24, height = 24;
    int n_waves = 4;
    RenderMode mode = RenderMode::Gabor;
    Real h = 1e-5;
    Real rel_tol = 1e-4;
    Real abs_tol = 1e-7;
    std::string corrupt_group;  // fault-injection hook; empty = off

    void validate() const {
        if (primitives < 1 || primitives > 32)
            throw std::invalid_argument("gradcheck: primitives must be in [1, 32]");
        if (width < 12 || height < 12 || width > 64 || height > 64)
            throw std::invalid_argument("gradcheck: resolution must be within [12, 64]");
        if (!(h > 0)) throw std::invalid_argument("gradcheck: step must be positive");
        if (n_waves < 1 || n_waves > kMaxWaves)
            throw std::invalid_argument("gradcheck: n_waves must be in [1, 16]");
    }
};

inline const char* param_group_name(ParamGroup g) {
    switch (g) {
        case ParamGroup::Position: return "position";
        case ParamGroup::Rotation: return "rotation";
        case ParamGroup::Scale: return "scale";
        case ParamGroup::Alpha: return "alpha";
        case ParamGroup::Color: return "color";
        case ParamGroup::Wave: return "wave";
    }
    return "?";
}

inline ParamGroup param_group_from_string(const std::string& s) {
    for (int g = 0; g < kNumParamGroups; ++g)
        if (s == param_group_name(ParamGroup(g))) return ParamGroup(g);
    throw std::invalid_argument("unknown parameter group '" + s + "'");
}

struct GradcheckScene {
    Scene scene;
    Camera camera;
    Image target;
};

namespace gradcheck_detail {

// Quaternion rotating +z onto unit vector d, then a small twist. Keeps
// every splat normal within ~12 degrees of facing the camera.
inline Vec4 facing_quaternion(Vec3 d, Rng& rng) {
    Vec3 z{0, 0, 1};
    Vec3 axis = cross(z, d);
    Real c = dot(z, d), s = norm(axis);
    Vec4 q_face{1, 0, 0, 0};
    if (s > 1e-12) {
        Real angle = std::atan2(s, c);
        Vec3 a = (1.0 / s) * axis;
        Real half = 0.5 * angle;
        q_face = {std::cos(half), std::sin(half) * a.x, std::sin(half) * a.y,
                  std::sin(half) * a.z};
    } else if (c < 0) {
        q_face = {0, 1, 0, 0};
    }
    Real twist = rng.uniform(0.0, 0.2);
    Real az = rng.uniform(0.0, 2.0 * kPi);
    Vec3 a{std::cos(az), std::sin(az), 0};
    Vec4 q_small{std::cos(0.5 * twist), std::sin(0.5 * twist) * a.x,
                 std::sin(0.5 * twist) * a.y, std::sin(0.5 * twist) * a.z};
    // Hamilton product q_face * q_small.
    Vec4 q{
        q_face.w * q_small.w - q_face.x * q_small.x - q_face.y * q_small.y -
            q_face.z * q_small.z,
        q_face.w * q_small.x + q_face.x * q_small.w + q_face.y * q_small.z -
            q_face.z * q_small.y,
        q_face.w * q_small.y - q_face.x * q_small.z + q_face.y * q_small.w +
            q_face.z * q_small.x,
        q_face.w * q_small.z + q_face.x * q_small.y - q_face.y * q_small.x +
            q_face.z * q_small.w,
    };
    return q;
}

}  // namespace gradcheck_detail

// A scene built so the full loss is smooth within +-h of every parameter:
// splats are face-on and wide enough on screen that the object branch of
// the low-pass filter wins everywhere, every covered pixel stays above the
// alpha gate, per-pixel depths keep disjoint ranges (no blending-order or
// distortion-sort flips), opacities keep the transmittance above the early
// stop, and the target sits strictly above the render so the L1 sign
// field is constant.
inline GradcheckScene make_gradcheck_scene(const GradcheckConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    Real focal = Real(std::max(cfg.width, cfg.height));
    Camera cam(cfg.width, cfg.height, focal, focal, 0.5 * cfg.width, 0.5 * cfg.height,
               Mat3::identity(), {0, 0, 0});

    Scene scene;
    scene.n_waves = cfg.n_waves;
    scene.mode = cfg.mode;
    scene.resize(cfg.primitives);

    Real alpha_max = 1.0 - std::pow(3e-4, 1.0 / Real(cfg.primitives));
    for (int i = 0; i < cfg.primitives; ++i) {
        Real z = 1.6 + 0.45 * Real(i) + rng.uniform(0.0, 0.05);
        Real px = 0.5 * cfg.width + rng.uniform(-4.0, 4.0);
        Real py = 0.5 * cfg.height + rng.uniform(-4.0, 4.0);
        Vec3 q_pos{(px - cam.cx) / focal * z, (py - cam.cy) / focal * z, z};

        GaborPrimitive p;
        p.frame.q = q_pos;
        p.frame.s_u = rng.uniform(8.0, 12.0) * z / focal;
        p.frame.s_v = rng.uniform(8.0, 12.0) * z / focal;
        p.alpha = rng.uniform(0.5 * alpha_max, alpha_max);
        p.c_A = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
        p.c_B = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
        p.n_waves = cfg.n_waves;
        for (int wv = 0; wv < cfg.n_waves; ++wv) {
            p.waves[wv].w = rng.uniform(0.1, 0.6);
            p.waves[wv].f = rng.uniform(0.2, 1.5);
            p.waves[wv].phi = rng.uniform(0.0, 2.0 * kPi);
        }
        Vec4 quat = gradcheck_detail::facing_quaternion(normalized(-1.0 * q_pos), rng);
        deactivate(p, quat, cfg.n_waves, scene.prim(i));
    }

    RasterConfig rc;
    rc.threads = 1;
    Image base = render_forward(scene, cam, rc).color;
    Image target(cfg.width, cfg.height, 3);
    for (size_t i = 0; i < target.data.size(); ++i)
        target.data[i] = base.data[i] + 0.5 + rng.uniform(0.0, 0.3);

    return {std::move(scene), cam, std::move(target)};
}

struct GroupReport {
    std::string group;
    Real max_rel = 0;
    int worst_offset = -1;
    int worst_prim = -1;
    Real analytic = 0, fd = 0;
    bool pass = true;
};

struct GradcheckReport {
    std::vector<GroupReport> groups;
    bool pass = true;
};

// Full-loss central finite differences over every raw parameter,
// compared against the analytic backward pass, reported per group.
inline GradcheckReport run_gradcheck(const GradcheckConfig& cfg) {
    GradcheckScene gs = make_gradcheck_scene(cfg);
    RasterConfig rc;
    rc.threads = 1;
    LossWeights lw;
    const int iter = lw.normal_start_iter;  // normal term active

    auto loss_at = [&](const Scene& s) {
        RenderOutput ro = render_forward(s, gs.camera, rc);
        return training_loss(ro, gs.target, gs.camera, lw, iter, nullptr).total;
    };

    RenderOutput ro = render_forward(gs.scene, gs.camera, rc);
    PixelGradients pg(gs.camera.width, gs.camera.height);
    training_loss(ro, gs.target, gs.camera, lw, iter, &pg);
    GradientBuffer gb = render_backward(gs.scene, gs.camera, rc, pg);

    if (!cfg.corrupt_group.empty()) {
        ParamGroup g = param_group_from_string(cfg.corrupt_group);
        for (int off = 0; off < gs.scene.stride(); ++off)
            if (param_group(off, gs.scene.n_waves) == g) {
                gb.raw[off] += 1.0;
                break;
            }
    }

    GradcheckReport report;
    report.groups.resize(kNumParamGroups);
    for (int g = 0; g < kNumParamGroups; ++g) report.groups[g].group = param_group_name(ParamGroup(g));

    Scene probe = gs.scene;
    int stride = probe.stride();
    for (int i = 0; i < int(probe.raw.size()); ++i) {
        Real saved = probe.raw[i];
        probe.raw[i] = saved + cfg.h;
        Real f_plus = loss_at(probe);
        probe.raw[i] = saved - cfg.h;
        Real f_minus = loss_at(probe);
        probe.raw[i] = saved;

        Real fd = (f_plus - f_minus) / (2.0 * cfg.h);
        Real an = gb.raw[i];
        Real err = std::abs(an - fd);
        if (err <= cfg.abs_tol) continue;  // near zero the absolute tolerance rules
        Real rel = err / std::max(std::abs(an), std::abs(fd));

        GroupReport& gr = report.groups[int(param_group(i % stride, probe.n_waves))];
        if (rel > gr.max_rel) {
            gr.max_rel = rel;
            gr.worst_offset = i % stride;
            gr.worst_prim = i / stride;
            gr.analytic = an;
            gr.fd = fd;
        }
    }

    for (GroupReport& gr : report.groups) {
        gr.pass = gr.max_rel <= cfg.rel_tol;
        if (!gr.pass) report.pass = false;
    }
    return report;
}

}  // namespace gsp

#endif
