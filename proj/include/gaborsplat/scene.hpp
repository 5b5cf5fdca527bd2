#ifndef GABORSPLAT_SCENE_HPP
#define GABORSPLAT_SCENE_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/gabor.hpp"
#include "gaborsplat/geometry.hpp"

namespace gsp {

// Raw (unconstrained) parameter layout, per primitive, stride 16 + 3N:
//   [0..2]   position q
//   [3..6]   rotation quaternion, unnormalized (w, x, y, z)
//   [7..8]   log scales s_u, s_v
//   [9]      logit opacity
//   [10..12] logit c_A
//   [13..15] logit c_B
//   [16..16+N)      wave weights w_i (identity)
//   [16+N..16+2N)   wave frequencies f_i (identity)
//   [16+2N..16+3N)  wave phases phi_i (identity)
constexpr int kBaseStride = 16;

enum class ParamGroup { Position, Rotation, Scale, Alpha, Color, Wave };
constexpr int kNumParamGroups = 6;

inline ParamGroup param_group(int offset_in_prim, int n_waves) {
    if (offset_in_prim < 0 || offset_in_prim >= kBaseStride + 3 * n_waves)
        throw std::out_of_range("param_group: offset out of range");
    if (offset_in_prim < 3) return ParamGroup::Position;
    if (offset_in_prim < 7) return ParamGroup::Rotation;
    if (offset_in_prim < 9) return ParamGroup::Scale;
    if (offset_in_prim < 10) return ParamGroup::Alpha;
    if (offset_in_prim < 16) return ParamGroup::Color;
    return ParamGroup::Wave;
}

struct Scene {
    int n_waves = 4;
    RenderMode mode = RenderMode::Gabor;
    std::vector<Real> raw;

    int stride() const { return kBaseStride + 3 * n_waves; }
    int count() const { return static_cast<int>(raw.size()) / stride(); }

    Real* prim(int i) { return raw.data() + std::size_t(i) * stride(); }
    const Real* prim(int i) const { return raw.data() + std::size_t(i) * stride(); }

    void validate() const {
        if (n_waves < 1 || n_waves > kMaxWaves)
            throw std::invalid_argument("scene: n_waves must be in [1, 16]");
        if (raw.size() % stride() != 0)
            throw std::invalid_argument("scene: raw size is not a multiple of the stride");
    }

    void resize(int count) { raw.assign(std::size_t(count) * stride(), 0.0); }
};

inline GaborPrimitive activate(const Scene& s, int idx) {
    const Real* r = s.prim(idx);
    int n = s.n_waves;
    GaborPrimitive p;
    p.frame = make_frame({r[0], r[1], r[2]}, {r[3], r[4], r[5], r[6]},
                         std::exp(r[7]), std::exp(r[8]));
    p.alpha = sigmoid(r[9]);
    p.c_A = {sigmoid(r[10]), sigmoid(r[11]), sigmoid(r[12])};
    p.c_B = {sigmoid(r[13]), sigmoid(r[14]), sigmoid(r[15])};
    p.n_waves = n;
    for (int i = 0; i < n; ++i) {
        p.waves[i].w = r[kBaseStride + i];
        p.waves[i].f = r[kBaseStride + n + i];
        p.waves[i].phi = r[kBaseStride + 2 * n + i];
    }
    return p;
}

// Inverse of activate, for building scenes from constrained values.
// Quaternion is stored as given (activation normalizes), sigmoid inputs must
// lie strictly inside (0, 1).
inline void deactivate(const GaborPrimitive& p, Vec4 quat, int n_waves, Real* r) {
    r[0] = p.frame.q.x;
    r[1] = p.frame.q.y;
    r[2] = p.frame.q.z;
    r[3] = quat.w;
    r[4] = quat.x;
    r[5] = quat.y;
    r[6] = quat.z;
    r[7] = std::log(p.frame.s_u);
    r[8] = std::log(p.frame.s_v);
    r[9] = logit(p.alpha);
    r[10] = logit(p.c_A.x);
    r[11] = logit(p.c_A.y);
    r[12] = logit(p.c_A.z);
    r[13] = logit(p.c_B.x);
    r[14] = logit(p.c_B.y);
    r[15] = logit(p.c_B.z);
    for (int i = 0; i < n_waves; ++i) {
        r[kBaseStride + i] = p.waves[i].w;
        r[kBaseStride + n_waves + i] = p.waves[i].f;
        r[kBaseStride + 2 * n_waves + i] = p.waves[i].phi;
    }
}

// Gradients with respect to the activated parameters of one primitive.
// d_quat is already the raw-quaternion gradient (the normalization chain
// lives in d_frame_from_quaternion).
struct PrimGrads {
    Vec3 d_q;
    Vec4 d_quat;
    Real d_s_u = 0, d_s_v = 0;
    Real d_alpha = 0;
    Vec3 d_c_A, d_c_B;
    std::array<Real, kMaxWaves> d_w{};
    std::array<Real, kMaxWaves> d_f{};
    std::array<Real, kMaxWaves> d_phi{};
};

// Chain activated-space gradients into one primitive's raw-gradient slice.
// r points at the primitive's raw parameters, o at its gradient slice.
inline void accumulate_prim_raw(const Real* r, int n, const PrimGrads& g, Real* o) {
    o[0] += g.d_q.x;
    o[1] += g.d_q.y;
    o[2] += g.d_q.z;
    o[3] += g.d_quat.w;
    o[4] += g.d_quat.x;
    o[5] += g.d_quat.y;
    o[6] += g.d_quat.z;
    o[7] += g.d_s_u * std::exp(r[7]);
    o[8] += g.d_s_v * std::exp(r[8]);
    Real a = sigmoid(r[9]);
    o[9] += g.d_alpha * a * (1.0 - a);
    for (int c = 0; c < 3; ++c) {
        Real ca = sigmoid(r[10 + c]);
        Real cb = sigmoid(r[13 + c]);
        o[10 + c] += (&g.d_c_A.x)[c] * ca * (1.0 - ca);
        o[13 + c] += (&g.d_c_B.x)[c] * cb * (1.0 - cb);
    }
    for (int i = 0; i < n; ++i) {
        o[kBaseStride + i] += g.d_w[i];
        o[kBaseStride + n + i] += g.d_f[i];
        o[kBaseStride + 2 * n + i] += g.d_phi[i];
    }
}

inline void accumulate_raw_grads(const Scene& s, int idx, const PrimGrads& g, Real* raw_grad) {
    accumulate_prim_raw(s.prim(idx), s.n_waves, g, raw_grad + std::size_t(idx) * s.stride());
}

}  // namespace gsp

#endif
