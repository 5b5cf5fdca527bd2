#ifndef GABORSPLAT_GABOR_HPP
#define GABORSPLAT_GABOR_HPP

#include <array>
#include <stdexcept>

#include "gaborsplat/core.hpp"
#include "gaborsplat/geometry.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

// Ablation modes. BaselineA is a single wave (the trainer builds such
// scenes with n_waves = 1), BaselineB fixes every wave direction along the
// local u-axis, BaselineC freezes the phase shifts at zero, GaussianOnly
// drops the waves entirely and paints the splat with c_A.
enum class RenderMode { Gabor, BaselineA, BaselineB, BaselineC, GaussianOnly };

inline const char* to_string(RenderMode m) {
    switch (m) {
        case RenderMode::Gabor: return "gabor";
        case RenderMode::BaselineA: return "baselineA";
        case RenderMode::BaselineB: return "baselineB";
        case RenderMode::BaselineC: return "baselineC";
        case RenderMode::GaussianOnly: return "gaussian_only";
    }
    return "?";
}

inline RenderMode mode_from_string(const std::string& s) {
    if (s == "gabor") return RenderMode::Gabor;
    if (s == "baselineA") return RenderMode::BaselineA;
    if (s == "baselineB") return RenderMode::BaselineB;
    if (s == "baselineC") return RenderMode::BaselineC;
    if (s == "gaussian_only") return RenderMode::GaussianOnly;
    throw std::invalid_argument("unknown render mode: " + s);
}

struct WaveParam {
    Real w = 0;    // mixing weight
    Real f = 0;    // cycles per unit of local coordinate
    Real phi = 0;  // phase shift, radians
};

struct GaborPrimitive {
    SplatFrame frame;
    Real alpha = 0.5;
    Vec3 c_A, c_B;
    int n_waves = 0;
    std::array<WaveParam, kMaxWaves> waves{};
};

inline Real eval_gaussian(Real u, Real v) { return std::exp(-(u * u + v * v) / 2.0); }

// Low-pass filtered falloff: the larger of the object-space Gaussian and a
// screen-space Gaussian around the projected center. Ties take the
// object-space branch.
inline Real eval_alpha_hat(Real u, Real v, Vec2 d_px, Real sigma_screen, bool* object_branch = nullptr) {
    Real g_obj = eval_gaussian(u, v);
    Real g_scr = std::exp(-norm_sq(d_px) / (2.0 * sigma_screen * sigma_screen));
    bool obj = g_obj >= g_scr;
    if (object_branch) *object_branch = obj;
    return obj ? g_obj : g_scr;
}

// i-th wave orientation: angle i*pi/N on the unit circle.
inline Vec2 wave_direction(int i, int n) {
    if (i < 0 || i >= n) throw std::out_of_range("wave_direction: index out of range");
    Real ang = Real(i) * kPi / Real(n);
    return {std::cos(ang), std::sin(ang)};
}

inline Vec2 wave_direction(int i, int n, RenderMode mode) {
    if (mode == RenderMode::BaselineB) {
        if (i < 0 || i >= n) throw std::out_of_range("wave_direction: index out of range");
        return {1.0, 0.0};
    }
    return wave_direction(i, n);
}

inline Real eval_phase(int i, Real u, Real v, const WaveParam& wave, int n,
                       RenderMode mode = RenderMode::Gabor) {
    Vec2 g = wave_direction(i, n, mode);
    Real phi = (mode == RenderMode::BaselineC) ? 0.0 : wave.phi;
    return 2.0 * kPi * wave.f * (g.x * u + g.y * v) + phi;
}

// Number of waves the mode actually evaluates.
inline int active_waves(const GaborPrimitive& p, RenderMode mode) {
    if (mode == RenderMode::GaussianOnly) return 0;
    if (mode == RenderMode::BaselineA) return p.n_waves > 0 ? 1 : 0;
    return p.n_waves;
}

// Spatial color: a weighted sum of waves, each interpolating c_A and c_B
// by (1 +- cos theta)/2. Unclamped; the pixel is clamped only at write-out.
inline Vec3 eval_color(Real u, Real v, const GaborPrimitive& p, RenderMode mode = RenderMode::Gabor) {
    if (mode == RenderMode::GaussianOnly) return p.c_A;
    Vec3 c{0, 0, 0};
    int n_active = active_waves(p, mode);
    for (int i = 0; i < n_active; ++i) {
        Real theta = eval_phase(i, u, v, p.waves[i], p.n_waves, mode);
        Real ct = std::cos(theta);
        Real ka = (1.0 + ct) / 2.0;
        Real kb = (1.0 - ct) / 2.0;
        c += p.waves[i].w * (ka * p.c_A + kb * p.c_B);
    }
    return c;
}

// Color plus every partial the optimizer needs. d_c_A / d_c_B are the
// per-channel scale factors (the Jacobian is that scalar times identity).
// Partials of parameters a mode holds fixed are reported as zero.
struct ColorDerivs {
    Vec3 color;
    Real d_c_A = 0;
    Real d_c_B = 0;
    std::array<Vec3, kMaxWaves> d_w{};
    std::array<Vec3, kMaxWaves> d_f{};
    std::array<Vec3, kMaxWaves> d_phi{};
    Vec3 d_u, d_v;
};

inline ColorDerivs eval_color_and_grads(Real u, Real v, const GaborPrimitive& p,
                                        RenderMode mode = RenderMode::Gabor) {
    ColorDerivs out;
    if (mode == RenderMode::GaussianOnly) {
        out.color = p.c_A;
        out.d_c_A = 1.0;
        return out;
    }
    Vec3 half_diff = 0.5 * (p.c_A - p.c_B);
    int n_active = active_waves(p, mode);
    for (int i = 0; i < n_active; ++i) {
        const WaveParam& wv = p.waves[i];
        Vec2 g = wave_direction(i, p.n_waves, mode);
        Real proj = g.x * u + g.y * v;
        Real theta = 2.0 * kPi * wv.f * proj + ((mode == RenderMode::BaselineC) ? 0.0 : wv.phi);
        Real ct = std::cos(theta);
        Real st = std::sin(theta);
        Real ka = (1.0 + ct) / 2.0;
        Real kb = (1.0 - ct) / 2.0;
        out.color += wv.w * (ka * p.c_A + kb * p.c_B);
        out.d_c_A += wv.w * ka;
        out.d_c_B += wv.w * kb;
        out.d_w[i] = ka * p.c_A + kb * p.c_B;
        Vec3 d_theta = (-st * wv.w) * half_diff;  // d color / d theta_i
        out.d_phi[i] = (mode == RenderMode::BaselineC) ? Vec3{} : d_theta;
        out.d_f[i] = (2.0 * kPi * proj) * d_theta;
        Real two_pi_f = 2.0 * kPi * wv.f;
        out.d_u += (two_pi_f * g.x) * d_theta;
        out.d_v += (two_pi_f * g.y) * d_theta;
    }
    return out;
}

}  // namespace gsp

#endif
