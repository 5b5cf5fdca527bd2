#ifndef GABORSPLAT_LOSSES_HPP
#define GABORSPLAT_LOSSES_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/geometry.hpp"
#include "gaborsplat/image.hpp"
#include "gaborsplat/rasterizer.hpp"

namespace gsp {

struct LossWeights {
    Real lambda_dssim = 0.2;
    Real w_dist = 1000.0;
    Real w_normal = 0.05;
    int normal_start_iter = 7000;

    void validate() const {
        if (lambda_dssim < 0 || lambda_dssim > 1)
            throw std::invalid_argument("LossWeights: lambda_dssim must be in [0, 1]");
        if (w_dist < 0 || w_normal < 0 || normal_start_iter < 0)
            throw std::invalid_argument("LossWeights: all weights must be non-negative");
    }
};

inline Real l1_loss(const Image& rendered, const Image& target) {
    require_same_shape(rendered, target, "l1_loss");
    Real sum = 0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i)
        sum += std::abs(rendered.data[i] - target.data[i]);
    return sum / Real(rendered.data.size());
}

// Adds scale * d(l1)/d(rendered); sign(0) = 0.
inline void add_l1_grad(const Image& rendered, const Image& target, Real scale, Image& d_rendered) {
    require_same_shape(rendered, target, "l1_loss");
    Real g = scale / Real(rendered.data.size());
    for (std::size_t i = 0; i < rendered.data.size(); ++i) {
        Real diff = rendered.data[i] - target.data[i];
        if (diff > 0)
            d_rendered.data[i] += g;
        else if (diff < 0)
            d_rendered.data[i] -= g;
    }
}

inline Real psnr(const Image& rendered, const Image& target) {
    require_same_shape(rendered, target, "psnr");
    Real mse = 0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i) {
        Real d = std::clamp(rendered.data[i], 0.0, 1.0) - std::clamp(target.data[i], 0.0, 1.0);
        mse += d * d;
    }
    mse /= Real(rendered.data.size());
    if (mse == 0) return std::numeric_limits<Real>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace ssim_detail {

constexpr int kWin = 11;
constexpr Real kC1 = 1e-4;  // (K1 * L)^2, K1 = 0.01, L = 1
constexpr Real kC2 = 9e-4;  // (K2 * L)^2, K2 = 0.03

inline const std::array<Real, kWin>& taps() {
    static const std::array<Real, kWin> t = [] {
        std::array<Real, kWin> a{};
        Real sum = 0;
        for (int i = 0; i < kWin; ++i) {
            Real d = Real(i) - (kWin - 1) / 2.0;
            a[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += a[i];
        }
        for (Real& v : a) v /= sum;
        return a;
    }();
    return t;
}

// Separable valid-mode correlation with the Gaussian window; the output
// grid is (W-10) x (H-10).
inline void corr_valid(const std::vector<Real>& plane, int w, int h, std::vector<Real>& tmp,
                       std::vector<Real>& out) {
    const auto& g = taps();
    int vw = w - kWin + 1, vh = h - kWin + 1;
    tmp.assign(std::size_t(vw) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            Real s = 0;
            for (int k = 0; k < kWin; ++k) s += g[k] * plane[std::size_t(y) * w + x + k];
            tmp[std::size_t(y) * vw + x] = s;
        }
    out.assign(std::size_t(vw) * vh, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            Real s = 0;
            for (int k = 0; k < kWin; ++k) s += g[k] * tmp[std::size_t(y + k) * vw + x];
            out[std::size_t(y) * vw + x] = s;
        }
}

// Adjoint of corr_valid: scatter a valid-grid field back onto the image
// plane (accumulates into out_plane).
inline void corr_adjoint(const std::vector<Real>& field, int w, int h, std::vector<Real>& tmp,
                         std::vector<Real>& out_plane) {
    const auto& g = taps();
    int vw = w - kWin + 1, vh = h - kWin + 1;
    tmp.assign(std::size_t(vw) * h, 0.0);
    for (int y = 0; y < h; ++y) {
        int k0 = std::max(0, y - (vh - 1)), k1 = std::min(kWin - 1, y);
        for (int x = 0; x < vw; ++x) {
            Real s = 0;
            for (int k = k0; k <= k1; ++k) s += g[k] * field[std::size_t(y - k) * vw + x];
            tmp[std::size_t(y) * vw + x] = s;
        }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int k0 = std::max(0, x - (vw - 1)), k1 = std::min(kWin - 1, x);
            Real s = 0;
            for (int k = k0; k <= k1; ++k) s += g[k] * tmp[std::size_t(y) * vw + x - k];
            out_plane[std::size_t(y) * w + x] += s;
        }
}

// Mean SSIM over channels and valid windows. When d_a is given, adds
// grad_scale * d(mean SSIM)/d(a). Per window the derivative is
// w_{i-p} (alpha_p + beta_p a_i + gamma_p b_i), so the backward pass is
// three adjoint correlations of coefficient fields.
inline Real ssim_core(const Image& a, const Image& b, Real grad_scale, Image* d_a) {
    require_same_shape(a, b, "ssim");
    if (a.width < kWin || a.height < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    int w = a.width, h = a.height, nc = a.channels;
    int vw = w - kWin + 1, vh = h - kWin + 1;
    std::size_t vn = std::size_t(vw) * vh, pn = std::size_t(w) * h;

    std::vector<Real> px(pn), py(pn), prod(pn), tmp;
    std::vector<Real> mu_x, mu_y, xx, yy, xy;
    std::vector<Real> alpha, beta, gamma, acc_a, acc_b, acc_g;
    Real total = 0;
    for (int c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < pn; ++i) {
            px[i] = a.data[i * nc + c];
            py[i] = b.data[i * nc + c];
        }
        corr_valid(px, w, h, tmp, mu_x);
        corr_valid(py, w, h, tmp, mu_y);
        for (std::size_t i = 0; i < pn; ++i) prod[i] = px[i] * px[i];
        corr_valid(prod, w, h, tmp, xx);
        for (std::size_t i = 0; i < pn; ++i) prod[i] = py[i] * py[i];
        corr_valid(prod, w, h, tmp, yy);
        for (std::size_t i = 0; i < pn; ++i) prod[i] = px[i] * py[i];
        corr_valid(prod, w, h, tmp, xy);

        if (d_a) {
            alpha.assign(vn, 0.0);
            beta.assign(vn, 0.0);
            gamma.assign(vn, 0.0);
        }
        for (std::size_t i = 0; i < vn; ++i) {
            Real sxx = xx[i] - mu_x[i] * mu_x[i];
            Real syy = yy[i] - mu_y[i] * mu_y[i];
            Real sxy = xy[i] - mu_x[i] * mu_y[i];
            Real a1 = 2.0 * mu_x[i] * mu_y[i] + kC1;
            Real a2 = 2.0 * sxy + kC2;
            Real b1 = mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1;
            Real b2 = sxx + syy + kC2;
            Real s = (a1 * a2) / (b1 * b2);
            total += s;
            if (d_a) {
                beta[i] = -2.0 * s / b2;
                gamma[i] = 2.0 * a1 / (b1 * b2);
                alpha[i] = 2.0 * (mu_y[i] * (a2 - a1) / (b1 * b2) +
                                  s * mu_x[i] * (1.0 / b2 - 1.0 / b1));
            }
        }
        if (d_a) {
            Real f = grad_scale / (Real(vn) * nc);
            for (std::size_t i = 0; i < vn; ++i) {
                alpha[i] *= f;
                beta[i] *= f;
                gamma[i] *= f;
            }
            acc_a.assign(pn, 0.0);
            acc_b.assign(pn, 0.0);
            acc_g.assign(pn, 0.0);
            corr_adjoint(alpha, w, h, tmp, acc_a);
            corr_adjoint(beta, w, h, tmp, acc_b);
            corr_adjoint(gamma, w, h, tmp, acc_g);
            for (std::size_t i = 0; i < pn; ++i)
                d_a->data[i * nc + c] += acc_a[i] + px[i] * acc_b[i] + py[i] * acc_g[i];
        }
    }
    return total / (Real(vn) * nc);
}

}  // namespace ssim_detail

inline Real ssim(const Image& a, const Image& b) {
    return ssim_detail::ssim_core(a, b, 0.0, nullptr);
}

inline Real dssim_loss(const Image& rendered, const Image& target) {
    return 0.5 * (1.0 - ssim(rendered, target));
}

// Returns the D-SSIM value and adds scale * d(dssim)/d(rendered).
inline Real dssim_with_grad(const Image& rendered, const Image& target, Real scale,
                            Image& d_rendered) {
    Real s = ssim_detail::ssim_core(rendered, target, -0.5 * scale, &d_rendered);
    return 0.5 * (1.0 - s);
}

// Mean over all pixels of the per-pixel pairwise depth spread produced by
// the renderer.
inline Real distortion_loss(const Image& per_pixel_distortion) {
    Real sum = 0;
    for (Real v : per_pixel_distortion.data) sum += v;
    return sum / Real(per_pixel_distortion.data.size());
}

// Mean over pixels of sum_k w_k (1 - n_k . N_depth), folded with the blend
// identity to accum_alpha - normal_map . N_depth. N_depth comes from
// central differences of backprojected points o + depth * dir; pixels
// without both neighbors or with a degenerate cross product are skipped.
// When pg is given, adds grad_scale * d(loss)/d{accum, normal_map, depth}.
inline Real normal_consistency_loss(const Image& normal_map, const Image& expected_depth,
                                    const Image& accum_alpha, const Camera& cam,
                                    Real grad_scale = 0.0, PixelGradients* pg = nullptr) {
    int w = cam.width, h = cam.height;
    if (normal_map.width != w || normal_map.height != h || expected_depth.width != w ||
        expected_depth.height != h || accum_alpha.width != w || accum_alpha.height != h)
        throw std::invalid_argument("normal_consistency_loss: buffer dimensions do not match");

    std::vector<Vec3> dirs(std::size_t(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            dirs[std::size_t(y) * w + x] = pixel_ray(cam, {Real(x), Real(y)}).direction;
    auto dir = [&](int x, int y) { return dirs[std::size_t(y) * w + x]; };

    Real inv_n = 1.0 / (Real(w) * h);
    Real total = 0;
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            Vec3 da = expected_depth.at(x + 1, y) * dir(x + 1, y) -
                      expected_depth.at(x - 1, y) * dir(x - 1, y);
            Vec3 db = expected_depth.at(x, y + 1) * dir(x, y + 1) -
                      expected_depth.at(x, y - 1) * dir(x, y - 1);
            Vec3 cv = cross(da, db);
            Real cn = norm(cv);
            if (!(cn > 1e-12)) continue;
            Vec3 n0 = cv / cn;
            Real flip = dot(n0, dir(x, y)) > 0 ? -1.0 : 1.0;
            Vec3 nd = flip * n0;
            total += accum_alpha.at(x, y) - dot(normal_map.rgb(x, y), nd);
            if (pg) {
                Real f = grad_scale * inv_n;
                pg->d_accum.at(x, y) += f;
                pg->d_normal.add_rgb(x, y, -f * nd);
                Vec3 d_nd = -f * normal_map.rgb(x, y);
                Vec3 d_n0 = flip * d_nd;
                Vec3 d_cv = (d_n0 - dot(n0, d_n0) * n0) / cn;
                Vec3 d_da = cross(db, d_cv);
                Vec3 d_db = cross(d_cv, da);
                pg->d_depth.at(x + 1, y) += dot(dir(x + 1, y), d_da);
                pg->d_depth.at(x - 1, y) -= dot(dir(x - 1, y), d_da);
                pg->d_depth.at(x, y + 1) += dot(dir(x, y + 1), d_db);
                pg->d_depth.at(x, y - 1) -= dot(dir(x, y - 1), d_db);
            }
        }
    return total * inv_n;
}

struct LossBreakdown {
    Real total = 0, l1 = 0, dssim = 0, dist = 0, normal = 0;
    bool normal_active = false;
};

// total = (1-lambda) l1 + lambda dssim + w_dist dist + [iter >= gate] w_normal normal.
// The normal term does not exist before the gate: its logged value is zero
// there, which is what makes the gate visible in the loss curve.
// When pg is given (zero-initialized, camera-sized), accumulates
// d(total)/d(per-pixel outputs).
inline LossBreakdown training_loss(const RenderOutput& ro, const Image& target, const Camera& cam,
                                   const LossWeights& lw, int iter, PixelGradients* pg = nullptr) {
    lw.validate();
    LossBreakdown out;
    out.l1 = l1_loss(ro.color, target);
    if (pg) {
        add_l1_grad(ro.color, target, 1.0 - lw.lambda_dssim, pg->d_color);
        out.dssim = dssim_with_grad(ro.color, target, lw.lambda_dssim, pg->d_color);
    } else {
        out.dssim = dssim_loss(ro.color, target);
    }
    out.dist = distortion_loss(ro.distortion);
    if (pg) {
        Real g = lw.w_dist / Real(ro.distortion.data.size());
        for (Real& v : pg->d_distortion.data) v += g;
    }
    out.normal_active = iter >= lw.normal_start_iter && lw.w_normal > 0;
    if (out.normal_active)
        out.normal = normal_consistency_loss(ro.normal_map, ro.expected_depth, ro.accum_alpha, cam,
                                             lw.w_normal, pg);
    out.total = (1.0 - lw.lambda_dssim) * out.l1 + lw.lambda_dssim * out.dssim +
                lw.w_dist * out.dist + (out.normal_active ? lw.w_normal * out.normal : 0.0);
    return out;
}

}  // namespace gsp

#endif
