#ifndef GABORSPLAT_RASTERIZER_HPP
#define GABORSPLAT_RASTERIZER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/gabor.hpp"
#include "gaborsplat/geometry.hpp"
#include "gaborsplat/image.hpp"
#include "gaborsplat/parallel.hpp"
#include "gaborsplat/scene.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

struct RenderOutput {
    Image color;           // H x W x 3, linear, unclamped
    Image accum_alpha;     // H x W, sum of per-splat blend weights
    Image expected_depth;  // H x W, blend-weighted ray distance
    Image normal_map;      // H x W x 3, blend-weighted camera-facing normals
    Image distortion;      // H x W, pairwise depth spread of the contributors
    std::vector<int> n_contrib;

    RenderOutput(int w, int h)
        : color(w, h, 3),
          accum_alpha(w, h, 1),
          expected_depth(w, h, 1),
          normal_map(w, h, 3),
          distortion(w, h, 1),
          n_contrib(std::size_t(w) * h, 0) {}
};

struct PreparedPrim {
    GaborPrimitive prim;
    Vec2 center_px;  // projected center
    Real z;          // camera-space depth of the center
    int scene_index;
    int tx0 = 0, tx1 = -1, ty0 = 0, ty1 = -1;  // inclusive tile range; tx1 < tx0 = none
};

// Culled, depth-sorted primitives plus per-tile candidate lists. Tile lists
// hold indices into prims and inherit its front-to-back order.
struct Prepared {
    int tiles_x = 0, tiles_y = 0;
    std::vector<PreparedPrim> prims;
    std::vector<std::vector<int>> tile_lists;
};

inline Prepared prepare(const Scene& scene, const Camera& cam, const RasterConfig& cfg) {
    scene.validate();
    Prepared out;
    out.tiles_x = (cam.width + cfg.tile_size - 1) / cfg.tile_size;
    out.tiles_y = (cam.height + cfg.tile_size - 1) / cfg.tile_size;

    Real r = support_radius();
    // Reach of the screen-space filter branch past the projected footprint,
    // plus pixel-center slack.
    Real pad = cfg.sigma_screen * r + 0.5;

    out.prims.reserve(scene.count());
    for (int i = 0; i < scene.count(); ++i) {
        GaborPrimitive p = activate(scene, i);
        Real z = cam.to_camera(p.frame.q).z;
        if (!std::isfinite(z) || z <= cfg.near_plane) continue;

        PreparedPrim pp;
        pp.center_px = project(cam, p.frame.q).px;
        if (!std::isfinite(pp.center_px.x) || !std::isfinite(pp.center_px.y) ||
            !std::isfinite(p.frame.s_u) || !std::isfinite(p.frame.s_v) ||
            !std::isfinite(p.frame.t_u.x + p.frame.t_u.y + p.frame.t_u.z +
                           p.frame.t_v.x + p.frame.t_v.y + p.frame.t_v.z))
            continue;
        pp.z = z;
        pp.scene_index = i;

        // Screen bbox of the splat: the projection of the local square
        // [-r, r]^2 is the convex hull of its projected corners as long as
        // every corner is in front of the camera; otherwise fall back to
        // the full screen.
        Vec3 du = (r * p.frame.s_u) * p.frame.t_u;
        Vec3 dv = (r * p.frame.s_v) * p.frame.t_v;
        Real x0 = 0, x1 = Real(cam.width), y0 = 0, y1 = Real(cam.height);
        bool full = false;
        Real bx0 = 0, bx1 = 0, by0 = 0, by1 = 0;
        for (int c = 0; c < 4; ++c) {
            Vec3 corner = p.frame.q + ((c & 1) ? du : -du) + ((c & 2) ? dv : -dv);
            Vec3 cc = cam.to_camera(corner);
            if (cc.z < 1e-9) {
                full = true;
                break;
            }
            Real px = cam.fx * cc.x / cc.z + cam.cx;
            Real py = cam.fy * cc.y / cc.z + cam.cy;
            if (c == 0) {
                bx0 = bx1 = px;
                by0 = by1 = py;
            } else {
                bx0 = std::min(bx0, px);
                bx1 = std::max(bx1, px);
                by0 = std::min(by0, py);
                by1 = std::max(by1, py);
            }
        }
        if (!full) {
            x0 = bx0 - pad;
            x1 = bx1 + pad;
            y0 = by0 - pad;
            y1 = by1 + pad;
        }

        int ix0 = std::max(0, int(std::floor(x0 - 0.5)));
        int ix1 = std::min(cam.width - 1, int(std::ceil(x1)));
        int iy0 = std::max(0, int(std::floor(y0 - 0.5)));
        int iy1 = std::min(cam.height - 1, int(std::ceil(y1)));
        if (ix0 <= ix1 && iy0 <= iy1) {
            pp.tx0 = ix0 / cfg.tile_size;
            pp.tx1 = ix1 / cfg.tile_size;
            pp.ty0 = iy0 / cfg.tile_size;
            pp.ty1 = iy1 / cfg.tile_size;
        }
        pp.prim = p;
        out.prims.push_back(pp);
    }

    std::sort(out.prims.begin(), out.prims.end(), [](const PreparedPrim& a, const PreparedPrim& b) {
        if (a.z != b.z) return a.z < b.z;
        return a.scene_index < b.scene_index;
    });

    out.tile_lists.assign(std::size_t(out.tiles_x) * out.tiles_y, {});
    for (int s = 0; s < int(out.prims.size()); ++s) {
        const PreparedPrim& pp = out.prims[s];
        for (int ty = pp.ty0; ty <= pp.ty1; ++ty)
            for (int tx = pp.tx0; tx <= pp.tx1; ++tx)
                out.tile_lists[std::size_t(ty) * out.tiles_x + tx].push_back(s);
    }
    return out;
}

// Front-to-back compositing core shared by the tiled renderer, the
// reference renderer, and the backward replay. Calls
//   visit(prep_index, hit, a, ghat, object_branch, delta_px, T_before)
// for every contribution that passes the gates, in candidate order.
// Returns {final transmittance, contributor count}.
template <class Visitor>
inline std::pair<Real, int> composite_pixel(const RasterConfig& cfg, const Prepared& prep,
                                            const int* cand, int n_cand, const Ray& ray,
                                            Vec2 pixel_center, Visitor&& visit) {
    Real T = 1.0;
    int count = 0;
    for (int ci = 0; ci < n_cand; ++ci) {
        const PreparedPrim& pp = prep.prims[cand[ci]];
        auto hit = ray_splat_intersect(ray, pp.prim.frame);
        if (!hit) continue;
        Vec2 delta = pp.center_px - pixel_center;
        bool object = true;
        Real ghat = eval_alpha_hat(hit->u, hit->v, delta, cfg.sigma_screen, &object);
        Real a = pp.prim.alpha * ghat;
        if (a < cfg.alpha_min) continue;
        Real t_next = T * (1.0 - a);
        if (t_next < cfg.transmittance_stop) break;
        visit(cand[ci], *hit, a, ghat, object, delta, T);
        T = t_next;
        ++count;
    }
    return {T, count};
}

// Exact pairwise depth spread 2 sum_{i<j} w_i w_j |z_i - z_j| for one
// pixel's contributors, via prefix sums over a (z, index)-sorted order.
// If d_w / d_z are given they are overwritten with the partials, indexed
// in the original (blend) order.
struct DistortionScratch {
    std::vector<int> order;
};

inline Real pixel_distortion(const std::vector<Real>& w, const std::vector<Real>& z,
                             DistortionScratch& s, std::vector<Real>* d_w = nullptr,
                             std::vector<Real>* d_z = nullptr) {
    int k = int(w.size());
    if (d_w) d_w->assign(k, 0.0);
    if (d_z) d_z->assign(k, 0.0);
    if (k < 2) return 0.0;
    s.order.resize(k);
    std::iota(s.order.begin(), s.order.end(), 0);
    std::sort(s.order.begin(), s.order.end(), [&](int a, int b) {
        if (z[a] != z[b]) return z[a] < z[b];
        return a < b;
    });
    Real w_tot = 0, s_tot = 0;
    for (int i = 0; i < k; ++i) {
        w_tot += w[i];
        s_tot += w[i] * z[i];
    }
    Real w_before = 0, s_before = 0, value = 0;
    for (int r = 0; r < k; ++r) {
        int i = s.order[r];
        value += 2.0 * w[i] * (z[i] * w_before - s_before);
        if (d_w || d_z) {
            Real w_after = w_tot - w_before - w[i];
            Real s_after = s_tot - s_before - w[i] * z[i];
            if (d_w) (*d_w)[i] = 2.0 * (z[i] * w_before - s_before + s_after - z[i] * w_after);
            if (d_z) (*d_z)[i] = 2.0 * w[i] * (w_before - w_after);
        }
        w_before += w[i];
        s_before += w[i] * z[i];
    }
    return value;
}

namespace detail {

struct PixelScratch {
    std::vector<Real> w, z;
    DistortionScratch dist;
};

inline void shade_pixel(RenderOutput& out, const Prepared& prep, const int* cand, int n_cand,
                        RenderMode mode, const Camera& cam, const RasterConfig& cfg, int x, int y,
                        PixelScratch& scratch) {
    Ray ray = pixel_ray(cam, {Real(x), Real(y)});
    Vec2 center{x + 0.5, y + 0.5};
    scratch.w.clear();
    scratch.z.clear();
    Vec3 color, nrm;
    Real acc = 0, dep = 0;
    auto visit = [&](int pi, const SplatHit& hit, Real a, Real, bool, Vec2, Real T) {
        const GaborPrimitive& prim = prep.prims[pi].prim;
        Real w = a * T;
        color += w * eval_color(hit.u, hit.v, prim, mode);
        acc += w;
        dep += w * hit.t;
        Real flip = dot(prim.frame.n, ray.direction) > 0 ? -1.0 : 1.0;
        nrm += (w * flip) * prim.frame.n;
        scratch.w.push_back(w);
        scratch.z.push_back(hit.t);
    };
    auto [T, count] = composite_pixel(cfg, prep, cand, n_cand, ray, center, visit);
    (void)T;
    out.color.set_rgb(x, y, color);
    out.accum_alpha.at(x, y) = acc;
    out.expected_depth.at(x, y) = dep;
    out.normal_map.set_rgb(x, y, nrm);
    out.distortion.at(x, y) = pixel_distortion(scratch.w, scratch.z, scratch.dist);
    out.n_contrib[std::size_t(y) * cam.width + x] = count;
}

}  // namespace detail

inline RenderOutput render_forward(const Scene& scene, const Camera& cam, const RasterConfig& cfg) {
    Prepared prep = prepare(scene, cam, cfg);
    RenderOutput out(cam.width, cam.height);
    int n_tiles = prep.tiles_x * prep.tiles_y;
    parallel_for(n_tiles, cfg.threads, [&](int tile) {
        const std::vector<int>& list = prep.tile_lists[tile];
        int tx = tile % prep.tiles_x, ty = tile / prep.tiles_x;
        int x0 = tx * cfg.tile_size, y0 = ty * cfg.tile_size;
        int x1 = std::min(cam.width, x0 + cfg.tile_size);
        int y1 = std::min(cam.height, y0 + cfg.tile_size);
        detail::PixelScratch scratch;
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                detail::shade_pixel(out, prep, list.data(), int(list.size()), scene.mode, cam, cfg,
                                    x, y, scratch);
    });
    return out;
}

// Oracle: per pixel, walk every surviving primitive in global depth order.
// Same gates, same math, no tiling.
inline RenderOutput reference_render(const Scene& scene, const Camera& cam,
                                     const RasterConfig& cfg) {
    Prepared prep = prepare(scene, cam, cfg);
    RenderOutput out(cam.width, cam.height);
    std::vector<int> all(prep.prims.size());
    std::iota(all.begin(), all.end(), 0);
    detail::PixelScratch scratch;
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x)
            detail::shade_pixel(out, prep, all.data(), int(all.size()), scene.mode, cam, cfg, x, y,
                                scratch);
    return out;
}

// Upstream gradients of a scalar loss w.r.t. every per-pixel output.
struct PixelGradients {
    Image d_color;       // H x W x 3
    Image d_accum;       // H x W
    Image d_depth;       // H x W
    Image d_normal;      // H x W x 3
    Image d_distortion;  // H x W

    PixelGradients(int w, int h)
        : d_color(w, h, 3), d_accum(w, h, 1), d_depth(w, h, 1), d_normal(w, h, 3),
          d_distortion(w, h, 1) {}
};

// Raw-parameter gradients, same layout as Scene::raw.
struct GradientBuffer {
    std::vector<Real> raw;
};

namespace detail {

struct ContribRecord {
    int prep;
    Real u, v, t;
    Real a, ghat, T;
    bool object;
    Vec2 delta;
};

struct BackwardScratch {
    std::vector<ContribRecord> records;
    std::vector<Real> w, z, d_w, d_z;
    DistortionScratch dist;
};

// Replays one pixel's compositing and accumulates raw-space gradients for
// the tile-local slots of every contributor.
inline void backward_pixel(const Scene& scene, const Prepared& prep, const std::vector<int>& list,
                           const Camera& cam, const RasterConfig& cfg, const PixelGradients& pg,
                           int x, int y, BackwardScratch& sc, Real* local, int stride) {
    Ray ray = pixel_ray(cam, {Real(x), Real(y)});
    Vec2 center{x + 0.5, y + 0.5};
    sc.records.clear();
    sc.w.clear();
    sc.z.clear();
    composite_pixel(cfg, prep, list.data(), int(list.size()), ray, center,
                    [&](int pi, const SplatHit& hit, Real a, Real ghat, bool object, Vec2 delta,
                        Real T) {
                        sc.records.push_back({pi, hit.u, hit.v, hit.t, a, ghat, T, object, delta});
                        sc.w.push_back(a * T);
                        sc.z.push_back(hit.t);
                    });
    if (sc.records.empty()) return;

    pixel_distortion(sc.w, sc.z, sc.dist, &sc.d_w, &sc.d_z);

    Vec3 g_color = pg.d_color.rgb(x, y);
    Real g_acc = pg.d_accum.at(x, y);
    Real g_dep = pg.d_depth.at(x, y);
    Vec3 g_nrm = pg.d_normal.rgb(x, y);
    Real g_dist = pg.d_distortion.at(x, y);

    // Back-to-front: dL/da_k = dL/dw_k T_k - S/(1-a_k) with S the running
    // sum of dL/dw_j w_j over already-visited (deeper) contributors.
    Real S = 0;
    for (int j = int(sc.records.size()) - 1; j >= 0; --j) {
        const ContribRecord& rec = sc.records[j];
        const PreparedPrim& pp = prep.prims[rec.prep];
        const GaborPrimitive& prim = pp.prim;
        Real w = rec.a * rec.T;

        ColorDerivs cd = eval_color_and_grads(rec.u, rec.v, prim, scene.mode);
        Real flip = dot(prim.frame.n, ray.direction) > 0 ? -1.0 : 1.0;

        Real dL_dw = dot(g_color, cd.color) + g_acc + g_dep * rec.t +
                     flip * dot(g_nrm, prim.frame.n) + g_dist * sc.d_w[j];
        Real dL_da = dL_dw * rec.T - S / (1.0 - rec.a);
        S += dL_dw * w;

        PrimGrads g;
        Vec3 dL_dc = w * g_color;
        g.d_c_A = cd.d_c_A * dL_dc;
        g.d_c_B = cd.d_c_B * dL_dc;
        for (int i = 0; i < prim.n_waves; ++i) {
            g.d_w[i] = dot(dL_dc, cd.d_w[i]);
            g.d_f[i] = dot(dL_dc, cd.d_f[i]);
            g.d_phi[i] = dot(dL_dc, cd.d_phi[i]);
        }
        Real g_u = dot(dL_dc, cd.d_u);
        Real g_v = dot(dL_dc, cd.d_v);
        Real g_t = g_dep * w + g_dist * sc.d_z[j];

        g.d_alpha = dL_da * rec.ghat;
        Real dL_dghat = dL_da * prim.alpha;
        if (rec.object) {
            g_u += dL_dghat * (-rec.u * rec.ghat);
            g_v += dL_dghat * (-rec.v * rec.ghat);
        } else {
            Real ss = cfg.sigma_screen * cfg.sigma_screen;
            Vec2 d_px = (-dL_dghat * rec.ghat / ss) * rec.delta;
            g.d_q += d_project(cam, prim.frame.q, d_px);
        }

        Vec3 d_n = (w * flip) * g_nrm;

        Real denom = dot(ray.direction, prim.frame.n);
        Real inv_den = 1.0 / denom;
        Vec3 offset = ray.origin + rec.t * ray.direction - prim.frame.q;
        Real du_dot = dot(ray.direction, prim.frame.t_u);
        Real dv_dot = dot(ray.direction, prim.frame.t_v);
        Vec3 dt_dq = inv_den * prim.frame.n;

        g.d_q += g_t * dt_dq + (g_u / prim.frame.s_u) * (du_dot * dt_dq - prim.frame.t_u) +
                 (g_v / prim.frame.s_v) * (dv_dot * dt_dq - prim.frame.t_v);
        Vec3 d_tu = (g_u / prim.frame.s_u) * offset;
        Vec3 d_tv = (g_v / prim.frame.s_v) * offset;
        d_n += (-(g_t + g_u * du_dot / prim.frame.s_u + g_v * dv_dot / prim.frame.s_v) * inv_den) *
               offset;
        g.d_s_u = -g_u * rec.u / prim.frame.s_u;
        g.d_s_v = -g_v * rec.v / prim.frame.s_v;

        const Real* praw = scene.prim(pp.scene_index);
        g.d_quat = d_frame_from_quaternion({praw[3], praw[4], praw[5], praw[6]}, d_tu, d_tv, d_n);

        auto slot = std::lower_bound(list.begin(), list.end(), rec.prep) - list.begin();
        accumulate_prim_raw(praw, scene.n_waves, g, local + std::size_t(slot) * stride);
    }
}

}  // namespace detail

inline GradientBuffer render_backward(const Scene& scene, const Camera& cam,
                                      const RasterConfig& cfg, const PixelGradients& pg) {
    if (pg.d_color.width != cam.width || pg.d_color.height != cam.height)
        throw std::invalid_argument("render_backward: gradient images do not match the camera");
    Prepared prep = prepare(scene, cam, cfg);
    int stride = scene.stride();
    GradientBuffer gb;
    gb.raw.assign(scene.raw.size(), 0.0);

    int n_tiles = prep.tiles_x * prep.tiles_y;
    std::vector<std::vector<Real>> tile_grads(n_tiles);
    parallel_for(n_tiles, cfg.threads, [&](int tile) {
        const std::vector<int>& list = prep.tile_lists[tile];
        if (list.empty()) return;
        tile_grads[tile].assign(list.size() * std::size_t(stride), 0.0);
        int tx = tile % prep.tiles_x, ty = tile / prep.tiles_x;
        int x0 = tx * cfg.tile_size, y0 = ty * cfg.tile_size;
        int x1 = std::min(cam.width, x0 + cfg.tile_size);
        int y1 = std::min(cam.height, y0 + cfg.tile_size);
        detail::BackwardScratch scratch;
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                detail::backward_pixel(scene, prep, list, cam, cfg, pg, x, y, scratch,
                                       tile_grads[tile].data(), stride);
    });

    // Deterministic reduction: tile index order, then slot order.
    for (int tile = 0; tile < n_tiles; ++tile) {
        const std::vector<int>& list = prep.tile_lists[tile];
        const std::vector<Real>& local = tile_grads[tile];
        for (std::size_t s = 0; s < list.size(); ++s) {
            Real* dst = gb.raw.data() + std::size_t(prep.prims[list[s]].scene_index) * stride;
            const Real* src = local.data() + s * stride;
            for (int k = 0; k < stride; ++k) dst[k] += src[k];
        }
    }
    return gb;
}

}  // namespace gsp

#endif
