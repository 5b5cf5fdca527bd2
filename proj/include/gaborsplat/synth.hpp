#ifndef GABORSPLAT_SYNTH_HPP
#define GABORSPLAT_SYNTH_HPP

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/dataset.hpp"
#include "gaborsplat/geometry.hpp"
#include "gaborsplat/image.hpp"
#include "gaborsplat/init.hpp"
#include "gaborsplat/rng.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

enum class SynthPreset { Stripes, Checker, Rings };

inline const char* to_string(SynthPreset p) {
    switch (p) {
        case SynthPreset::Stripes: return "stripes";
        case SynthPreset::Checker: return "checker";
        case SynthPreset::Rings: return "rings";
    }
    return "?";
}

inline SynthPreset preset_from_string(const std::string& s) {
    if (s == "stripes") return SynthPreset::Stripes;
    if (s == "checker") return SynthPreset::Checker;
    if (s == "rings") return SynthPreset::Rings;
    throw std::invalid_argument("unknown preset '" + s + "'");
}

// Grayscale texture on the unit plane, (x, y) in [-0.5, 0.5]^2. freq
// counts full periods across the plane; freq = 0 is constant.
inline Real synth_texture(SynthPreset preset, Real freq, Real x, Real y) {
    switch (preset) {
        case SynthPreset::Stripes:
            return 0.5 + 0.5 * std::cos(2.0 * kPi * freq * x);
        case SynthPreset::Checker: {
            long ix = long(std::floor(2.0 * freq * (x + 0.5)));
            long iy = long(std::floor(2.0 * freq * (y + 0.5)));
            return ((ix + iy) & 1) ? 0.0 : 1.0;
        }
        case SynthPreset::Rings:
            return 0.5 + 0.5 * std::cos(2.0 * kPi * freq * std::sqrt(x * x + y * y));
    }
    throw std::invalid_argument("unknown preset");
}

struct SynthConfig {
    SynthPreset preset = SynthPreset::Stripes;
    int views = 16;
    int width = 128;
    int height = 128;
    Real freq = 8.0;
    std::uint64_t seed = 0;
    int grid = 8;  // grid x grid init points
    Real radius = 2.2;
    Real elev_min_deg = 40.0;
    Real elev_max_deg = 70.0;

    void validate() const {
        if (views < 2) throw std::invalid_argument("synth: need at least 2 views");
        if (width < 1 || height < 1) throw std::invalid_argument("synth: non-positive resolution");
        if (!(freq >= 0)) throw std::invalid_argument("synth: frequency must be >= 0");
        if (grid < 1) throw std::invalid_argument("synth: grid must be >= 1");
        if (!(radius > 0)) throw std::invalid_argument("synth: radius must be > 0");
        if (!(elev_min_deg > 0 && elev_min_deg <= elev_max_deg && elev_max_deg < 90))
            throw std::invalid_argument("synth: elevation range must satisfy 0 < min <= max < 90");
    }
};

inline Camera look_at_camera(Vec3 pos, Vec3 target, Vec3 up, int w, int h, Real focal) {
    Vec3 zc = normalized(target - pos);
    Vec3 xc = cross(zc, up);
    Real nx = norm(xc);
    if (!(nx > 1e-9)) throw std::invalid_argument("look_at_camera: view direction parallel to up");
    xc = (1.0 / nx) * xc;
    Vec3 yc = cross(zc, xc);
    Mat3 rot;
    rot.m[0][0] = xc.x; rot.m[0][1] = xc.y; rot.m[0][2] = xc.z;
    rot.m[1][0] = yc.x; rot.m[1][1] = yc.y; rot.m[1][2] = yc.z;
    rot.m[2][0] = zc.x; rot.m[2][1] = zc.y; rot.m[2][2] = zc.z;
    return Camera(w, h, focal, focal, 0.5 * w, 0.5 * h, rot, -(rot * pos));
}

// Hemisphere poses looking at the plane center. The field of view is
// narrow enough that the plane covers the whole frame from every pose,
// so renders carry no background pixels.
inline std::vector<Camera> synth_cameras(const SynthConfig& cfg, Rng& rng) {
    Real focal = 0.5 * Real(std::max(cfg.width, cfg.height)) / std::tan(4.5 * kPi / 180.0);
    std::vector<Camera> cams;
    cams.reserve(cfg.views);
    for (int i = 0; i < cfg.views; ++i) {
        Real az = 2.0 * kPi * (Real(i) + 0.5 * rng.uniform()) / Real(cfg.views);
        Real el = (cfg.elev_min_deg + (cfg.elev_max_deg - cfg.elev_min_deg) * rng.uniform()) *
                  kPi / 180.0;
        Vec3 pos = cfg.radius * Vec3{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                     std::sin(el)};
        cams.push_back(look_at_camera(pos, {0, 0, 0}, {0, 0, 1}, cfg.width, cfg.height, focal));
    }
    return cams;
}

// Exact per-pixel ray trace of the textured plane; off-plane rays are black.
inline Image render_plane(const Camera& cam, SynthPreset preset, Real freq) {
    Image img(cam.width, cam.height, 3);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            Ray ray = pixel_ray(cam, {Real(x), Real(y)});
            if (std::abs(ray.direction.z) < 1e-12) continue;
            Real t = -ray.origin.z / ray.direction.z;
            if (t <= 0) continue;
            Vec3 p = ray.origin + t * ray.direction;
            if (std::abs(p.x) > 0.5 || std::abs(p.y) > 0.5) continue;
            Real v = synth_texture(preset, freq, p.x, p.y);
            img.set_rgb(x, y, {v, v, v});
        }
    return img;
}

// Point color is the texture's mean over the point's grid cell (8x8 box
// sample), not the center value: a center sample can alias against the
// texture period and start every primitive at an extreme color.
inline std::vector<SfmPoint> synth_grid_points(const SynthConfig& cfg) {
    std::vector<SfmPoint> pts;
    pts.reserve(size_t(cfg.grid) * cfg.grid);
    const int sub = 8;
    for (int gy = 0; gy < cfg.grid; ++gy)
        for (int gx = 0; gx < cfg.grid; ++gx) {
            Real x = -0.5 + (Real(gx) + 0.5) / Real(cfg.grid);
            Real y = -0.5 + (Real(gy) + 0.5) / Real(cfg.grid);
            Real v = 0;
            for (int sy = 0; sy < sub; ++sy)
                for (int sx = 0; sx < sub; ++sx)
                    v += synth_texture(
                        cfg.preset, cfg.freq,
                        -0.5 + (Real(gx) + (Real(sx) + 0.5) / sub) / Real(cfg.grid),
                        -0.5 + (Real(gy) + (Real(sy) + 0.5) / sub) / Real(cfg.grid));
            v /= Real(sub * sub);
            pts.push_back({{x, y, 0.0}, {v, v, v}});
        }
    return pts;
}

inline std::string synth_view_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "view_%03d", i);
    return buf;
}

// Full in-memory dataset: cameras, ground-truth renders, grid points.
// Everything below is a pure function of the config.
inline Dataset synth_dataset(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    Dataset ds;
    ds.cameras = synth_cameras(cfg, rng);
    for (int i = 0; i < cfg.views; ++i) {
        View v;
        v.camera = i;
        v.name = synth_view_name(i);
        v.path = v.name + ".png";
        v.image = render_plane(ds.cameras[i], cfg.preset, cfg.freq);
        ds.views.push_back(std::move(v));
    }
    ds.points = synth_grid_points(cfg);
    return ds;
}

}  // namespace gsp

#endif
