#ifndef GABORSPLAT_GEOMETRY_HPP
#define GABORSPLAT_GEOMETRY_HPP

#include <optional>
#include <stdexcept>

#include "gaborsplat/core.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

// Pinhole camera, COLMAP convention: x right, y down, z forward;
// p_cam = rot * p_world + trans.
struct Camera {
    int width = 0;
    int height = 0;
    Real fx = 0, fy = 0, cx = 0, cy = 0;
    Mat3 rot;
    Vec3 trans;

    Camera() = default;
    Camera(int w, int h, Real fx_, Real fy_, Real cx_, Real cy_, const Mat3& r, Vec3 t)
        : width(w), height(h), fx(fx_), fy(fy_), cx(cx_), cy(cy_), rot(r), trans(t) {
        validate();
    }

    void validate() const {
        if (width < 1 || height < 1) throw std::invalid_argument("Camera: non-positive image size");
        if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("Camera: focal lengths must be positive");
        Mat3 rrt = rot * transpose(rot);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Real want = (i == j) ? 1.0 : 0.0;
                if (std::abs(rrt.m[i][j] - want) > 1e-9)
                    throw std::invalid_argument("Camera: rotation is not orthonormal");
            }
    }

    Vec3 position() const { return -transposed_mul(rot, trans); }
    Vec3 forward() const { return rot.row(2); }

    Vec3 to_camera(Vec3 p_world) const { return rot * p_world + trans; }
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit norm
};

// Ray through the center of the pixel at continuous coordinates px
// (+0.5 offset applied here). Caller keeps px inside the image.
inline Ray pixel_ray(const Camera& cam, Vec2 px) {
    Vec3 dir_cam{(px.x + 0.5 - cam.cx) / cam.fx, (px.y + 0.5 - cam.cy) / cam.fy, 1.0};
    Vec3 dir_world = transposed_mul(cam.rot, dir_cam);
    return {cam.position(), normalized(dir_world)};
}

struct Projection {
    Vec2 px;  // continuous pixel coordinates (pixel centers at i+0.5)
    Real z;   // camera-space depth; <= 0 means behind the camera
};

inline Projection project(const Camera& cam, Vec3 p_world) {
    Vec3 pc = cam.to_camera(p_world);
    return {{cam.fx * pc.x / pc.z + cam.cx, cam.fy * pc.y / pc.z + cam.cy}, pc.z};
}

// Backward of project() w.r.t. the world point.
inline Vec3 d_project(const Camera& cam, Vec3 p_world, Vec2 d_px) {
    Vec3 pc = cam.to_camera(p_world);
    Real inv_z = 1.0 / pc.z;
    Vec3 d_pc{cam.fx * inv_z * d_px.x, cam.fy * inv_z * d_px.y,
              (-cam.fx * pc.x * inv_z * inv_z) * d_px.x + (-cam.fy * pc.y * inv_z * inv_z) * d_px.y};
    return transposed_mul(cam.rot, d_pc);
}

// Orthonormal right-handed frame from an (unnormalized) quaternion,
// as the columns of its rotation matrix.
struct Basis {
    Vec3 t_u, t_v, n;
};

inline Basis frame_from_quaternion(Vec4 quat) {
    Real nq = norm(quat);
    if (!(nq > 1e-12)) throw std::invalid_argument("degenerate rotation");
    Real w = quat.w / nq, x = quat.x / nq, y = quat.y / nq, z = quat.z / nq;
    Basis b;
    b.t_u = {1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)};
    b.t_v = {2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)};
    b.n = {2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)};
    return b;
}

// Backward of frame_from_quaternion: gradients w.r.t. the columns in,
// gradient w.r.t. the unnormalized quaternion out.
inline Vec4 d_frame_from_quaternion(Vec4 quat, Vec3 d_tu, Vec3 d_tv, Vec3 d_n) {
    Real nq = norm(quat);
    if (!(nq > 1e-12)) throw std::invalid_argument("degenerate rotation");
    Real w = quat.w / nq, x = quat.x / nq, y = quat.y / nq, z = quat.z / nq;

    // Partials of the three columns w.r.t. the normalized quaternion.
    Vec3 tu_w{0, 2 * z, -2 * y}, tu_x{0, 2 * y, 2 * z}, tu_y{-4 * y, 2 * x, -2 * w},
        tu_z{-4 * z, 2 * w, 2 * x};
    Vec3 tv_w{-2 * z, 0, 2 * x}, tv_x{2 * y, -4 * x, 2 * w}, tv_y{2 * x, 0, 2 * z},
        tv_z{-2 * w, -4 * z, 2 * y};
    Vec3 n_w{2 * y, -2 * x, 0}, n_x{2 * z, -2 * w, -4 * x}, n_y{2 * w, 2 * z, -4 * y},
        n_z{2 * x, 2 * y, 0};

    Vec4 d_hat{dot(d_tu, tu_w) + dot(d_tv, tv_w) + dot(d_n, n_w),
               dot(d_tu, tu_x) + dot(d_tv, tv_x) + dot(d_n, n_x),
               dot(d_tu, tu_y) + dot(d_tv, tv_y) + dot(d_n, n_y),
               dot(d_tu, tu_z) + dot(d_tv, tv_z) + dot(d_n, n_z)};

    // Through the normalization q_hat = q / |q|.
    Vec4 q_hat{w, x, y, z};
    Real proj = dot(q_hat, d_hat);
    return (1.0 / nq) * Vec4{d_hat.w - proj * w, d_hat.x - proj * x, d_hat.y - proj * y,
                             d_hat.z - proj * z};
}

// One flat splat's placement: center, principal axes, scales.
struct SplatFrame {
    Vec3 q;
    Vec3 t_u, t_v, n;
    Real s_u = 1, s_v = 1;
};

inline SplatFrame make_frame(Vec3 q, Vec4 quat, Real s_u, Real s_v) {
    Basis b = frame_from_quaternion(quat);
    return {q, b.t_u, b.t_v, b.n, s_u, s_v};
}

struct SplatHit {
    Real u, v;  // local coordinates, in units of the principal scales
    Real t;     // distance along the ray; positive in front of the origin
};

// Explicit ray-plane intersection followed by inversion of
// p = q + u s_u t_u + v s_v t_v.
inline std::optional<SplatHit> ray_splat_intersect(const Ray& ray, const SplatFrame& f) {
    Real denom = dot(ray.direction, f.n);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    Real t = dot(f.q - ray.origin, f.n) / denom;
    if (!(t > 0)) return std::nullopt;
    Vec3 delta = ray.origin + t * ray.direction - f.q;
    return SplatHit{dot(delta, f.t_u) / f.s_u, dot(delta, f.t_v) / f.s_v, t};
}

}  // namespace gsp

#endif
