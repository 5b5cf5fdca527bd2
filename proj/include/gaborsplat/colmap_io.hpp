#ifndef GABORSPLAT_COLMAP_IO_HPP
#define GABORSPLAT_COLMAP_IO_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/dataset.hpp"
#include "gaborsplat/geometry.hpp"
#include "gaborsplat/init.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {
namespace colmap_detail {

inline bool data_line(const std::string& line) {
    size_t pos = line.find_first_not_of(" \t\r");
    return pos != std::string::npos && line[pos] != '#';
}

[[noreturn]] inline void fail(const std::string& file, int lineno, const std::string& what) {
    throw std::runtime_error(file + " line " + std::to_string(lineno) + ": " + what);
}

}  // namespace colmap_detail

struct ColmapIntrinsics {
    int width = 0, height = 0;
    Real fx = 0, fy = 0, cx = 0, cy = 0;
};

// cameras.txt: CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]. Only the two
// distortion-free models are supported.
inline std::map<long, ColmapIntrinsics> parse_colmap_cameras(std::istream& in,
                                                             const std::string& name) {
    std::map<long, ColmapIntrinsics> cams;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!colmap_detail::data_line(line)) continue;
        std::istringstream ls(line);
        long id;
        std::string model;
        ColmapIntrinsics ci;
        if (!(ls >> id >> model >> ci.width >> ci.height))
            colmap_detail::fail(name, lineno, "expected 'CAMERA_ID MODEL WIDTH HEIGHT PARAMS'");
        if (model == "PINHOLE") {
            if (!(ls >> ci.fx >> ci.fy >> ci.cx >> ci.cy))
                colmap_detail::fail(name, lineno, "PINHOLE needs params 'fx fy cx cy'");
        } else if (model == "SIMPLE_PINHOLE") {
            if (!(ls >> ci.fx >> ci.cx >> ci.cy))
                colmap_detail::fail(name, lineno, "SIMPLE_PINHOLE needs params 'f cx cy'");
            ci.fy = ci.fx;
        } else {
            colmap_detail::fail(name, lineno,
                                "camera model '" + model + "' unsupported (want PINHOLE or "
                                "SIMPLE_PINHOLE)");
        }
        std::string extra;
        if (ls >> extra) colmap_detail::fail(name, lineno, "unexpected trailing token '" + extra + "'");
        if (ci.width < 1 || ci.height < 1)
            colmap_detail::fail(name, lineno, "non-positive image size");
        if (!(ci.fx > 0) || !(ci.fy > 0))
            colmap_detail::fail(name, lineno, "focal length must be positive");
        if (cams.count(id)) colmap_detail::fail(name, lineno, "duplicate camera id");
        cams[id] = ci;
    }
    if (cams.empty()) throw std::runtime_error(name + ": no cameras");
    return cams;
}

// images.txt: alternating pose lines "IMAGE_ID QW QX QY QZ TX TY TZ
// CAMERA_ID NAME" and 2D-point lines (skipped; may be empty). The
// quaternion and translation are the world-to-camera transform.
inline void parse_colmap_images(std::istream& in, const std::string& name,
                                const std::map<long, ColmapIntrinsics>& intr, Dataset& ds) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!colmap_detail::data_line(line)) continue;
        std::istringstream ls(line);
        long image_id, camera_id;
        Vec4 q;
        Vec3 t;
        std::string img_name;
        if (!(ls >> image_id >> q.w >> q.x >> q.y >> q.z >> t.x >> t.y >> t.z >> camera_id >>
              img_name))
            colmap_detail::fail(name, lineno,
                                "expected 'IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME'");
        auto it = intr.find(camera_id);
        if (it == intr.end())
            colmap_detail::fail(name, lineno,
                                "unknown camera id " + std::to_string(camera_id));
        if (!(norm(q) > 1e-12)) colmap_detail::fail(name, lineno, "degenerate quaternion");

        Basis b = frame_from_quaternion(q);  // columns of R(q)
        Mat3 rot;
        rot.m[0][0] = b.t_u.x; rot.m[1][0] = b.t_u.y; rot.m[2][0] = b.t_u.z;
        rot.m[0][1] = b.t_v.x; rot.m[1][1] = b.t_v.y; rot.m[2][1] = b.t_v.z;
        rot.m[0][2] = b.n.x;   rot.m[1][2] = b.n.y;   rot.m[2][2] = b.n.z;

        const ColmapIntrinsics& ci = it->second;
        try {
            ds.cameras.emplace_back(ci.width, ci.height, ci.fx, ci.fy, ci.cx, ci.cy, rot, t);
        } catch (const std::exception& e) {
            colmap_detail::fail(name, lineno, e.what());
        }
        View v;
        v.camera = int(ds.cameras.size()) - 1;
        v.name = std::filesystem::path(img_name).stem().string();
        v.path = img_name;
        ds.views.push_back(std::move(v));

        // The paired 2D-point line; blank when the image has no features.
        while (std::getline(in, line)) {
            ++lineno;
            size_t pos = line.find_first_not_of(" \t\r");
            if (pos != std::string::npos && line[pos] == '#') continue;
            break;
        }
    }
}

// points3D.txt: POINT3D_ID X Y Z R G B ERROR TRACK[]. Track entries are
// ignored.
inline std::vector<SfmPoint> parse_colmap_points(std::istream& in, const std::string& name) {
    std::vector<SfmPoint> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!colmap_detail::data_line(line)) continue;
        std::istringstream ls(line);
        long id;
        SfmPoint p;
        int r, g, b;
        Real err;
        if (!(ls >> id >> p.xyz.x >> p.xyz.y >> p.xyz.z >> r >> g >> b >> err))
            colmap_detail::fail(name, lineno, "expected 'POINT3D_ID X Y Z R G B ERROR TRACK[]'");
        if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
            colmap_detail::fail(name, lineno, "color out of range [0, 255]");
        p.rgb = {Real(r) / 255.0, Real(g) / 255.0, Real(b) / 255.0};
        pts.push_back(p);
    }
    return pts;
}

// Loads DIR/{cameras,images,points3D}.txt. Image paths resolve to
// DIR/images/NAME when that exists, else DIR/NAME.
inline Dataset load_colmap(const std::string& dir) {
    namespace fs = std::filesystem;
    auto open = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open '" + p.string() + "'");
        return in;
    };
    fs::path base(dir);
    std::ifstream cam_in = open(base / "cameras.txt");
    std::map<long, ColmapIntrinsics> intr = parse_colmap_cameras(cam_in, "cameras.txt");

    Dataset ds;
    std::ifstream img_in = open(base / "images.txt");
    parse_colmap_images(img_in, "images.txt", intr, ds);

    std::ifstream pts_in = open(base / "points3D.txt");
    ds.points = parse_colmap_points(pts_in, "points3D.txt");

    for (View& v : ds.views) {
        fs::path sub = base / "images" / v.path;
        v.path = fs::exists(sub) ? sub.string() : (base / v.path).string();
    }
    return ds;
}

}  // namespace gsp

#endif
