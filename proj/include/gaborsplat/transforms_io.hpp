#ifndef GABORSPLAT_TRANSFORMS_IO_HPP
#define GABORSPLAT_TRANSFORMS_IO_HPP

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
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

// transforms.json stores OpenGL-style camera-to-world matrices (x right,
// y up, z backward); flipping the y and z columns yields our convention.
inline Camera camera_from_c2w_gl(const Mat3& r_gl, Vec3 pos, Real fl_x, Real fl_y, Real cx,
                                 Real cy, int w, int h) {
    Mat3 c2w = r_gl;
    for (int i = 0; i < 3; ++i) {
        c2w.m[i][1] = -c2w.m[i][1];
        c2w.m[i][2] = -c2w.m[i][2];
    }
    if (!(det(c2w) > 1e-9)) throw std::runtime_error("non-invertible transform");

    // Tolerate mild scaling / rounding in the input matrix.
    Vec3 c0 = c2w.col(0), c1 = c2w.col(1);
    Real n0 = norm(c0);
    if (!(n0 > 1e-12)) throw std::runtime_error("non-invertible transform");
    c0 = (1.0 / n0) * c0;
    c1 = c1 - dot(c1, c0) * c0;
    Real n1 = norm(c1);
    if (!(n1 > 1e-12)) throw std::runtime_error("non-invertible transform");
    c1 = (1.0 / n1) * c1;
    Vec3 c2 = cross(c0, c1);

    Mat3 rot;  // world-to-camera = transpose of the orthonormalized c2w
    rot.m[0][0] = c0.x; rot.m[0][1] = c0.y; rot.m[0][2] = c0.z;
    rot.m[1][0] = c1.x; rot.m[1][1] = c1.y; rot.m[1][2] = c1.z;
    rot.m[2][0] = c2.x; rot.m[2][1] = c2.y; rot.m[2][2] = c2.z;
    return Camera(w, h, fl_x, fl_y, cx, cy, rot, -(rot * pos));
}

// Parses transforms.json content. Image paths are joined onto base_dir;
// sfm_points stays empty (init points come from a sidecar file).
inline Dataset load_transforms_text(const std::string& text, const std::string& base_dir = "") {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("transforms: ") + e.what());
    }
    if (!root.is_object()) throw std::runtime_error("transforms: root is not an object");
    if (!root.contains("frames")) throw std::runtime_error("transforms: missing field 'frames'");
    const nlohmann::json& frames = root.at("frames");
    if (!frames.is_array() || frames.empty()) throw std::runtime_error("transforms: no frames");

    auto intrinsic = [&root](const nlohmann::json& fr, const char* key) -> Real {
        const nlohmann::json* src = nullptr;
        if (fr.contains(key)) src = &fr.at(key);
        else if (root.contains(key)) src = &root.at(key);
        if (!src)
            throw std::runtime_error(std::string("transforms: missing field '") + key + "'");
        if (!src->is_number())
            throw std::runtime_error(std::string("transforms: field '") + key +
                                     "' is not a number");
        return src->get<double>();
    };

    Dataset ds;
    int idx = 0;
    for (const nlohmann::json& fr : frames) {
        std::string where = "transforms: frame " + std::to_string(idx);
        if (!fr.is_object()) throw std::runtime_error(where + " is not an object");
        if (!fr.contains("file_path"))
            throw std::runtime_error("transforms: missing field 'file_path'");
        if (!fr.at("file_path").is_string())
            throw std::runtime_error(where + ": 'file_path' is not a string");
        if (!fr.contains("transform_matrix"))
            throw std::runtime_error("transforms: missing field 'transform_matrix'");

        const nlohmann::json& tm = fr.at("transform_matrix");
        if (!tm.is_array() || tm.size() != 4)
            throw std::runtime_error(where + ": transform_matrix must be 4x4");
        Mat3 r_gl;
        Vec3 pos;
        for (int i = 0; i < 4; ++i) {
            const nlohmann::json& row = tm.at(i);
            if (!row.is_array() || row.size() != 4)
                throw std::runtime_error(where + ": transform_matrix must be 4x4");
            for (int j = 0; j < 4; ++j)
                if (!row.at(j).is_number())
                    throw std::runtime_error(where + ": transform_matrix must be numeric");
            if (i < 3) {
                for (int j = 0; j < 3; ++j) r_gl.m[i][j] = row.at(j).get<double>();
                (&pos.x)[i] = row.at(3).get<double>();
            }
        }

        Real fl_x = intrinsic(fr, "fl_x"), fl_y = intrinsic(fr, "fl_y");
        Real cx = intrinsic(fr, "cx"), cy = intrinsic(fr, "cy");
        Real wf = intrinsic(fr, "w"), hf = intrinsic(fr, "h");
        try {
            ds.cameras.push_back(camera_from_c2w_gl(r_gl, pos, fl_x, fl_y, cx, cy,
                                                    int(std::lround(wf)), int(std::lround(hf))));
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }

        std::filesystem::path p(fr.at("file_path").get<std::string>());
        View v;
        v.camera = idx;
        v.name = p.stem().string();
        if (p.extension().empty()) p += ".png";
        v.path = base_dir.empty() ? p.string() : (std::filesystem::path(base_dir) / p).string();
        ds.views.push_back(std::move(v));
        ++idx;
    }
    return ds;
}

inline Dataset load_transforms(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + file + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_transforms_text(buf.str(), std::filesystem::path(file).parent_path().string());
}

// Shared-intrinsics writer (all cameras must agree); inverse of the
// conversion in camera_from_c2w_gl.
inline void save_transforms(const std::string& file, const std::vector<Camera>& cams,
                            const std::vector<std::string>& image_files) {
    if (cams.empty() || cams.size() != image_files.size())
        throw std::invalid_argument("save_transforms: camera/image count mismatch");
    const Camera& c0 = cams[0];
    nlohmann::json root;
    root["fl_x"] = c0.fx;
    root["fl_y"] = c0.fy;
    root["cx"] = c0.cx;
    root["cy"] = c0.cy;
    root["w"] = c0.width;
    root["h"] = c0.height;
    nlohmann::json frames = nlohmann::json::array();
    for (size_t i = 0; i < cams.size(); ++i) {
        const Camera& c = cams[i];
        if (c.fx != c0.fx || c.fy != c0.fy || c.cx != c0.cx || c.cy != c0.cy ||
            c.width != c0.width || c.height != c0.height)
            throw std::invalid_argument("save_transforms: cameras must share intrinsics");
        Mat3 c2w = transpose(c.rot);
        for (int r = 0; r < 3; ++r) {
            c2w.m[r][1] = -c2w.m[r][1];
            c2w.m[r][2] = -c2w.m[r][2];
        }
        Vec3 pos = c.position();
        nlohmann::json tm = nlohmann::json::array();
        for (int r = 0; r < 3; ++r)
            tm.push_back({c2w.m[r][0], c2w.m[r][1], c2w.m[r][2], (&pos.x)[r]});
        tm.push_back({0.0, 0.0, 0.0, 1.0});
        frames.push_back({{"file_path", image_files[i]}, {"transform_matrix", tm}});
    }
    root["frames"] = frames;
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + file + "' for writing");
    out << root.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: '" + file + "'");
}

// Sidecar init points: one "x y z r g b" line per point, '#' comments.
inline std::vector<SfmPoint> parse_points_txt(std::istream& in, const std::string& name) {
    std::vector<SfmPoint> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '#') continue;
        std::istringstream ls(line);
        SfmPoint p;
        if (!(ls >> p.xyz.x >> p.xyz.y >> p.xyz.z >> p.rgb.x >> p.rgb.y >> p.rgb.z))
            throw std::runtime_error(name + " line " + std::to_string(lineno) +
                                     ": expected 'x y z r g b'");
        pts.push_back(p);
    }
    return pts;
}

inline std::vector<SfmPoint> load_points_txt(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + file + "'");
    return parse_points_txt(in, std::filesystem::path(file).filename().string());
}

inline void save_points_txt(const std::string& file, const std::vector<SfmPoint>& pts) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + file + "' for writing");
    out << "# x y z r g b\n";
    for (const SfmPoint& p : pts)
        out << fmt_real(p.xyz.x) << " " << fmt_real(p.xyz.y) << " " << fmt_real(p.xyz.z) << " "
            << fmt_real(p.rgb.x) << " " << fmt_real(p.rgb.y) << " " << fmt_real(p.rgb.z) << "\n";
    if (!out) throw std::runtime_error("write failed: '" + file + "'");
}

}  // namespace gsp

#endif
