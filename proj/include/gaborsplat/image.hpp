#ifndef GABORSPLAT_IMAGE_HPP
#define GABORSPLAT_IMAGE_HPP

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

// Dense row-major image buffer, 1 or 3 channels of Real.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<Real> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c), data(size_t(w) * h * c, 0.0) {}

    Real& at(int x, int y, int c = 0) { return data[(size_t(y) * width + x) * channels + c]; }
    Real at(int x, int y, int c = 0) const { return data[(size_t(y) * width + x) * channels + c]; }

    Vec3 rgb(int x, int y) const {
        size_t i = (size_t(y) * width + x) * 3;
        return {data[i], data[i + 1], data[i + 2]};
    }
    void set_rgb(int x, int y, Vec3 v) {
        size_t i = (size_t(y) * width + x) * 3;
        data[i] = v.x;
        data[i + 1] = v.y;
        data[i + 2] = v.z;
    }
    void add_rgb(int x, int y, Vec3 v) {
        size_t i = (size_t(y) * width + x) * 3;
        data[i] += v.x;
        data[i + 1] += v.y;
        data[i + 2] += v.z;
    }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    size_t size() const { return data.size(); }
    void fill(Real v) { std::fill(data.begin(), data.end(), v); }
};

inline void require_same_shape(const Image& a, const Image& b, const char* who) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(who) + ": image dimension mismatch");
}

inline Image clamped01(const Image& im) {
    Image out = im;
    for (Real& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

// Snap to the 8-bit grid PNG output lives on, so that a render compared
// against its own saved image is bitwise equal.
inline Image quantized8(const Image& im) {
    Image out = im;
    for (Real& v : out.data) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    return out;
}

}  // namespace gsp

#endif
