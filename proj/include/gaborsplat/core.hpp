#ifndef GABORSPLAT_CORE_HPP
#define GABORSPLAT_CORE_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace gsp {

using Real = double;

constexpr Real kPi = 3.14159265358979323846;

// Rendering constants shared by the tiled rasterizer and the reference
// renderer. Both paths must use the same values or they diverge.
struct RasterConfig {
    int tile_size = 16;
    // Primitives whose center depth is at or below this are culled.
    Real near_plane = 0.01;
    // Per-pixel contributions below this opacity are skipped.
    Real alpha_min = 1.0 / 255.0;
    // Compositing stops before the splat that would push transmittance
    // below this.
    Real transmittance_stop = 1e-4;
    // Screen-space std of the low-pass filter term, in pixels.
    Real sigma_screen = 0.70710678118654752440;
    // Worker threads for the tiled passes; 0 = hardware concurrency.
    // Outputs are bitwise independent of this value.
    int threads = 0;
};

// Radius (in units of sigma) beyond which alpha * G < alpha_min for any
// alpha < 1: exp(-r^2/2) = 1/255 at r = sqrt(2 ln 255). Binning uses this
// bound so the tile lists cover every pixel that can pass the alpha gate.
inline Real support_radius() { return std::sqrt(2.0 * std::log(255.0)); }

constexpr int kMaxWaves = 16;

inline Real sigmoid(Real x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Real logit(Real p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("logit: argument must be in (0,1), got " + std::to_string(p));
    return std::log(p / (1.0 - p));
}

// Shortest-exact decimal form used by every log and table so reruns are
// byte-comparable.
inline std::string fmt_real(Real v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace gsp

#endif
