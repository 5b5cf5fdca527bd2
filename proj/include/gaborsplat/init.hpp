#ifndef GABORSPLAT_INIT_HPP
#define GABORSPLAT_INIT_HPP

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/rng.hpp"
#include "gaborsplat/scene.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

struct SfmPoint {
    Vec3 xyz;
    Vec3 rgb{0.5, 0.5, 0.5};
};

// One primitive per SfM point: position from the point, isotropic scale
// from the mean distance to its 3 nearest neighbors, random orientation,
// alpha 0.1, both colors from the point RGB, w = (1, 0, ..., 0),
// f ~ U(0, 2), phi ~ U(0, 2 pi). Per-primitive draw order is fixed
// (quaternion, then frequencies, then phases) so scenes are reproducible.
inline Scene init_from_points(const std::vector<SfmPoint>& points, int n_waves, RenderMode mode,
                              Rng& rng) {
    if (points.empty()) throw std::invalid_argument("init_from_points: empty point list");
    int n = int(points.size());

    // Mean distance to the 3 nearest neighbors (fewer if the cloud is
    // tiny); a lone point falls back to 0.1.
    std::vector<Real> nn_scale(n, 0.1);
    std::vector<Real> d2(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) d2[j] = norm_sq(points[j].xyz - points[i].xyz);
        d2[i] = std::numeric_limits<Real>::infinity();
        int k = std::min(3, n - 1);
        if (k < 1) continue;
        std::partial_sort(d2.begin(), d2.begin() + k, d2.end());
        Real mean = 0;
        for (int j = 0; j < k; ++j) mean += std::sqrt(d2[j]);
        mean /= Real(k);
        if (mean > 0) nn_scale[i] = mean;
    }

    Scene scene;
    scene.n_waves = n_waves;
    scene.mode = mode;
    scene.resize(n);
    scene.validate();
    for (int i = 0; i < n; ++i) {
        GaborPrimitive p;
        p.frame.q = points[i].xyz;
        p.frame.s_u = p.frame.s_v = nn_scale[i];
        p.alpha = 0.1;
        // Saturated colors would start the logit far into the sigmoid
        // tail where gradients vanish, so clamp well inside (0, 1).
        Vec3 c{std::clamp(points[i].rgb.x, 0.05, 0.95),
               std::clamp(points[i].rgb.y, 0.05, 0.95),
               std::clamp(points[i].rgb.z, 0.05, 0.95)};
        p.c_A = p.c_B = c;
        p.n_waves = n_waves;
        Vec4 quat = rng.unit_quaternion();
        for (int wv = 0; wv < n_waves; ++wv) p.waves[wv].w = (wv == 0) ? 1.0 : 0.0;
        for (int wv = 0; wv < n_waves; ++wv) p.waves[wv].f = rng.uniform(0.0, 2.0);
        for (int wv = 0; wv < n_waves; ++wv) p.waves[wv].phi = rng.uniform(0.0, 2.0 * kPi);
        deactivate(p, quat, n_waves, scene.prim(i));
    }
    return scene;
}

inline Scene init_from_points(const std::vector<SfmPoint>& points, int n_waves, RenderMode mode,
                              std::uint64_t seed) {
    Rng rng(seed);
    return init_from_points(points, n_waves, mode, rng);
}

struct ViewSplit {
    std::vector<int> train, test;  // indices into the caller's view list
};

// Default policy: sort by name, every round(1/fraction)-th view is test.
// The seed only matters for the random policy.
inline ViewSplit split_train_test(const std::vector<std::string>& names, Real fraction = 0.125,
                                  std::uint64_t seed = 0, bool random_policy = false) {
    if (names.empty()) throw std::invalid_argument("split_train_test: empty view list");
    if (!(fraction >= 0 && fraction < 1))
        throw std::invalid_argument("split_train_test: fraction must be in [0, 1)");
    int n = int(names.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return names[a] != names[b] ? names[a] < names[b] : a < b; });

    ViewSplit split;
    if (random_policy) {
        Rng rng(seed);
        rng.shuffle(order);
        int n_test = int(std::floor(fraction * n));
        for (int i = 0; i < n; ++i)
            (i < n_test ? split.test : split.train).push_back(order[i]);
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
    } else {
        int stride = fraction > 0 ? int(std::lround(1.0 / fraction)) : 0;
        for (int i = 0; i < n; ++i) {
            if (stride > 0 && i % stride == 0 && n >= stride)
                split.test.push_back(order[i]);
            else
                split.train.push_back(order[i]);
        }
    }
    if (split.test.empty())
        std::fprintf(stderr, "warning: test split is empty (%d views)\n", n);
    return split;
}

}  // namespace gsp

#endif
