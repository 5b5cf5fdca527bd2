#ifndef GABORSPLAT_ADAM_HPP
#define GABORSPLAT_ADAM_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/scene.hpp"

namespace gsp {

struct LearningRates {
    Real position = 1.6e-4;
    Real position_final = 1.6e-6;  // exponential-decay endpoint over the run
    Real rotation = 1e-3;
    Real scale = 5e-3;
    Real alpha = 5e-2;
    Real color = 2.5e-3;
    Real wave = 2.5e-3;

    // Position rate at training progress in [0, 1].
    Real position_at(Real progress) const {
        return position * std::pow(position_final / position, progress);
    }

    Real for_group(ParamGroup g, Real progress) const {
        switch (g) {
            case ParamGroup::Position: return position_at(progress);
            case ParamGroup::Rotation: return rotation;
            case ParamGroup::Scale: return scale;
            case ParamGroup::Alpha: return alpha;
            case ParamGroup::Color: return color;
            case ParamGroup::Wave: return wave;
        }
        return 0;
    }
};

// Standard Adam with bias correction over the flat raw-parameter buffer.
struct Adam {
    Real beta1 = 0.9, beta2 = 0.999, eps = 1e-15;
    std::vector<Real> m, v;
    long long t = 0;

    void reset(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        t = 0;
    }

    // lr_by_offset has one learning rate per offset within a primitive's
    // raw stride; parameter i uses lr_by_offset[i % stride].
    void step(std::vector<Real>& params, const std::vector<Real>& grads,
              const std::vector<Real>& lr_by_offset) {
        if (params.size() != grads.size() || params.size() != m.size())
            throw std::invalid_argument("adam_step: buffer size mismatch");
        int stride = int(lr_by_offset.size());
        for (std::size_t i = 0; i < grads.size(); ++i)
            if (!std::isfinite(grads[i]))
                throw std::runtime_error("adam_step: non-finite gradient at parameter " +
                                         std::to_string(i));
        ++t;
        Real bc1 = 1.0 - std::pow(beta1, Real(t));
        Real bc2 = 1.0 - std::pow(beta2, Real(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Real g = grads[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            Real m_hat = m[i] / bc1;
            Real v_hat = v[i] / bc2;
            params[i] -= lr_by_offset[i % stride] * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
};

inline std::vector<Real> learning_rate_table(const LearningRates& lrs, int n_waves, Real progress) {
    int stride = kBaseStride + 3 * n_waves;
    std::vector<Real> table(stride);
    for (int off = 0; off < stride; ++off)
        table[off] = lrs.for_group(param_group(off, n_waves), progress);
    return table;
}

}  // namespace gsp

#endif
