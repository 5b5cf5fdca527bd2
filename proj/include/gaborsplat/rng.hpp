#ifndef GABORSPLAT_RNG_HPP
#define GABORSPLAT_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "gaborsplat/core.hpp"
#include "gaborsplat/vec.hpp"

namespace gsp {

// Deterministic RNG. Distribution transforms are done by hand because the
// std:: distribution objects are implementation-defined, and training runs
// must be reproducible byte for byte.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    Real uniform() {
        return static_cast<Real>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int n) {  // [0, n)
        return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
    }

    // Standard normal via Box-Muller.
    Real normal() {
        Real u1 = uniform();
        Real u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Uniform on the unit 3-sphere (rotation quaternion).
    Vec4 unit_quaternion() {
        Vec4 q{normal(), normal(), normal(), normal()};
        Real n = norm(q);
        if (n < 1e-12) return {1, 0, 0, 0};
        return (1.0 / n) * q;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = engine_() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace gsp

#endif
