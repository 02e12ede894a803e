#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "kwsolve/grid.hpp"

namespace kw {

/// Band-limited trigonometric field: a sum of `terms` plane waves
/// a cos(k.x + p) with integer wavevectors 0 < |k_i| <= max_mode, amplitudes
/// uniform in [-1, 1]. Mean zero up to rounding as long as max_mode < N_i / 2.
template <typename Rng>
ScalarField random_smooth_field(const GridSpec& spec, Rng& rng, int max_mode = 3, int terms = 6) {
    std::uniform_int_distribution<int> mode(-max_mode, max_mode);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.14159265358979323846);

    struct Wave {
        std::vector<int> k;
        double a, p;
    };
    std::vector<Wave> waves;
    for (int t = 0; t < terms; ++t) {
        Wave w{std::vector<int>(spec.rank()), amp(rng), phase(rng)};
        bool nonzero = false;
        while (!nonzero) {
            for (auto& ki : w.k) {
                ki = mode(rng);
                nonzero = nonzero || ki != 0;
            }
        }
        waves.push_back(std::move(w));
    }
    return sample(spec, [&](std::span<const double> x) {
        double v = 0.0;
        for (const auto& w : waves) {
            double arg = w.p;
            for (std::size_t i = 0; i < x.size(); ++i) arg += w.k[i] * x[i];
            v += w.a * std::cos(arg);
        }
        return v;
    });
}

} // namespace kw
