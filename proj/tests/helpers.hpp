#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "pathsg/observable.hpp"
#include "pathsg/path.hpp"

namespace testutil {

using pathsg::PathKind;
using pathsg::SampledPath;

inline SampledPath linear_path(double t_min, double t_max, double dt, PathKind kind = PathKind::Continuous) {
    return SampledPath::from_function(kind, t_min, t_max, dt, 1, [](double t) { return pathsg::StatePoint{t}; });
}

inline SampledPath unit_step(double r, double t_min, double t_max, double dt) {
    return SampledPath::from_function(PathKind::Cadlag, t_min, t_max, dt, 1,
                                      [r, dt](double t) { return pathsg::StatePoint{t >= r - 1e-9 * dt ? 1.0 : 0.0}; });
}

// Random walk-like path with values of moderate size.
inline SampledPath random_path(std::mt19937_64& rng, PathKind kind, double t_min, double t_max, double dt,
                               std::size_t dim = 1) {
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<double> cur(dim, 0.0);
    return SampledPath::from_function(kind, t_min, t_max, dt, dim, [&](double) {
        for (auto& c : cur) c += g(rng);
        return cur;
    });
}

// Step path with jumps at given times (grid aligned) and given post-jump values.
inline SampledPath step_path(double t_min, double t_max, double dt, double v0, const std::vector<double>& times,
                             const std::vector<double>& vals) {
    return SampledPath::from_function(PathKind::Cadlag, t_min, t_max, dt, 1, [&](double t) {
        double v = v0;
        for (std::size_t i = 0; i < times.size(); ++i)
            if (t >= times[i] - 1e-9 * dt) v = vals[i];
        return pathsg::StatePoint{v};
    });
}

inline pathsg::TestFunction random_test_function(std::mt19937_64& rng) {
    using pathsg::TestFunction;
    std::uniform_int_distribution<int> pick(0, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    switch (pick(rng)) {
    case 0: return TestFunction::coordinate(0, 3.0);
    case 1: return TestFunction::cosine({1.0 + u(rng)});
    case 2: return TestFunction::gaussian_bump({u(rng)}, 0.5 + 0.5 * std::abs(u(rng)));
    default: return TestFunction::polynomial(0, {u(rng), u(rng), u(rng)}, 2.0);
    }
}

// Random observable tree with node times on the lattice dt*Z inside [lo, hi].
// With d0_only the tree uses sums, scales and products of integrals only.
inline pathsg::Observable random_observable(std::mt19937_64& rng, double lo, double hi, double dt, int depth,
                                            bool d0_only = false) {
    using pathsg::Observable;
    const auto k_lo = static_cast<long>(std::llround(lo / dt)), k_hi = static_cast<long>(std::llround(hi / dt));
    std::uniform_int_distribution<long> kt(k_lo, k_hi);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto leaf = [&]() {
        std::uniform_int_distribution<int> pick(0, d0_only ? 1 : 3);
        const int w = pick(rng);
        if (w == 0) return Observable::constant(u(rng));
        if (w == 1) {
            long a = kt(rng), b = kt(rng);
            if (a > b) std::swap(a, b);
            return Observable::integral(random_test_function(rng), static_cast<double>(a) * dt,
                                        static_cast<double>(b) * dt);
        }
        const double t = static_cast<double>(kt(rng)) * dt;
        return w == 2 ? Observable::eval(random_test_function(rng), t)
                      : Observable::left_lim(random_test_function(rng), t);
    };
    if (depth <= 0) return leaf();
    std::uniform_int_distribution<int> op(0, 3);
    switch (op(rng)) {
    case 0: return leaf();
    case 1: return random_observable(rng, lo, hi, dt, depth - 1, d0_only) +
                   random_observable(rng, lo, hi, dt, depth - 1, d0_only);
    case 2: return random_observable(rng, lo, hi, dt, depth - 1, d0_only) *
                   random_observable(rng, lo, hi, dt, depth - 1, d0_only);
    default: return Observable::scale(u(rng), random_observable(rng, lo, hi, dt, depth - 1, d0_only));
    }
}

} // namespace testutil
