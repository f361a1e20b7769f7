#pragma once

// Brute-force reference for d_a^b on step paths: lambda is piecewise linear
// with knots at the jump times of x and images restricted to a uniform grid.
// Exhaustive DP over the image grid; the result is an upper bound that is
// within the grid resolution of the true infimum.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

struct StepFn {
    double v0;
    std::vector<double> times;  // strictly inside (a, b)
    std::vector<double> vals;
    double at(double t) const {
        double v = v0;
        for (std::size_t i = 0; i < times.size(); ++i)
            if (t >= times[i] - 1e-12) v = vals[i];
        return v;
    }
};

inline double dist(double u, double v) { return std::min(1.0, std::abs(u - v)); }

// Largest mismatch of the constant c against y on [u, v).
inline double seg_mismatch(double c, const StepFn& y, double u, double v) {
    double m = dist(c, y.at(u));
    for (std::size_t j = 0; j < y.times.size(); ++j)
        if (y.times[j] > u + 1e-12 && y.times[j] < v - 1e-12) m = std::max(m, dist(c, y.vals[j]));
    return m;
}

inline double brute_force(const StepFn& x, const StepFn& y, double a, double b, double res) {
    const auto M = static_cast<int>(std::llround((b - a) / res));
    auto img = [&](int k) { return k == M ? b : a + k * res; };
    std::vector<double> knots{a};
    knots.insert(knots.end(), x.times.begin(), x.times.end());
    knots.push_back(b);
    std::vector<double> xs{x.v0};
    xs.insert(xs.end(), x.vals.begin(), x.vals.end());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost(static_cast<std::size_t>(M + 1), inf), next(static_cast<std::size_t>(M + 1));
    cost[0] = 0;
    const std::size_t K = knots.size() - 1;
    for (std::size_t i = 1; i <= K; ++i) {
        std::fill(next.begin(), next.end(), inf);
        const double dp = knots[i] - knots[i - 1];
        const bool last = i == K;
        for (int u = 0; u <= M; ++u) {
            if (cost[static_cast<std::size_t>(u)] >= 1.0 + 1e-12) continue;
            for (int v = last ? M : u + 1; v <= M; ++v) {
                const double slope = (img(v) - img(u)) / dp;
                const double lip = std::abs(std::log(slope));
                if (slope > 1 && lip > 1.0) break;
                if (lip > 1.0) continue;
                double c = std::max(cost[static_cast<std::size_t>(u)], lip);
                if (c >= next[static_cast<std::size_t>(v)]) continue;
                c = std::max(c, seg_mismatch(xs[i - 1], y, img(u), img(v)));
                next[static_cast<std::size_t>(v)] = std::min(next[static_cast<std::size_t>(v)], c);
            }
        }
        std::swap(cost, next);
    }
    const double end_point = dist(xs.back(), y.at(b));
    return std::min(1.0, std::max(cost[static_cast<std::size_t>(M)], end_point));
}

} // namespace oracle
