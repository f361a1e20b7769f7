#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pathsg/path.hpp"

namespace pathsg {

// Piecewise-linear increasing bijection of [a, b] given by its knots.
struct TimeChange {
    std::vector<double> knots;
    std::vector<double> images;

    static TimeChange identity(double a, double b) { return {{a, b}, {a, b}}; }
    // Throws InvalidArgument unless knots/images are strictly increasing with equal end points.
    void validate() const;
    double operator()(double t) const;
};

// max over linear pieces of |log slope|
double lip_cost(const TimeChange& lambda);

struct MetricValue {
    double value = 0;
    std::optional<TimeChange> witness;
    bool is_upper_bound = false;
    double tail_error = 0;
};

struct SearchBudget {
    // Exact step-path search is used while (jumps_x+1)*(jumps_y+1) stays below this.
    std::size_t max_matchings = 4096;
    // Value-grid refinement per knot interval in the general upper-bound search; 0 = identity only.
    int slope_levels = 4;
    double quad_step = 0.05;
    double s_max = 8.0;
};

double d_state(std::span<const double> x, std::span<const double> y);

// Truncated series through n_max; tail_error = 2^-n_max.
MetricValue d_c(const SampledPath& x, const SampledPath& y, int n_max);

MetricValue d_ab_j1(const SampledPath& x, const SampledPath& y, double a, double b, const SearchBudget& budget = {});
MetricValue d_j1(const SampledPath& x, const SampledPath& y, const SearchBudget& budget = {});
MetricValue d_minus_j1(const SampledPath& x, const SampledPath& y, const SearchBudget& budget = {});

double modulus(const SampledPath& x, double delta, double T);
double f_delta_bound(double delta, double t);

} // namespace pathsg
