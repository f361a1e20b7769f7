#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pathsg {

using StatePoint = std::vector<double>;

enum class PathKind { Continuous, Cadlag };

// Relative tolerance used to decide whether a time sits on the grid.
inline constexpr double kGridTol = 1e-9;

// Returns k with t == k*dt (within kGridTol*dt); throws NonGridShift otherwise.
std::int64_t grid_steps(double t, double dt);
bool on_grid(double t, double dt);

// Path on the lattice dt*Z restricted to a finite window, constant outside it.
// Node i sits at time (first_index + i) * dt, so shifting is integer bookkeeping.
class SampledPath {
public:
    SampledPath() = default;
    // `values` is row-major: node i occupies [i*dim, (i+1)*dim).
    SampledPath(PathKind kind, double t_min, double dt, std::size_t dim, std::vector<double> values);
    SampledPath(PathKind kind, std::int64_t first_index, double dt, std::size_t dim, std::vector<double> values);

    static SampledPath from_function(PathKind kind, double t_min, double t_max, double dt, std::size_t dim,
                                     const std::function<StatePoint(double)>& fn);
    static SampledPath constant(PathKind kind, double t_min, double t_max, double dt, const StatePoint& c);

    PathKind kind() const { return kind_; }
    double dt() const { return dt_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ ? values_.size() / dim_ : 0; }
    std::int64_t first_index() const { return first_; }
    std::int64_t last_index() const { return first_ + static_cast<std::int64_t>(size()) - 1; }
    double t_min() const { return static_cast<double>(first_) * dt_; }
    double t_max() const { return static_cast<double>(last_index()) * dt_; }
    double time(std::size_t i) const { return static_cast<double>(first_ + static_cast<std::int64_t>(i)) * dt_; }

    std::span<const double> node(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
    // Node at absolute lattice index k, clamped into the window.
    std::span<const double> node_at_index(std::int64_t k) const;
    const std::vector<double>& values() const { return values_; }

    StatePoint evaluate(double t) const;
    StatePoint left_limit(double t) const;
    void evaluate_into(double t, std::span<double> out) const;
    void left_limit_into(double t, std::span<double> out) const;

    bool same_grid(const SampledPath& o) const { return dt_ == o.dt_ && dim_ == o.dim_; }

    friend bool operator==(const SampledPath& a, const SampledPath& b) {
        return a.kind_ == b.kind_ && a.dt_ == b.dt_ && a.first_ == b.first_ && a.dim_ == b.dim_ &&
               a.values_ == b.values_;
    }

private:
    struct Loc {
        std::int64_t i;  // node index (relative, may be out of range)
        double frac;     // 0 when snapped to a node
        bool on_node;
    };
    Loc locate(double t) const;

    PathKind kind_ = PathKind::Continuous;
    double dt_ = 1.0;
    std::int64_t first_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

// xi in C_h (or its cadlag analogue): a path living on [-h, 0].
struct PastSegment {
    double h = 0;
    SampledPath path;

    PastSegment() = default;
    PastSegment(double h_, SampledPath p);
    double dt() const { return path.dt(); }
    std::size_t dim() const { return path.dim(); }
    StatePoint evaluate(double s) const { return path.evaluate(s); }
    static PastSegment constant(PathKind kind, double h, double dt, const StatePoint& c);
    static PastSegment from_function(PathKind kind, double h, double dt, std::size_t dim,
                                     const std::function<StatePoint(double)>& fn);
};

SampledPath shift(const SampledPath& x, double t);
SampledPath shift_steps(const SampledPath& x, std::int64_t k);
SampledPath stop(const SampledPath& x);
SampledPath stop_at(const SampledPath& x, double t);
bool is_stopped(const SampledPath& x);
SampledPath concat(const SampledPath& past, const SampledPath& future);
PastSegment past_segment(const SampledPath& x, double t, double h);
// Same path re-sampled on the window [a, b] (grid aligned); nodes outside the
// original window come from constant extrapolation.
SampledPath rewindow(const SampledPath& x, double a, double b);

// Value x(0*) used as the start of Markov futures: x(0) or x(0-).
StatePoint value_at_zero_star(const SampledPath& x);

// Sup over grid nodes in [lo, hi] of the Euclidean distance between x and y.
double sup_distance(const SampledPath& x, const SampledPath& y, double lo, double hi);

} // namespace pathsg
