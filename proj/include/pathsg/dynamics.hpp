#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pathsg/path.hpp"
#include "pathsg/report.hpp"
#include "pathsg/rng.hpp"

namespace pathsg {

inline constexpr double kBlowUp = 1e12;

// The segment y_t of a trajectory under construction, addressed relative to
// the current node, so that restarts from a realized history see identical data.
class HistoryView {
public:
    HistoryView(const double* current, std::int64_t steps, std::size_t dim, double dt, PathKind kind)
        : cur_(current), steps_(steps), dim_(dim), dt_(dt), kind_(kind) {}

    // y_t(j*dt) for j in [-steps, 0]; j is clamped into that range.
    std::span<const double> at(std::int64_t j) const {
        if (j > 0) j = 0;
        if (j < -steps_) j = -steps_;
        return {cur_ + j * static_cast<std::int64_t>(dim_), dim_};
    }
    std::span<const double> current() const { return at(0); }
    // y_t(s) for s in [-h, 0]
    void eval(double s, std::span<double> out) const;

    std::int64_t steps() const { return steps_; }
    double h() const { return static_cast<double>(steps_) * dt_; }
    double dt() const { return dt_; }
    std::size_t dim() const { return dim_; }
    PathKind kind() const { return kind_; }
    PastSegment segment() const;

private:
    const double* cur_;
    std::int64_t steps_;
    std::size_t dim_;
    double dt_;
    PathKind kind_;
};

struct DriftSpec {
    enum class Kind { Pointwise, History, DiscreteDelay };
    using PointFn = std::function<void(std::span<const double>, std::span<double>)>;
    using HistFn = std::function<void(const HistoryView&, std::span<double>)>;

    Kind kind = Kind::Pointwise;
    std::size_t dim = 1;
    double h = 0;  // history length read by b (the delay for DiscreteDelay)
    double lipschitz = 0;
    PointFn point;
    HistFn hist;

    static DriftSpec pointwise(std::size_t dim, PointFn fn, double lipschitz);
    static DriftSpec history(std::size_t dim, double h, HistFn fn, double lipschitz);
    // b(y(t - delay)).
    static DriftSpec discrete_delay(std::size_t dim, PointFn fn, double lipschitz, double delay = 1.0);
    static DriftSpec zero(std::size_t dim);

    void eval(const HistoryView& v, std::span<double> out) const;
};

struct DiffusionSpec {
    enum class Kind { None, Pointwise, History };
    // out is d x m, row-major
    using PointFn = std::function<void(std::span<const double>, std::span<double>)>;
    using HistFn = std::function<void(const HistoryView&, std::span<double>)>;

    Kind kind = Kind::None;
    std::size_t dim = 1, m = 1;
    double h = 0;
    PointFn point;
    HistFn hist;

    static DiffusionSpec none(std::size_t dim);
    static DiffusionSpec pointwise(std::size_t dim, std::size_t m, PointFn fn);
    static DiffusionSpec history(std::size_t dim, std::size_t m, double h, HistFn fn);
    static DiffusionSpec constant(std::size_t dim, std::size_t m, std::vector<double> matrix);

    void eval(const HistoryView& v, std::span<double> out) const;
};

// Largest |b(x)-b(y)| / |x-y| over random probe pairs (sup norm on segments for History).
double estimate_lipschitz(const DriftSpec& b, std::uint64_t seed, int n_probes = 400);
// Throws InvalidArgument when the estimate exceeds 1.1 times the declared constant.
void validate_lipschitz(const DriftSpec& b, std::uint64_t seed = 1, int n_probes = 400);
// max over probes of ||sigma^{-1}||_2; infinity when d != m or sigma is singular somewhere.
double sigma_inverse_bound(const DiffusionSpec& s, std::uint64_t seed, int n_probes = 200);

struct DdeOptions {
    int picard = 2;
};

SampledPath solve_dde(const DriftSpec& b, const PastSegment& xi, double T, double dt, DdeOptions opt = {});
// phi(x): the past of x, then the solution from the segment of stop(x) on [-h, 0].
SampledPath evolution_map_dde(const DriftSpec& b, const SampledPath& x, double T, DdeOptions opt = {});

using EvolutionMap = std::function<SampledPath(const SampledPath&)>;
CheckReport check_evolution_map(const EvolutionMap& phi, std::span<const SampledPath> samples,
                                std::span<const double> t_list, double tol);

// Noise draws for step k come from stream.normals(step_offset + k, m).
struct NoiseRef {
    NoiseStream stream;
    std::uint64_t step_offset = 0;
};

SampledPath simulate_sde(const DriftSpec& b, const DiffusionSpec& sigma, const StatePoint& y0, double T, double dt,
                         const NoiseRef& noise);
SampledPath simulate_sde(const DriftSpec& b, const DiffusionSpec& sigma, const StatePoint& y0, double T, double dt,
                         std::uint64_t seed);
SampledPath simulate_sdde(const DriftSpec& b, const DiffusionSpec& sigma, const PastSegment& xi, double T, double dt,
                          const NoiseRef& noise);
SampledPath simulate_sdde(const DriftSpec& b, const DiffusionSpec& sigma, const PastSegment& xi, double T, double dt,
                          std::uint64_t seed);

struct JumpLaw {
    enum class Kind { Fixed, Gaussian };
    Kind kind = Kind::Fixed;
    std::vector<double> mean;  // the jump for Fixed
    double sd = 0;
    static JumpLaw fixed(std::vector<double> v) { return {Kind::Fixed, std::move(v), 0}; }
    static JumpLaw gaussian(std::vector<double> mean, double sd) { return {Kind::Gaussian, std::move(mean), sd}; }
};

struct LevySpec {
    std::vector<double> drift;
    std::vector<double> cov;  // d x d, PSD
    double jump_rate = 0;
    JumpLaw jumps;
    std::size_t dim() const { return drift.size(); }
};

// omega = offset + rel. Flows only read increments of rel, so adding a
// constant and shifting in time leave them bit-identical.
struct NoisePath {
    SampledPath rel;
    StatePoint offset;
    std::vector<std::int64_t> jump_nodes;  // lattice indices of rel where a jump was placed

    NoisePath() = default;
    explicit NoisePath(SampledPath r, StatePoint off = {}, std::vector<std::int64_t> jumps = {});
    StatePoint value(double t) const;
    SampledPath path() const;
    double horizon() const { return rel.t_max(); }
    NoisePath plus(const StatePoint& c) const;
    bool jumps_at(double t) const;
};
// theta_t omega
NoisePath shift_noise(const NoisePath& w, double t);

NoisePath sample_levy(const LevySpec& spec, double T, double dt, std::uint64_t seed, std::uint64_t trajectory = 0);

// Solution of y = x(0-) + int_0^t b(y_s) ds + omega(t) - omega(0) on [0, horizon(omega)],
// returned with the kind of x so that x(0-) keeps its meaning.
SampledPath levy_delay_flow(const DriftSpec& b, const NoisePath& omega, const SampledPath& x);

using RandomEvolutionMap = std::function<SampledPath(const NoisePath&, const SampledPath&)>;
// Condition (v) is skipped at times where omega has a recorded jump (see README).
CheckReport check_random_evolution_map(const RandomEvolutionMap& phi, std::span<const NoisePath> omegas,
                                       std::span<const SampledPath> paths, std::span<const double> t_list,
                                       std::span<const StatePoint> c_list, double tol);

// Largest node distance over [lo, hi] and the time where it occurs.
std::pair<double, double> sup_diff(const SampledPath& x, const SampledPath& y, double lo, double hi);

} // namespace pathsg
