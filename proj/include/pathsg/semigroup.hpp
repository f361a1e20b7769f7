#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pathsg/dynamics.hpp"
#include "pathsg/observable.hpp"
#include "pathsg/path.hpp"
#include "pathsg/report.hpp"

namespace pathsg {

struct MCBudget {
    std::size_t n_paths = 1000;
    std::uint64_t seed = 1;
    double dt = 1e-2;
    double horizon = 1.0;
};

// Law of the future given the past. Deterministic uses the evolution map of
// a DDE (one path); Markov an SDE started at x(0*); Delay an SDDE started
// from the segment of stop(x); LevyFlow the delay flow driven by Levy noise.
struct ExpectationSpec {
    enum class Kind { Deterministic, Markov, Delay, LevyFlow };
    Kind kind = Kind::Deterministic;
    DriftSpec drift;
    DiffusionSpec diffusion;
    LevySpec levy;
    DdeOptions dde;
    MCBudget mc;

    static ExpectationSpec deterministic(DriftSpec b, MCBudget mc, DdeOptions opt = {});
    static ExpectationSpec markov(DriftSpec b, DiffusionSpec sigma, MCBudget mc);
    static ExpectationSpec delay(DriftSpec b, DiffusionSpec sigma, MCBudget mc);
    static ExpectationSpec levy_flow(DriftSpec b, LevySpec noise, MCBudget mc);

    // history length read when restarting (grid multiple, at least one step)
    double h() const;
    std::size_t n_paths() const { return kind == Kind::Deterministic ? 1 : mc.n_paths; }
    ExpectationSpec with_budget(std::size_t n, std::uint64_t seed) const;
};

struct MCEstimate {
    double mean = 0;
    double se = 0;
    std::size_t n = 0;  // 0 when computed without sampling
    std::uint64_t seed = 0;
};

MCEstimate summarize(std::span<const double> v, std::uint64_t seed);

// stop(x) glued to one future of trajectory i, simulated up to time T.
SampledPath sample_path(const ExpectationSpec& spec, const SampledPath& x, std::size_t trajectory, double T);

// values[j][i]: observable j on trajectory i. All observables share the trajectories.
std::vector<std::vector<double>> sample_values(const ExpectationSpec& spec, std::span<const Observable> Fs,
                                               const SampledPath& x);

MCEstimate expectation(const ExpectationSpec& spec, const Observable& F, const SampledPath& x);
// E_t F(x) = E(Theta_{-t} F)(theta_t x)
MCEstimate conditional_expectation(const ExpectationSpec& spec, const Observable& F, const SampledPath& x, double t);
// T(t)F(x) = E(Theta_t F)(x), F past-determined
MCEstimate semigroup_apply(const ExpectationSpec& spec, double t, const Observable& F, const SampledPath& x);

CheckReport check_expectation_axioms(const ExpectationSpec& spec, std::span<const Observable> Fs,
                                     std::span<const SampledPath> paths, double tol);

struct NestedBudget {
    std::size_t n_outer = 200;
    std::size_t n_inner = 500;
};

// E E_t F(x) against E F(x).
CheckReport check_homogeneity(const ExpectationSpec& spec, const Observable& F, const SampledPath& x, double t,
                              double z_tol = 4.0, NestedBudget nb = {});
// T(t)T(s)F(x) against T(t+s)F(x).
CheckReport check_semigroup_law(const ExpectationSpec& spec, const Observable& F, const SampledPath& x, double s,
                                double t, double z_tol = 4.0, NestedBudget nb = {});

// T(t)F_{0*}(f) at two paths sharing x(0*). For Markov the item passes when the
// difference is at most tol; otherwise it passes when the difference exceeds
// tol by four standard errors.
CheckReport check_markov_reduction(const ExpectationSpec& spec, const TestFunction& f, double t,
                                   const SampledPath& x1, const SampledPath& x2, double tol);

// T(t)f(x0) through the constant path at x0.
MCEstimate induced_state_semigroup(const ExpectationSpec& spec, const TestFunction& f, double t, const StatePoint& x0);

struct GeneratorRow {
    double t = 0;
    double quotient = 0;
    double se = 0;
};
std::vector<GeneratorRow> generator_probe(const ExpectationSpec& spec, const Observable& F, const SampledPath& x,
                                          std::span<const double> t_list);
// Linear extrapolation to t = 0 through the two rows with smallest t.
double richardson(std::span<const GeneratorRow> rows);

// Forward difference of u = int over the n-simplex of T(s1)f1 ... against the
// two-term image. f_list has n = 1 or 2 entries.
CheckReport simplex_generator_check(const ExpectationSpec& spec, std::span<const TestFunction> f_list, double a,
                                    double b, const SampledPath& x, double dt_fd, double tol);

// |T(t)F(x1) - T(t)F(x2)| for paths agreeing on [-h, 0].
CheckReport check_finite_delay_invariance(const ExpectationSpec& spec, const Observable& F, double t,
                                          const SampledPath& x1, const SampledPath& x2, double tol);

// E(FG) - EF EG. The item passes when the kernel looks multiplicative:
// |difference| <= tol, or |z| < 4 when the difference has a standard error.
CheckReport check_multiplicativity(const ExpectationSpec& spec, const Observable& F, const Observable& G,
                                   const SampledPath& x, double tol);

} // namespace pathsg
