#include "pathsg/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pathsg/errors.hpp"
#include "pathsg/parallel.hpp"

namespace pathsg {

namespace {

void need(bool ok, Errc c, const std::string& msg) {
    if (!ok) throw PathError(c, msg);
}

// Trajectory seeds for nested estimators; the tags keep the outer and inner
// families apart from the flat estimate.
constexpr std::uint64_t kOuterTag = 0x6f75746572ULL;
constexpr std::uint64_t kInnerTag = 0x696e6e6572ULL;

double sim_horizon(const ExpectationSpec& spec, std::span<const Observable> Fs) {
    const double dt = spec.mc.dt;
    double need_t = dt;
    for (const auto& F : Fs) {
        const Window& w = F.window();
        if (w.empty) continue;
        need(w.hi.t <= spec.mc.horizon + kGridTol * std::max(1.0, spec.mc.horizon), Errc::HorizonExceeded,
             "observable reads the path beyond the simulation horizon");
        need_t = std::max(need_t, w.hi.t);
    }
    // round up to the grid, then cap at the horizon
    const double T = std::ceil(need_t / dt - kGridTol) * dt;
    return std::min(T, std::ceil(spec.mc.horizon / dt - kGridTol) * dt);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t i) {
    return derive_seed(derive_seed(seed, tag), i);
}

} // namespace

ExpectationSpec ExpectationSpec::deterministic(DriftSpec b, MCBudget mc, DdeOptions opt) {
    ExpectationSpec s;
    s.kind = Kind::Deterministic;
    s.diffusion = DiffusionSpec::none(b.dim);
    s.drift = std::move(b);
    s.mc = mc;
    s.dde = opt;
    return s;
}

ExpectationSpec ExpectationSpec::markov(DriftSpec b, DiffusionSpec sigma, MCBudget mc) {
    need(b.kind == DriftSpec::Kind::Pointwise, Errc::KindMismatch, "Markov kind needs a pointwise drift");
    need(sigma.kind != DiffusionSpec::Kind::History, Errc::KindMismatch, "Markov kind needs a pointwise diffusion");
    ExpectationSpec s;
    s.kind = Kind::Markov;
    s.drift = std::move(b);
    s.diffusion = std::move(sigma);
    s.mc = mc;
    return s;
}

ExpectationSpec ExpectationSpec::delay(DriftSpec b, DiffusionSpec sigma, MCBudget mc) {
    ExpectationSpec s;
    s.kind = Kind::Delay;
    s.drift = std::move(b);
    s.diffusion = std::move(sigma);
    s.mc = mc;
    return s;
}

ExpectationSpec ExpectationSpec::levy_flow(DriftSpec b, LevySpec noise, MCBudget mc) {
    need(noise.dim() == b.dim, Errc::DimensionMismatch, "noise and drift dimensions differ");
    ExpectationSpec s;
    s.kind = Kind::LevyFlow;
    s.diffusion = DiffusionSpec::none(b.dim);
    s.drift = std::move(b);
    s.levy = std::move(noise);
    s.mc = mc;
    return s;
}

double ExpectationSpec::h() const {
    const double dt = mc.dt;
    double h = drift.h;
    if (diffusion.kind != DiffusionSpec::Kind::None) h = std::max(h, diffusion.h);
    const double steps = std::max(1.0, std::ceil(h / dt - kGridTol));
    return steps * dt;
}

ExpectationSpec ExpectationSpec::with_budget(std::size_t n, std::uint64_t seed) const {
    ExpectationSpec s = *this;
    s.mc.n_paths = n;
    s.mc.seed = seed;
    return s;
}

MCEstimate summarize(std::span<const double> v, std::uint64_t seed) {
    MCEstimate e;
    e.n = v.size();
    e.seed = seed;
    if (v.empty()) return e;
    double s = 0;
    for (double a : v) s += a;
    e.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double q = 0;
        for (double a : v) q += (a - e.mean) * (a - e.mean);
        e.se = std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return e;
}

SampledPath sample_path(const ExpectationSpec& spec, const SampledPath& x, std::size_t trajectory, double T) {
    const double dt = spec.mc.dt;
    need(std::abs(x.dt() - dt) <= kGridTol * dt, Errc::GridMismatch, "path step differs from the spec step");
    need(x.dim() == spec.drift.dim, Errc::DimensionMismatch, "path dimension differs from the drift");
    switch (spec.kind) {
    case ExpectationSpec::Kind::Deterministic:
        return evolution_map_dde(spec.drift, x, T, spec.dde);
    case ExpectationSpec::Kind::Markov: {
        const SampledPath s = stop(x);
        const NoiseRef noise{NoiseStream(spec.mc.seed, trajectory), 0};
        return concat(s, simulate_sde(spec.drift, spec.diffusion, value_at_zero_star(x), T, dt, noise));
    }
    case ExpectationSpec::Kind::Delay: {
        const SampledPath s = stop(x);
        const NoiseRef noise{NoiseStream(spec.mc.seed, trajectory), 0};
        return concat(s, simulate_sdde(spec.drift, spec.diffusion, past_segment(s, 0.0, spec.h()), T, dt, noise));
    }
    case ExpectationSpec::Kind::LevyFlow:
        return levy_delay_flow(spec.drift, sample_levy(spec.levy, T, dt, spec.mc.seed, trajectory), x);
    }
    throw PathError(Errc::InvalidArgument, "unknown expectation kind");
}

std::vector<std::vector<double>> sample_values(const ExpectationSpec& spec, std::span<const Observable> Fs,
                                               const SampledPath& x) {
    const double T = sim_horizon(spec, Fs);
    const std::size_t n = spec.n_paths();
    need(n > 0, Errc::InvalidArgument, "n_paths must be positive");
    std::vector<std::vector<double>> out(Fs.size(), std::vector<double>(n));
    parallel_for(n, [&](std::size_t i) {
        const SampledPath y = sample_path(spec, x, i, T);
        for (std::size_t j = 0; j < Fs.size(); ++j) out[j][i] = apply(Fs[j], y);
    });
    return out;
}

MCEstimate expectation(const ExpectationSpec& spec, const Observable& F, const SampledPath& x) {
    if (past_determined(F)) {
        sim_horizon(spec, {&F, 1});
        return {apply(F, x), 0.0, 0, spec.mc.seed};
    }
    if (F.kind() == Observable::Kind::Scale) {
        MCEstimate e = expectation(spec, F.children().front(), x);
        e.mean = F.c() * e.mean;
        e.se = std::abs(F.c()) * e.se;
        return e;
    }
    if (F.kind() == Observable::Kind::Product) {
        // past-determined factors are known given the past and come out of the expectation
        std::vector<Observable> known, rest;
        for (const auto& g : F.children()) (past_determined(g) ? known : rest).push_back(g);
        if (!known.empty()) {
            const double p = apply(Observable::product(known), x);
            MCEstimate e = expectation(spec, rest.size() == 1 ? rest.front() : Observable::product(rest), x);
            e.mean = p * e.mean;
            e.se = std::abs(p) * e.se;
            return e;
        }
    }
    const auto v = sample_values(spec, {&F, 1}, x);
    return summarize(v.front(), spec.mc.seed);
}

MCEstimate conditional_expectation(const ExpectationSpec& spec, const Observable& F, const SampledPath& x, double t) {
    need(t >= 0, Errc::InvalidArgument, "conditioning time must be >= 0");
    const double dt = spec.mc.dt;
    return expectation(spec, shift_obs(F, -t, dt), shift(x, t));
}

MCEstimate semigroup_apply(const ExpectationSpec& spec, double t, const Observable& F, const SampledPath& x) {
    need(t >= 0, Errc::InvalidArgument, "semigroup time must be >= 0");
    need(past_determined(F), Errc::NotPastDetermined, "T(t) acts on past-determined observables");
    return expectation(spec, shift_obs(F, t, spec.mc.dt), x);
}

CheckReport check_expectation_axioms(const ExpectationSpec& spec, std::span<const Observable> Fs,
                                     std::span<const SampledPath> paths, double tol) {
    CheckReport r{"expectation_axioms", {}};
    need(!paths.empty(), Errc::InvalidArgument, "no paths given");
    const std::size_t d = spec.drift.dim;
    // a past factor that is always present, so (B) and (C) never run empty
    std::vector<double> ones(d, 1.0);
    const Observable P = Observable::left_lim(TestFunction::cosine(ones), 0.0);
    std::vector<Observable> past{P};
    for (const auto& F : Fs)
        if (past_determined(F)) past.push_back(F);

    double a = 0, b = 0, c = 0, dd = 0;
    std::optional<double> a_at, c_at;
    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
        const SampledPath& x = paths[pi];
        const SampledPath sx = stop(x);
        for (const auto& F : Fs) {
            const double diff = std::abs(expectation(spec, F, x).mean - expectation(spec, F, sx).mean);
            if (diff > a || std::isnan(diff)) {
                a = std::isnan(diff) ? INFINITY : diff;
                a_at = static_cast<double>(pi);
            }
        }
        for (const auto& F : past) b = std::max(b, std::abs(expectation(spec, F, x).mean - apply(F, x)));
        for (const auto& F : past)
            for (const auto& G : Fs) {
                const double lhs = expectation(spec, F * G, x).mean;
                const double rhs = apply(F, x) * expectation(spec, G, x).mean;
                const double diff = std::abs(lhs - rhs);
                if (diff > c || std::isnan(diff)) {
                    c = std::isnan(diff) ? INFINITY : diff;
                    c_at = static_cast<double>(pi);
                }
            }
        const MCEstimate one = expectation(spec, Observable::constant(1.0), x);
        dd = std::max(dd, std::abs(one.mean - 1.0) + one.se);
    }
    r.items.push_back(residual_item("stop_invariance", a, tol));
    if (a_at) r.items.back().note = "worst path index " + std::to_string(static_cast<int>(*a_at));
    r.items.push_back(residual_item("projection", b, tol));
    r.items.push_back(residual_item("locality", c, tol));
    if (c_at) r.items.back().note = "worst path index " + std::to_string(static_cast<int>(*c_at));
    r.items.push_back(residual_item("normalization", dd, tol));
    return r;
}

namespace {

// Relative difference item for the deterministic kind, where nesting is exact up to rounding.
CheckItem relative_item(std::string name, double nested, double flat, double rel_tol) {
    CheckItem c = residual_item(std::move(name), std::abs(nested - flat) / std::max(1.0, std::abs(flat)), rel_tol);
    c.note = "relative difference";
    return c;
}

CheckItem nested_item(const MCEstimate& nested, const MCEstimate& flat, double z_tol) {
    CheckItem c = z_item("difference", nested.mean - flat.mean, std::hypot(nested.se, flat.se), z_tol);
    c.note = "nested " + std::to_string(nested.mean) + ", flat " + std::to_string(flat.mean);
    return c;
}

// Outer trajectories realized up to time t, each mapped to an inner estimate.
template <class Inner>
MCEstimate nested_estimate(const ExpectationSpec& spec, const SampledPath& x, double t, NestedBudget nb, Inner inner) {
    const double dt = spec.mc.dt;
    const double T = std::max(dt, std::ceil(t / dt - kGridTol) * dt);
    const ExpectationSpec outer = spec.with_budget(nb.n_outer, derive_seed(spec.mc.seed, kOuterTag));
    std::vector<double> v(nb.n_outer);
    // inner estimates already run in parallel; keep the outer loop serial
    for (std::size_t i = 0; i < nb.n_outer; ++i) {
        const SampledPath y = sample_path(outer, x, i, T);
        const ExpectationSpec in = spec.with_budget(nb.n_inner, sub_seed(spec.mc.seed, kInnerTag, i));
        v[i] = inner(in, y).mean;
    }
    return summarize(v, outer.mc.seed);
}

} // namespace

CheckReport check_homogeneity(const ExpectationSpec& spec, const Observable& F, const SampledPath& x, double t,
                              double z_tol, NestedBudget nb) {
    need(t >= 0, Errc::InvalidArgument, "t must be >= 0");
    CheckReport r{"homogeneity", {}};
    const MCEstimate flat = expectation(spec, F, x);
    auto inner = [&](const ExpectationSpec& in, const SampledPath& y) { return conditional_expectation(in, F, y, t); };
    if (spec.kind == ExpectationSpec::Kind::Deterministic) {
        const double dt = spec.mc.dt;
        const SampledPath y = sample_path(spec, x, 0, std::max(dt, std::ceil(t / dt - kGridTol) * dt));
        r.items.push_back(relative_item("difference", inner(spec, y).mean, flat.mean, 1e-12));
        return r;
    }
    r.items.push_back(nested_item(nested_estimate(spec, x, t, nb, inner), flat, z_tol));
    return r;
}

CheckReport check_semigroup_law(const ExpectationSpec& spec, const Observable& F, const SampledPath& x, double s,
                                double t, double z_tol, NestedBudget nb) {
    need(s >= 0 && t >= 0, Errc::InvalidArgument, "s and t must be >= 0");
    need(past_determined(F), Errc::NotPastDetermined, "T(t) acts on past-determined observables");
    CheckReport r{"semigroup_law", {}};
    const MCEstimate flat = semigroup_apply(spec, t + s, F, x);
    if (s == 0 || t == 0) {
        // T(0) is the identity on the nose
        r.items.push_back(residual_item("difference", 0.0, 0.0));
        r.items.back().note = "T(0) = I";
        return r;
    }
    auto inner = [&](const ExpectationSpec& in, const SampledPath& y) {
        return semigroup_apply(in, s, F, shift(y, t));
    };
    if (spec.kind == ExpectationSpec::Kind::Deterministic) {
        const double dt = spec.mc.dt;
        const SampledPath y = sample_path(spec, x, 0, std::ceil(t / dt - kGridTol) * dt);
        r.items.push_back(relative_item("difference", inner(spec, y).mean, flat.mean, 1e-12));
        return r;
    }
    r.items.push_back(nested_item(nested_estimate(spec, x, t, nb, inner), flat, z_tol));
    return r;
}

namespace {

// Paired estimates of two observables on the same trajectories.
struct Paired {
    MCEstimate a, b, diff;
};

Paired paired(const ExpectationSpec& spec, const Observable& A, const Observable& B, const SampledPath& xa,
              const SampledPath& xb) {
    Paired p;
    if (&xa == &xb) {
        const std::vector<Observable> Fs{A, B};
        const auto v = sample_values(spec, Fs, xa);
        std::vector<double> d(v[0].size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = v[0][i] - v[1][i];
        p.a = summarize(v[0], spec.mc.seed);
        p.b = summarize(v[1], spec.mc.seed);
        p.diff = summarize(d, spec.mc.seed);
        return p;
    }
    const auto va = sample_values(spec, {&A, 1}, xa);
    const auto vb = sample_values(spec, {&B, 1}, xb);
    std::vector<double> d(va[0].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[0][i] - vb[0][i];
    p.a = summarize(va[0], spec.mc.seed);
    p.b = summarize(vb[0], spec.mc.seed);
    p.diff = summarize(d, spec.mc.seed);
    return p;
}

} // namespace

CheckReport check_markov_reduction(const ExpectationSpec& spec, const TestFunction& f, double t,
                                   const SampledPath& x1, const SampledPath& x2, double tol) {
    need(value_at_zero_star(x1) == value_at_zero_star(x2), Errc::PathsDisagreeAtZero,
         "the two paths differ at 0*");
    CheckReport r{"markov_reduction", {}};
    const Observable F = Observable::left_lim(f, 0.0);
    const Observable G = shift_obs(F, t, spec.mc.dt);
    CheckItem c;
    c.name = "difference";
    c.tolerance = tol;
    if (past_determined(G)) {
        c.value = std::abs(apply(G, x1) - apply(G, x2));
    } else {
        const Paired p = paired(spec, G, G, x1, x2);
        c.value = std::abs(p.diff.mean);
        c.se = p.diff.se;
        c.note = "T(t)F at x1 " + std::to_string(p.a.mean) + ", at x2 " + std::to_string(p.b.mean);
    }
    c.z = c.se > 0 ? c.value / c.se : 0.0;
    if (spec.kind == ExpectationSpec::Kind::Markov) {
        c.pass = c.value <= tol;
    } else {
        c.pass = c.value - 4.0 * c.se > tol;
        c.note += c.note.empty() ? "" : "; ";
        c.note += "passes when the difference is detected above tolerance";
    }
    r.items.push_back(std::move(c));
    return r;
}

MCEstimate induced_state_semigroup(const ExpectationSpec& spec, const TestFunction& f, double t, const StatePoint& x0) {
    need(spec.kind == ExpectationSpec::Kind::Markov, Errc::KindMismatch, "induced state semigroup needs the Markov kind");
    const double dt = spec.mc.dt;
    const SampledPath iota = SampledPath::constant(PathKind::Continuous, -dt, 0.0, dt, x0);
    return semigroup_apply(spec, t, Observable::left_lim(f, 0.0), iota);
}

std::vector<GeneratorRow> generator_probe(const ExpectationSpec& spec, const Observable& F, const SampledPath& x,
                                          std::span<const double> t_list) {
    need(past_determined(F), Errc::NotPastDetermined, "the generator acts on past-determined observables");
    const double F0 = apply(F, x);
    std::vector<GeneratorRow> rows;
    for (double t : t_list) {
        need(t > 0, Errc::InvalidArgument, "generator probe times must be > 0");
        const MCEstimate e = semigroup_apply(spec, t, F, x);
        rows.push_back({t, (e.mean - F0) / t, e.se / t});
    }
    return rows;
}

double richardson(std::span<const GeneratorRow> rows) {
    need(rows.size() >= 2, Errc::InvalidArgument, "richardson needs two rows");
    std::vector<GeneratorRow> r(rows.begin(), rows.end());
    std::sort(r.begin(), r.end(), [](const auto& p, const auto& q) { return p.t < q.t; });
    const auto &p = r[0], &q = r[1];
    return (q.t * p.quotient - p.t * q.quotient) / (q.t - p.t);
}

namespace {

// int over a <= s1 <= s2 <= b of f1(y(s1)) f2(y(s2)), trapezoid on the grid
Observable simplex2(const TestFunction& f1, const TestFunction& f2, double a, double b, double dt) {
    const std::int64_t k0 = grid_steps(a, dt), k1 = grid_steps(b, dt);
    auto fn = [f1, f2, k0, k1, dt](const SampledPath& y) {
        double c = 0, u = 0;
        double p1 = f1(y.evaluate(static_cast<double>(k0) * dt));
        double pw = 0;  // f2 * c at the previous node, c = 0 at a
        for (std::int64_t k = k0 + 1; k <= k1; ++k) {
            const StatePoint v = y.evaluate(static_cast<double>(k) * dt);
            const double q1 = f1(v);
            c += 0.5 * dt * (p1 + q1);
            const double w = f2(v) * c;
            u += 0.5 * dt * (pw + w);
            p1 = q1;
            pw = w;
        }
        return u;
    };
    const double len = b - a;
    return Observable::user(fn, f1.bound() * f2.bound() * len * len / 2, Window::closed(a, b));
}

} // namespace

CheckReport simplex_generator_check(const ExpectationSpec& spec, std::span<const TestFunction> f_list, double a,
                                    double b, const SampledPath& x, double dt_fd, double tol) {
    need(f_list.size() == 1 || f_list.size() == 2, Errc::UnsupportedOrder, "simplex order must be 1 or 2");
    need(0 <= a && a < b, Errc::InvalidArgument, "need 0 <= a < b");
    const double dt = spec.mc.dt;
    need(on_grid(a, dt) && on_grid(b, dt) && on_grid(dt_fd, dt) && dt_fd > 0, Errc::NonGridShift,
         "a, b and dt_fd must be grid multiples");
    CheckReport r{"simplex_generator", {}};
    Observable U, image;
    if (f_list.size() == 1) {
        const auto& f = f_list[0];
        U = Observable::integral(f, a, b);
        image = Observable::eval(f, b) - Observable::eval(f, a);
    } else {
        const auto &f1 = f_list[0], &f2 = f_list[1];
        U = simplex2(f1, f2, a, b, dt);
        image = Observable::integral(f1, a, b) * Observable::eval(f2, b) -
                Observable::eval(f1, a) * Observable::integral(f2, a, b);
    }
    const Observable quotient = Observable::scale(1.0 / dt_fd, shift_obs(U, dt_fd, dt) - U);
    const Paired p = paired(spec, quotient, image, x, x);
    CheckItem q;
    q.name = "quotient";
    q.value = p.a.mean;
    q.se = p.a.se;
    r.items.push_back(q);
    CheckItem im;
    im.name = "image";
    im.value = p.b.mean;
    im.se = p.b.se;
    r.items.push_back(im);
    CheckItem d;
    d.name = "difference";
    d.value = p.diff.mean;
    d.se = p.diff.se;
    d.z = d.se > 0 ? d.value / d.se : 0.0;
    d.tolerance = tol;
    d.pass = std::abs(d.value) <= 4.0 * d.se + tol;
    d.note = "passes when |difference| <= 4 se + tol";
    r.items.push_back(d);
    return r;
}

CheckReport check_finite_delay_invariance(const ExpectationSpec& spec, const Observable& F, double t,
                                          const SampledPath& x1, const SampledPath& x2, double tol) {
    CheckReport r{"finite_delay_invariance", {}};
    const double h = spec.h();
    const bool in_scope = depends_only_on(F, Window{false, {-h, 0}, {0, -1}});
    const double agree = sup_diff(x1, x2, -h, 0.0).first;
    const double v = std::abs(semigroup_apply(spec, t, F, x1).mean - semigroup_apply(spec, t, F, x2).mean);
    CheckItem c = residual_item("difference", v, tol);
    if (!in_scope || agree > 0) {
        c.pass = true;
        c.note = !in_scope ? "F reads outside [-h, 0); not asserted" : "paths differ on [-h, 0]; not asserted";
    }
    r.items.push_back(std::move(c));
    return r;
}

CheckReport check_multiplicativity(const ExpectationSpec& spec, const Observable& F, const Observable& G,
                                   const SampledPath& x, double tol) {
    CheckReport r{"multiplicativity", {}};
    const double efg = expectation(spec, F * G, x).mean;
    const double ef = expectation(spec, F, x).mean;
    const double eg = expectation(spec, G, x).mean;
    CheckItem c;
    c.name = "covariance";
    c.value = efg - ef * eg;
    c.tolerance = tol;
    if (!past_determined(F) && !past_determined(G) && spec.n_paths() > 1) {
        const std::vector<Observable> Fs{F, G};
        const auto v = sample_values(spec, Fs, x);
        const MCEstimate mf = summarize(v[0], 0), mg = summarize(v[1], 0);
        std::vector<double> prod(v[0].size());
        for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = (v[0][i] - mf.mean) * (v[1][i] - mg.mean);
        c.se = summarize(prod, 0).se;
    }
    c.z = c.se > 0 ? c.value / c.se : 0.0;
    c.pass = std::abs(c.value) <= tol || (c.se > 0 && std::abs(*c.z) < 4.0);
    r.items.push_back(std::move(c));
    return r;
}

} // namespace pathsg
