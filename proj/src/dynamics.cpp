#include "pathsg/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pathsg/errors.hpp"

namespace pathsg {

namespace {

double snap(double u) {
    const double r = std::nearbyint(u);
    return std::abs(u - r) <= kGridTol ? r : u;
}

std::int64_t lag_steps(double h, double dt) { return h > 0 ? grid_steps(h, dt) : 0; }

struct Engine {
    const DriftSpec& b;
    const DiffusionSpec* sigma = nullptr;
    const NoiseRef* noise = nullptr;
    const SampledPath* increments = nullptr;  // additive noise: nodes of rel
    int picard = 0;
};

// buf holds H+1 nodes for times -H..0 (relative); appends N Euler steps.
void integrate(std::vector<double>& buf, std::int64_t H, std::int64_t N, std::size_t d, double dt, PathKind kind,
               const Engine& e) {
    buf.resize(static_cast<std::size_t>(H + 1 + N) * d);
    const std::size_t m = e.sigma ? e.sigma->m : 0;
    std::vector<double> bv(d), S(d * m), dB(m);
    const double sq = std::sqrt(dt);
    for (std::int64_t k = 0; k < N; ++k) {
        double* cur = buf.data() + static_cast<std::size_t>(H + k) * d;
        double* nx = cur + d;
        const HistoryView v(cur, H, d, dt, kind);
        e.b.eval(v, bv);
        for (std::size_t i = 0; i < d; ++i) nx[i] = cur[i] + dt * bv[i];
        if (e.sigma) {
            e.sigma->eval(v, S);
            e.noise->stream.normals(e.noise->step_offset + static_cast<std::uint64_t>(k), dB);
            for (auto& z : dB) z *= sq;
            for (std::size_t i = 0; i < d; ++i) {
                double acc = 0;
                for (std::size_t j = 0; j < m; ++j) acc += S[i * m + j] * dB[j];
                nx[i] += acc;
            }
        }
        if (e.increments) {
            auto p = e.increments->node_at_index(k + 1), q = e.increments->node_at_index(k);
            for (std::size_t i = 0; i < d; ++i) nx[i] += p[i] - q[i];
        }
        for (int it = 0; it < e.picard; ++it) {
            e.b.eval(HistoryView(nx, H + 1, d, dt, kind), bv);
            for (std::size_t i = 0; i < d; ++i) nx[i] = cur[i] + dt * bv[i];
        }
        for (std::size_t i = 0; i < d; ++i)
            if (!std::isfinite(nx[i]) || std::abs(nx[i]) > kBlowUp)
                throw PathError(Errc::NonFiniteState, "state left the finite range at t = " +
                                                          std::to_string(static_cast<double>(k + 1) * dt));
    }
}

void need(bool ok, Errc c, const char* msg) {
    if (!ok) throw PathError(c, msg);
}

} // namespace

// ---------------------------------------------------------------- views, specs

void HistoryView::eval(double s, std::span<double> out) const {
    const double u = snap(s / dt_);
    const double j0 = std::floor(u);
    auto p = at(static_cast<std::int64_t>(j0));
    if (u == j0 || kind_ == PathKind::Cadlag) {
        std::copy(p.begin(), p.end(), out.begin());
        return;
    }
    auto q = at(static_cast<std::int64_t>(j0) + 1);
    const double w = u - j0;
    for (std::size_t i = 0; i < dim_; ++i) out[i] = p[i] + w * (q[i] - p[i]);
}

PastSegment HistoryView::segment() const {
    need(steps_ >= 1, Errc::InvalidArgument, "segment needs at least one step of history");
    std::vector<double> v(cur_ - steps_ * static_cast<std::int64_t>(dim_), cur_ + dim_);
    return PastSegment(h(), SampledPath(kind_, -steps_, dt_, dim_, std::move(v)));
}

DriftSpec DriftSpec::pointwise(std::size_t dim, PointFn fn, double lipschitz) {
    DriftSpec b;
    b.kind = Kind::Pointwise;
    b.dim = dim;
    b.point = std::move(fn);
    b.lipschitz = lipschitz;
    return b;
}

DriftSpec DriftSpec::history(std::size_t dim, double h, HistFn fn, double lipschitz) {
    need(h > 0, Errc::InvalidArgument, "history drift needs h > 0");
    DriftSpec b;
    b.kind = Kind::History;
    b.dim = dim;
    b.h = h;
    b.hist = std::move(fn);
    b.lipschitz = lipschitz;
    return b;
}

DriftSpec DriftSpec::discrete_delay(std::size_t dim, PointFn fn, double lipschitz, double delay) {
    need(delay > 0, Errc::InvalidArgument, "delay must be positive");
    DriftSpec b;
    b.kind = Kind::DiscreteDelay;
    b.dim = dim;
    b.h = delay;
    b.point = std::move(fn);
    b.lipschitz = lipschitz;
    return b;
}

DriftSpec DriftSpec::zero(std::size_t dim) {
    return pointwise(dim, [](std::span<const double>, std::span<double> o) { std::fill(o.begin(), o.end(), 0.0); },
                     0.0);
}

void DriftSpec::eval(const HistoryView& v, std::span<double> out) const {
    switch (kind) {
    case Kind::Pointwise:
        point(v.current(), out);
        return;
    case Kind::History:
        hist(v, out);
        return;
    case Kind::DiscreteDelay:
        point(v.at(-std::llround(h / v.dt())), out);
        return;
    }
}

DiffusionSpec DiffusionSpec::none(std::size_t dim) {
    DiffusionSpec s;
    s.dim = dim;
    s.m = 0;
    return s;
}

DiffusionSpec DiffusionSpec::pointwise(std::size_t dim, std::size_t m, PointFn fn) {
    DiffusionSpec s;
    s.kind = Kind::Pointwise;
    s.dim = dim;
    s.m = m;
    s.point = std::move(fn);
    return s;
}

DiffusionSpec DiffusionSpec::history(std::size_t dim, std::size_t m, double h, HistFn fn) {
    DiffusionSpec s;
    s.kind = Kind::History;
    s.dim = dim;
    s.m = m;
    s.h = h;
    s.hist = std::move(fn);
    return s;
}

DiffusionSpec DiffusionSpec::constant(std::size_t dim, std::size_t m, std::vector<double> matrix) {
    need(matrix.size() == dim * m, Errc::DimensionMismatch, "diffusion matrix must be d x m");
    return pointwise(dim, m, [matrix](std::span<const double>, std::span<double> o) {
        std::copy(matrix.begin(), matrix.end(), o.begin());
    });
}

void DiffusionSpec::eval(const HistoryView& v, std::span<double> out) const {
    switch (kind) {
    case Kind::None:
        std::fill(out.begin(), out.end(), 0.0);
        return;
    case Kind::Pointwise:
        point(v.current(), out);
        return;
    case Kind::History:
        hist(v, out);
        return;
    }
}

// ---------------------------------------------------------------- probes

namespace {

// Random segment pair on a 20-step grid; returns sup distance.
struct SegmentProbe {
    std::vector<double> x, y;
    double dist;
};

SegmentProbe make_probe(std::mt19937_64& rng, std::size_t d, std::int64_t steps) {
    std::normal_distribution<double> g(0, 1);
    std::uniform_int_distribution<int> scale(0, 3);
    const double eps = std::pow(10.0, -scale(rng));
    const auto n = static_cast<std::size_t>(steps + 1) * d;
    SegmentProbe p{std::vector<double>(n), std::vector<double>(n), 0};
    std::vector<double> cur(d), pert(d);
    for (auto& c : cur) c = 2 * g(rng);
    for (auto& c : pert) c = eps * g(rng);
    for (std::size_t k = 0; k <= static_cast<std::size_t>(steps); ++k) {
        double r2 = 0;
        for (std::size_t i = 0; i < d; ++i) {
            cur[i] += 0.3 * g(rng);
            pert[i] += 0.2 * eps * g(rng);
            p.x[k * d + i] = cur[i];
            p.y[k * d + i] = cur[i] + pert[i];
            r2 += pert[i] * pert[i];
        }
        p.dist = std::max(p.dist, std::sqrt(r2));
    }
    return p;
}

double norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace

double estimate_lipschitz(const DriftSpec& b, std::uint64_t seed, int n_probes) {
    std::mt19937_64 rng(seed);
    const std::size_t d = b.dim;
    const std::int64_t steps = b.kind == DriftSpec::Kind::Pointwise ? 0 : 20;
    const double dt = b.kind == DriftSpec::Kind::Pointwise ? 1.0 : b.h / 20.0;
    double best = 0;
    std::vector<double> bx(d), by(d);
    for (int i = 0; i < n_probes; ++i) {
        auto p = make_probe(rng, d, steps);
        if (p.dist == 0) continue;
        const std::size_t last = static_cast<std::size_t>(steps) * d;
        const PathKind kind = PathKind::Continuous;
        b.eval(HistoryView(p.x.data() + last, steps, d, dt, kind), bx);
        b.eval(HistoryView(p.y.data() + last, steps, d, dt, kind), by);
        best = std::max(best, norm_diff(bx, by) / p.dist);
    }
    return best;
}

void validate_lipschitz(const DriftSpec& b, std::uint64_t seed, int n_probes) {
    const double est = estimate_lipschitz(b, seed, n_probes);
    if (est > 1.1 * b.lipschitz)
        throw PathError(Errc::InvalidArgument, "declared Lipschitz constant " + std::to_string(b.lipschitz) +
                                                   " is below the probed ratio " + std::to_string(est));
}

double sigma_inverse_bound(const DiffusionSpec& s, std::uint64_t seed, int n_probes) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (s.kind == DiffusionSpec::Kind::None || s.dim != s.m) return inf;
    std::mt19937_64 rng(seed);
    const std::size_t d = s.dim;
    const std::int64_t steps = s.kind == DiffusionSpec::Kind::History ? 20 : 0;
    const double dt = steps ? s.h / 20.0 : 1.0;
    std::vector<double> S(d * d);
    double worst = 0;
    for (int i = 0; i < n_probes; ++i) {
        auto p = make_probe(rng, d, steps);
        s.eval(HistoryView(p.x.data() + static_cast<std::size_t>(steps) * d, steps, d, dt, PathKind::Continuous), S);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(
            S.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        const double smin = svd.singularValues().minCoeff();
        if (!(smin > 0)) return inf;
        worst = std::max(worst, 1.0 / smin);
    }
    return worst;
}

// ---------------------------------------------------------------- deterministic delay equations

SampledPath solve_dde(const DriftSpec& b, const PastSegment& xi, double T, double dt, DdeOptions opt) {
    need(xi.dt() == dt, Errc::GridMismatch, "initial segment must share the step dt");
    need(b.dim == xi.dim(), Errc::DimensionMismatch, "drift dimension differs from the initial segment");
    need(b.h <= xi.h * (1 + kGridTol), Errc::InvalidArgument, "initial segment shorter than the drift's history");
    need(opt.picard >= 0, Errc::InvalidArgument, "picard count must be >= 0");
    lag_steps(b.h, dt);
    const std::int64_t N = grid_steps(T, dt);
    need(N >= 0, Errc::InvalidArgument, "horizon must be >= 0");
    const auto H = static_cast<std::int64_t>(xi.path.size()) - 1;
    std::vector<double> buf = xi.path.values();
    integrate(buf, H, N, xi.dim(), dt, xi.path.kind(), Engine{b, nullptr, nullptr, nullptr, opt.picard});
    return SampledPath(xi.path.kind(), -H, dt, xi.dim(), std::move(buf));
}

namespace {

// Nodes of the stopped path from its first index through 0, then the future nodes 1..N of `fut`
// (a path whose node 0 sits at relative buffer position H).
SampledPath glue(const SampledPath& stopped, const std::vector<double>& fut, std::int64_t H, PathKind kind) {
    const std::size_t d = stopped.dim();
    const auto n_past = static_cast<std::size_t>(-stopped.first_index() + 1);
    std::vector<double> v(stopped.values().begin(), stopped.values().begin() + static_cast<std::ptrdiff_t>(n_past * d));
    v.insert(v.end(), fut.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(H + 1) * d), fut.end());
    return SampledPath(kind, stopped.first_index(), stopped.dt(), d, std::move(v));
}

} // namespace

SampledPath evolution_map_dde(const DriftSpec& b, const SampledPath& x, double T, DdeOptions opt) {
    const double dt = x.dt();
    const std::int64_t H = std::max<std::int64_t>(1, lag_steps(b.h, dt));
    need(x.first_index() <= -H, Errc::InvalidArgument, "path window must cover [-h, 0]");
    const SampledPath s = stop(x);
    const PastSegment seg = past_segment(s, 0.0, static_cast<double>(H) * dt);
    const SampledPath sol = solve_dde(b, seg, T, dt, opt);
    return glue(s, sol.values(), H, x.kind());
}

std::pair<double, double> sup_diff(const SampledPath& x, const SampledPath& y, double lo, double hi) {
    need(x.dt() == y.dt(), Errc::GridMismatch, "sup_diff needs a common grid");
    need(x.dim() == y.dim(), Errc::DimensionMismatch, "sup_diff dimension mismatch");
    const double dt = x.dt();
    const auto k0 = static_cast<std::int64_t>(std::ceil(lo / dt - kGridTol));
    const auto k1 = static_cast<std::int64_t>(std::floor(hi / dt + kGridTol));
    double best = 0, where = lo;
    for (std::int64_t k = k0; k <= k1; ++k) {
        auto p = x.node_at_index(k), q = y.node_at_index(k);
        double s = 0;
        for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
        s = std::sqrt(s);
        if (s > best || std::isnan(s)) {
            best = std::isnan(s) ? std::numeric_limits<double>::infinity() : s;
            where = static_cast<double>(k) * dt;
        }
    }
    return {best, where};
}

CheckReport check_evolution_map(const EvolutionMap& phi, std::span<const SampledPath> samples,
                                std::span<const double> t_list, double tol) {
    std::pair<double, double> r1{0, 0}, r2{0, 0}, r3{0, 0};
    auto keep = [](std::pair<double, double>& acc, std::pair<double, double> v) {
        if (v.first > acc.first) acc = v;
    };
    for (const auto& x : samples) {
        const SampledPath y = phi(x);
        keep(r1, sup_diff(y, phi(stop(x)), y.t_min(), y.t_max()));
        keep(r2, sup_diff(stop(y), stop(x), x.t_min(), 0.0));
        for (double t : t_list) {
            const SampledPath z = shift(y, t);
            keep(r3, sup_diff(phi(z), z, 0.0, z.t_max()));
        }
    }
    CheckReport rep{"evolution_map", {}};
    rep.items.push_back(residual_item("stop_invariance", r1.first, tol, r1.second));
    rep.items.push_back(residual_item("past_preservation", r2.first, tol, r2.second));
    rep.items.push_back(residual_item("flow", r3.first, tol, r3.second));
    return rep;
}

// ---------------------------------------------------------------- stochastic equations

SampledPath simulate_sde(const DriftSpec& b, const DiffusionSpec& sigma, const StatePoint& y0, double T, double dt,
                         const NoiseRef& noise) {
    need(b.kind == DriftSpec::Kind::Pointwise, Errc::KindMismatch, "simulate_sde needs a pointwise drift");
    need(sigma.kind != DiffusionSpec::Kind::History, Errc::KindMismatch, "simulate_sde needs a pointwise diffusion");
    need(b.dim == y0.size() && (sigma.kind == DiffusionSpec::Kind::None || sigma.dim == y0.size()),
         Errc::DimensionMismatch, "coefficient dimension differs from y0");
    const std::int64_t N = grid_steps(T, dt);
    need(N >= 0, Errc::InvalidArgument, "horizon must be >= 0");
    std::vector<double> buf = y0;
    const DiffusionSpec* s = sigma.kind == DiffusionSpec::Kind::None ? nullptr : &sigma;
    integrate(buf, 0, N, y0.size(), dt, PathKind::Continuous, Engine{b, s, &noise, nullptr, 0});
    if (N == 0) buf.insert(buf.end(), y0.begin(), y0.end());  // a path needs two nodes
    return SampledPath(PathKind::Continuous, std::int64_t{0}, dt, y0.size(), std::move(buf));
}

SampledPath simulate_sde(const DriftSpec& b, const DiffusionSpec& sigma, const StatePoint& y0, double T, double dt,
                         std::uint64_t seed) {
    return simulate_sde(b, sigma, y0, T, dt, NoiseRef{NoiseStream(seed, 0), 0});
}

SampledPath simulate_sdde(const DriftSpec& b, const DiffusionSpec& sigma, const PastSegment& xi, double T, double dt,
                          const NoiseRef& noise) {
    need(xi.dt() == dt, Errc::GridMismatch, "initial segment must share the step dt");
    need(b.dim == xi.dim() && (sigma.kind == DiffusionSpec::Kind::None || sigma.dim == xi.dim()),
         Errc::DimensionMismatch, "coefficient dimension differs from the initial segment");
    need(std::max(b.h, sigma.h) <= xi.h * (1 + kGridTol), Errc::InvalidArgument,
         "initial segment shorter than the coefficients' history");
    lag_steps(b.h, dt);
    const std::int64_t N = grid_steps(T, dt);
    need(N >= 0, Errc::InvalidArgument, "horizon must be >= 0");
    const auto H = static_cast<std::int64_t>(xi.path.size()) - 1;
    std::vector<double> buf = xi.path.values();
    const DiffusionSpec* s = sigma.kind == DiffusionSpec::Kind::None ? nullptr : &sigma;
    integrate(buf, H, N, xi.dim(), dt, xi.path.kind(), Engine{b, s, &noise, nullptr, 0});
    return SampledPath(xi.path.kind(), -H, dt, xi.dim(), std::move(buf));
}

SampledPath simulate_sdde(const DriftSpec& b, const DiffusionSpec& sigma, const PastSegment& xi, double T, double dt,
                          std::uint64_t seed) {
    return simulate_sdde(b, sigma, xi, T, dt, NoiseRef{NoiseStream(seed, 0), 0});
}

// ---------------------------------------------------------------- Levy noise

NoisePath::NoisePath(SampledPath r, StatePoint off, std::vector<std::int64_t> jumps)
    : rel(std::move(r)), offset(std::move(off)), jump_nodes(std::move(jumps)) {
    if (offset.empty()) offset.assign(rel.dim(), 0.0);
    need(offset.size() == rel.dim(), Errc::DimensionMismatch, "noise offset dimension");
}

StatePoint NoisePath::value(double t) const {
    StatePoint v = rel.evaluate(t);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += offset[i];
    return v;
}

SampledPath NoisePath::path() const {
    std::vector<double> v = rel.values();
    const std::size_t d = rel.dim();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += offset[i % d];
    return SampledPath(rel.kind(), rel.first_index(), rel.dt(), d, std::move(v));
}

NoisePath NoisePath::plus(const StatePoint& c) const {
    need(c.size() == offset.size(), Errc::DimensionMismatch, "constant shift dimension");
    NoisePath w = *this;
    for (std::size_t i = 0; i < c.size(); ++i) w.offset[i] += c[i];
    return w;
}

bool NoisePath::jumps_at(double t) const {
    const std::int64_t k = grid_steps(t, rel.dt());
    return std::find(jump_nodes.begin(), jump_nodes.end(), k) != jump_nodes.end();
}

NoisePath shift_noise(const NoisePath& w, double t) {
    const std::int64_t k = grid_steps(t, w.rel.dt());
    std::vector<std::int64_t> j;
    for (auto n : w.jump_nodes) j.push_back(n - k);
    return NoisePath(shift_steps(w.rel, k), w.offset, std::move(j));
}

NoisePath sample_levy(const LevySpec& spec, double T, double dt, std::uint64_t seed, std::uint64_t trajectory) {
    const std::size_t d = spec.dim();
    need(d >= 1, Errc::InvalidArgument, "Levy drift vector fixes the dimension and cannot be empty");
    need(spec.cov.empty() || spec.cov.size() == d * d, Errc::DimensionMismatch, "covariance must be d x d");
    need(spec.jump_rate >= 0, Errc::InvalidArgument, "jump rate must be >= 0");
    need(spec.jump_rate == 0 || spec.jumps.mean.size() == d, Errc::DimensionMismatch, "jump law dimension");
    const std::int64_t N = grid_steps(T, dt);
    need(N >= 1, Errc::InvalidArgument, "noise horizon must be at least one step");

    // factor F with F F^T = cov
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    bool brownian = false;
    if (!spec.cov.empty()) {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> C(
            spec.cov.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        if (C.cwiseAbs().maxCoeff() > 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
            need(es.eigenvalues().minCoeff() >= -1e-12 * C.cwiseAbs().maxCoeff(), Errc::InvalidArgument,
                 "covariance is not positive semidefinite");
            F = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
            brownian = true;
        }
    }

    // compound Poisson arrivals, snapped up to the next node
    std::vector<std::pair<std::int64_t, std::vector<double>>> jumps;
    if (spec.jump_rate > 0) {
        const NoiseStream js(seed, trajectory, StreamTag::LevyJumps);
        double t = 0;
        for (std::uint64_t e = 0;; ++e) {
            t += -std::log(js.uniform(e, 0)) / spec.jump_rate;
            if (t > T) break;
            auto node = static_cast<std::int64_t>(std::ceil(snap(t / dt)));
            node = std::clamp<std::int64_t>(node, 1, N);
            std::vector<double> J = spec.jumps.mean;
            if (spec.jumps.kind == JumpLaw::Kind::Gaussian)
                for (std::size_t i = 0; i < d; ++i) J[i] += spec.jumps.sd * js.normal(e, static_cast<std::uint32_t>(2 + i));
            jumps.emplace_back(node, std::move(J));
        }
    }

    const NoiseStream bs(seed, trajectory, StreamTag::Brownian);
    std::vector<double> vals(static_cast<std::size_t>(N + 1) * d, 0.0);
    std::vector<double> B(d, 0.0), Jc(d, 0.0), z(d);
    std::vector<std::int64_t> nodes;
    const double sq = std::sqrt(dt);
    std::size_t ji = 0;
    for (std::int64_t k = 1; k <= N; ++k) {
        if (brownian) {
            bs.normals(static_cast<std::uint64_t>(k - 1), z);
            for (std::size_t i = 0; i < d; ++i) {
                double acc = 0;
                for (std::size_t j = 0; j < d; ++j)
                    acc += F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z[j];
                B[i] += sq * acc;
            }
        }
        bool jumped = false;
        while (ji < jumps.size() && jumps[ji].first == k) {
            for (std::size_t i = 0; i < d; ++i) Jc[i] += jumps[ji].second[i];
            ++ji;
            jumped = true;
        }
        if (jumped) nodes.push_back(k);
        const double tk = static_cast<double>(k) * dt;
        for (std::size_t i = 0; i < d; ++i)
            vals[static_cast<std::size_t>(k) * d + i] = spec.drift[i] * tk + (B[i] + Jc[i]);
    }
    return NoisePath(SampledPath(PathKind::Cadlag, std::int64_t{0}, dt, d, std::move(vals)), {}, std::move(nodes));
}

SampledPath levy_delay_flow(const DriftSpec& b, const NoisePath& omega, const SampledPath& x) {
    const double dt = x.dt();
    need(omega.rel.dt() == dt, Errc::GridMismatch, "noise and path must share the step dt");
    need(omega.rel.dim() == x.dim() && b.dim == x.dim(), Errc::DimensionMismatch, "noise/drift/path dimensions");
    const std::int64_t H = lag_steps(b.h, dt);
    need(x.first_index() <= -H, Errc::InvalidArgument, "path window must cover [-h, 0]");
    need(omega.rel.first_index() <= 0 && omega.rel.last_index() >= 1, Errc::InvalidArgument,
         "noise path must cover [0, T] with T > 0");
    const SampledPath s = stop(x);  // node 0 now holds x(0-) for cadlag x
    const std::size_t d = x.dim();
    const auto off = static_cast<std::size_t>(-H - s.first_index()) * d;
    std::vector<double> buf(s.values().begin() + static_cast<std::ptrdiff_t>(off),
                            s.values().begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(H + 1) * d));
    integrate(buf, H, omega.rel.last_index(), d, dt, x.kind(), Engine{b, nullptr, nullptr, &omega.rel, 0});
    return glue(s, buf, H, x.kind());
}

CheckReport check_random_evolution_map(const RandomEvolutionMap& phi, std::span<const NoisePath> omegas,
                                       std::span<const SampledPath> paths, std::span<const double> t_list,
                                       std::span<const StatePoint> c_list, double tol) {
    std::pair<double, double> r[5] = {};
    auto keep = [&](int i, std::pair<double, double> v) {
        if (v.first > r[i].first) r[i] = v;
    };
    int skipped = 0;
    const std::size_t n = std::max(omegas.size(), paths.size());
    for (std::size_t s = 0; s < n && !omegas.empty() && !paths.empty(); ++s) {
        const NoisePath& w = omegas[s % omegas.size()];
        const SampledPath& x = paths[s % paths.size()];
        const SampledPath y = phi(w, x);
        keep(0, sup_diff(y, phi(w, stop(x)), y.t_min(), y.t_max()));
        keep(1, sup_diff(stop(y), stop(x), x.t_min(), 0.0));
        for (const auto& c : c_list) keep(2, sup_diff(phi(w.plus(c), x), y, y.t_min(), y.t_max()));
        for (double t : t_list) {
            // (iv): change omega strictly after t
            const std::int64_t K = grid_steps(t, w.rel.dt());
            NoisePath w2 = w;
            std::vector<double> v = w.rel.values();
            const std::size_t d = w.rel.dim();
            for (std::size_t i = 0; i < w.rel.size(); ++i) {
                const std::int64_t k = w.rel.first_index() + static_cast<std::int64_t>(i);
                if (k > K)
                    for (std::size_t j = 0; j < d; ++j) v[i * d + j] += 1.0 + 0.37 * static_cast<double>(k - K);
            }
            w2.rel = SampledPath(w.rel.kind(), w.rel.first_index(), w.rel.dt(), d, std::move(v));
            keep(3, sup_diff(stop_at(phi(w2, x), t), stop_at(y, t), y.t_min(), y.t_max()));
            // (v)
            if (w.jumps_at(t)) {
                ++skipped;
                continue;
            }
            const SampledPath z = shift(y, t);
            keep(4, sup_diff(phi(shift_noise(w, t), z), z, 0.0, z.t_max()));
        }
    }
    CheckReport rep{"random_evolution_map", {}};
    const char* names[5] = {"stop_invariance", "past_preservation", "constant_shift", "adaptedness", "flow"};
    for (int i = 0; i < 5; ++i) rep.items.push_back(residual_item(names[i], r[i].first, tol, r[i].second));
    rep.items[4].note = "skipped " + std::to_string(skipped) + " (sample, t) pairs with a noise jump at t";
    return rep;
}

} // namespace pathsg
