#include "pathsg/path.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathsg/errors.hpp"

namespace pathsg {

std::int64_t grid_steps(double t, double dt) {
    const double u = t / dt;
    const double r = std::nearbyint(u);
    if (!std::isfinite(u) || std::abs(u - r) > kGridTol)
        throw PathError(Errc::NonGridShift, "time " + std::to_string(t) + " is not a multiple of dt=" + std::to_string(dt));
    return static_cast<std::int64_t>(r);
}

bool on_grid(double t, double dt) {
    const double u = t / dt;
    return std::isfinite(u) && std::abs(u - std::nearbyint(u)) <= kGridTol;
}

namespace {

void validate(double dt, std::size_t dim, const std::vector<double>& v) {
    if (!(dt > 0) || !std::isfinite(dt)) throw PathError(Errc::InvalidPath, "dt must be positive");
    if (dim == 0) throw PathError(Errc::InvalidPath, "state dimension must be >= 1");
    if (v.size() % dim != 0) throw PathError(Errc::InvalidPath, "value count not a multiple of dim");
    if (v.size() / dim < 2) throw PathError(Errc::InvalidPath, "window must contain at least two nodes");
    for (double a : v)
        if (!std::isfinite(a)) throw PathError(Errc::InvalidPath, "non-finite path value");
}

std::int64_t lattice_index(double t, double dt) {
    try {
        return grid_steps(t, dt);
    } catch (const PathError&) {
        throw PathError(Errc::InvalidPath, "window bound " + std::to_string(t) + " is not on the dt lattice");
    }
}

} // namespace

SampledPath::SampledPath(PathKind kind, double t_min, double dt, std::size_t dim, std::vector<double> values)
    : kind_(kind), dt_(dt), dim_(dim), values_(std::move(values)) {
    validate(dt_, dim_, values_);
    first_ = lattice_index(t_min, dt_);
}

SampledPath::SampledPath(PathKind kind, std::int64_t first_index, double dt, std::size_t dim, std::vector<double> values)
    : kind_(kind), dt_(dt), first_(first_index), dim_(dim), values_(std::move(values)) {
    validate(dt_, dim_, values_);
}

SampledPath SampledPath::from_function(PathKind kind, double t_min, double t_max, double dt, std::size_t dim,
                                       const std::function<StatePoint(double)>& fn) {
    if (!(t_max > t_min)) throw PathError(Errc::InvalidPath, "t_max must exceed t_min");
    const std::int64_t first = lattice_index(t_min, dt);
    const auto last = static_cast<std::int64_t>(std::floor(t_max / dt + kGridTol));
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(last - first + 1) * dim);
    for (std::int64_t k = first; k <= last; ++k) {
        StatePoint p = fn(static_cast<double>(k) * dt);
        if (p.size() != dim) throw PathError(Errc::DimensionMismatch, "generator returned wrong dimension");
        v.insert(v.end(), p.begin(), p.end());
    }
    return SampledPath(kind, first, dt, dim, std::move(v));
}

SampledPath SampledPath::constant(PathKind kind, double t_min, double t_max, double dt, const StatePoint& c) {
    return from_function(kind, t_min, t_max, dt, c.size(), [&](double) { return c; });
}

std::span<const double> SampledPath::node_at_index(std::int64_t k) const {
    const auto n = static_cast<std::int64_t>(size());
    const std::int64_t i = std::clamp<std::int64_t>(k - first_, 0, n - 1);
    return node(static_cast<std::size_t>(i));
}

SampledPath::Loc SampledPath::locate(double t) const {
    const double u = t / dt_ - static_cast<double>(first_);
    const double r = std::nearbyint(u);
    if (std::abs(u - r) <= kGridTol) return {static_cast<std::int64_t>(r), 0.0, true};
    const double f = std::floor(u);
    return {static_cast<std::int64_t>(f), u - f, false};
}

void SampledPath::evaluate_into(double t, std::span<double> out) const {
    const auto n = static_cast<std::int64_t>(size());
    const Loc l = locate(t);
    auto copy = [&](std::int64_t i) {
        auto p = node(static_cast<std::size_t>(std::clamp<std::int64_t>(i, 0, n - 1)));
        std::copy(p.begin(), p.end(), out.begin());
    };
    if (l.on_node || l.i < 0 || l.i >= n - 1 || kind_ == PathKind::Cadlag) {
        copy(l.i);
        return;
    }
    auto a = node(static_cast<std::size_t>(l.i));
    auto b = node(static_cast<std::size_t>(l.i + 1));
    for (std::size_t j = 0; j < dim_; ++j) out[j] = a[j] + l.frac * (b[j] - a[j]);
}

void SampledPath::left_limit_into(double t, std::span<double> out) const {
    if (kind_ == PathKind::Continuous) {
        evaluate_into(t, out);
        return;
    }
    const Loc l = locate(t);
    if (!l.on_node) {
        evaluate_into(t, out);
        return;
    }
    const auto n = static_cast<std::int64_t>(size());
    auto p = node(static_cast<std::size_t>(std::clamp<std::int64_t>(l.i - 1, 0, n - 1)));
    std::copy(p.begin(), p.end(), out.begin());
}

StatePoint SampledPath::evaluate(double t) const {
    StatePoint p(dim_);
    evaluate_into(t, p);
    return p;
}

StatePoint SampledPath::left_limit(double t) const {
    StatePoint p(dim_);
    left_limit_into(t, p);
    return p;
}

PastSegment::PastSegment(double h_, SampledPath p) : h(h_), path(std::move(p)) {
    if (!(h > 0)) throw PathError(Errc::InvalidArgument, "delay horizon h must be positive");
    if (path.last_index() != 0 || path.first_index() != -grid_steps(h, path.dt()))
        throw PathError(Errc::InvalidPath, "past segment must live exactly on [-h, 0]");
}

PastSegment PastSegment::constant(PathKind kind, double h, double dt, const StatePoint& c) {
    return PastSegment(h, SampledPath::constant(kind, -h, 0.0, dt, c));
}

PastSegment PastSegment::from_function(PathKind kind, double h, double dt, std::size_t dim,
                                       const std::function<StatePoint(double)>& fn) {
    return PastSegment(h, SampledPath::from_function(kind, -h, 0.0, dt, dim, fn));
}

SampledPath shift_steps(const SampledPath& x, std::int64_t k) {
    return SampledPath(x.kind(), x.first_index() - k, x.dt(), x.dim(), x.values());
}

SampledPath shift(const SampledPath& x, double t) { return shift_steps(x, grid_steps(t, x.dt())); }

namespace {

SampledPath freeze_from(const SampledPath& x, std::int64_t k) {
    if (k < x.first_index() || k > x.last_index())
        throw PathError(Errc::WindowExcludesZero, "stopping time outside the path window");
    const std::int64_t src = x.kind() == PathKind::Cadlag ? std::max(k - 1, x.first_index()) : k;
    std::vector<double> v = x.values();
    const std::size_t d = x.dim();
    const auto s = static_cast<std::size_t>(src - x.first_index());
    for (auto i = static_cast<std::size_t>(k - x.first_index()); i < x.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = v[s * d + j];
    return SampledPath(x.kind(), x.first_index(), x.dt(), d, std::move(v));
}

} // namespace

SampledPath stop(const SampledPath& x) { return freeze_from(x, 0); }

SampledPath stop_at(const SampledPath& x, double t) { return freeze_from(x, grid_steps(t, x.dt())); }

bool is_stopped(const SampledPath& x) { return stop(x) == x; }

SampledPath concat(const SampledPath& past, const SampledPath& future) {
    if (past.dt() != future.dt()) throw PathError(Errc::GridMismatch, "concat needs a common grid");
    if (past.dim() != future.dim()) throw PathError(Errc::DimensionMismatch, "concat dimension mismatch");
    if (past.first_index() > 0 || past.last_index() < 0 || future.first_index() > 0 || future.last_index() < 0)
        throw PathError(Errc::WindowExcludesZero, "concat operands must cover time 0");
    if (!is_stopped(past)) throw PathError(Errc::PastNotStopped, "left operand of concat is not stopped");

    const std::size_t d = past.dim();
    const std::int64_t first = past.first_index();
    const std::int64_t last = std::max<std::int64_t>(0, future.last_index());
    std::vector<double> v(static_cast<std::size_t>(last - first + 1) * d);
    for (std::int64_t k = first; k <= 0; ++k) {
        auto p = past.node_at_index(k);
        std::copy(p.begin(), p.end(), v.begin() + static_cast<std::ptrdiff_t>((k - first) * static_cast<std::int64_t>(d)));
    }
    auto p0 = past.node_at_index(0);
    auto f0 = future.node_at_index(0);
    const bool aligned = std::equal(p0.begin(), p0.end(), f0.begin());
    for (std::int64_t k = 1; k <= last; ++k) {
        auto f = future.node_at_index(k);
        double* dst = v.data() + (k - first) * static_cast<std::int64_t>(d);
        for (std::size_t j = 0; j < d; ++j) dst[j] = aligned ? f[j] : f[j] - f0[j] + p0[j];
    }
    const PathKind kind =
        (past.kind() == PathKind::Cadlag || future.kind() == PathKind::Cadlag) ? PathKind::Cadlag : PathKind::Continuous;
    return SampledPath(kind, first, past.dt(), d, std::move(v));
}

PastSegment past_segment(const SampledPath& x, double t, double h) {
    const double dt = x.dt();
    const std::int64_t m = grid_steps(h, dt);
    if (m < 1) throw PathError(Errc::InvalidArgument, "h must be at least one grid step");
    const std::size_t d = x.dim();
    std::vector<double> v(static_cast<std::size_t>(m + 1) * d);
    if (on_grid(t, dt)) {
        const std::int64_t k = grid_steps(t, dt);
        for (std::int64_t j = 0; j <= m; ++j) {
            auto p = x.node_at_index(k - m + j);
            std::copy(p.begin(), p.end(), v.begin() + static_cast<std::ptrdiff_t>(j * static_cast<std::int64_t>(d)));
        }
    } else {
        for (std::int64_t j = 0; j <= m; ++j)
            x.evaluate_into(t + static_cast<double>(j - m) * dt,
                            std::span<double>(v.data() + j * static_cast<std::int64_t>(d), d));
    }
    return PastSegment(h, SampledPath(x.kind(), -m, dt, d, std::move(v)));
}

SampledPath rewindow(const SampledPath& x, double a, double b) {
    const std::int64_t ka = grid_steps(a, x.dt());
    const std::int64_t kb = grid_steps(b, x.dt());
    if (kb <= ka) throw PathError(Errc::EmptyInterval, "rewindow needs a < b");
    const std::size_t d = x.dim();
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(kb - ka + 1) * d);
    for (std::int64_t k = ka; k <= kb; ++k) {
        auto p = x.node_at_index(k);
        v.insert(v.end(), p.begin(), p.end());
    }
    return SampledPath(x.kind(), ka, x.dt(), d, std::move(v));
}

StatePoint value_at_zero_star(const SampledPath& x) {
    return x.kind() == PathKind::Cadlag ? x.left_limit(0.0) : x.evaluate(0.0);
}

double sup_distance(const SampledPath& x, const SampledPath& y, double lo, double hi) {
    if (x.dim() != y.dim()) throw PathError(Errc::DimensionMismatch, "sup_distance dimension mismatch");
    const double dt = x.dt();
    const auto k0 = static_cast<std::int64_t>(std::ceil(lo / dt - kGridTol));
    const auto k1 = static_cast<std::int64_t>(std::floor(hi / dt + kGridTol));
    const std::size_t d = x.dim();
    StatePoint yv(d);
    double best = 0;
    for (std::int64_t k = k0; k <= k1; ++k) {
        auto xv = x.node_at_index(k);
        if (y.dt() == dt) {
            auto q = y.node_at_index(k);
            std::copy(q.begin(), q.end(), yv.begin());
        } else {
            y.evaluate_into(static_cast<double>(k) * dt, yv);
        }
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += (xv[j] - yv[j]) * (xv[j] - yv[j]);
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

} // namespace pathsg
