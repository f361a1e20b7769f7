#include "pathsg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pathsg/errors.hpp"
#include "pathsg/parallel.hpp"

namespace pathsg {

void TimeChange::validate() const {
    if (knots.size() < 2 || knots.size() != images.size())
        throw PathError(Errc::InvalidArgument, "time change needs matching knot/image lists");
    if (knots.front() != images.front() || knots.back() != images.back())
        throw PathError(Errc::InvalidArgument, "time change must fix the interval end points");
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i] > knots[i - 1]) || !(images[i] > images[i - 1]))
            throw PathError(Errc::InvalidArgument, "time change must be strictly increasing");
}

double TimeChange::operator()(double t) const {
    if (t <= knots.front()) return images.front();
    if (t >= knots.back()) return images.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
    const double w = (t - knots[i]) / (knots[i + 1] - knots[i]);
    return images[i] + w * (images[i + 1] - images[i]);
}

double lip_cost(const TimeChange& lambda) {
    lambda.validate();
    double c = 0;
    for (std::size_t i = 1; i < lambda.knots.size(); ++i) {
        const double slope = (lambda.images[i] - lambda.images[i - 1]) / (lambda.knots[i] - lambda.knots[i - 1]);
        c = std::max(c, std::abs(std::log(slope)));
    }
    return c;
}

double d_state(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw PathError(Errc::DimensionMismatch, "state dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::min(std::sqrt(s), 1.0);
}

MetricValue d_c(const SampledPath& x, const SampledPath& y, int n_max) {
    if (x.kind() != PathKind::Continuous || y.kind() != PathKind::Continuous)
        throw PathError(Errc::KindMismatch, "d_c is defined on continuous paths");
    if (x.dim() != y.dim()) throw PathError(Errc::DimensionMismatch, "d_c dimension mismatch");
    if (n_max < 1) throw PathError(Errc::InvalidArgument, "n_max must be >= 1");
    // Breakpoints of both piecewise-linear paths inside [-n_max, n_max]; the
    // distance of two linear pieces is convex, so sups sit on breakpoints.
    std::vector<double> ts;
    const double R = n_max;
    for (const SampledPath* p : {&x, &y})
        for (std::size_t i = 0; i < p->size(); ++i)
            if (std::abs(p->time(i)) <= R) ts.push_back(p->time(i));
    for (int n = 1; n <= n_max; ++n) {
        ts.push_back(n);
        ts.push_back(-n);
    }
    std::vector<double> sup(static_cast<std::size_t>(n_max) + 1, 0.0);
    StatePoint xv(x.dim()), yv(y.dim());
    for (double t : ts) {
        x.evaluate_into(t, xv);
        y.evaluate_into(t, yv);
        const double dv = d_state(xv, yv);
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(t) - 1e-12)));
        if (n <= static_cast<std::size_t>(n_max)) sup[n] = std::max(sup[n], dv);
    }
    double total = 0, running = 0, w = 1;
    for (int n = 1; n <= n_max; ++n) {
        running = std::max(running, sup[static_cast<std::size_t>(n)]);
        w *= 0.5;
        total += w * std::min(1.0, running);
    }
    return {total, std::nullopt, false, std::ldexp(1.0, -n_max)};
}

namespace {

// Jump structure of a path restricted to [a, b]: value before the first jump
// and (time, value) after each jump in (a, b].
struct Steps {
    std::vector<double> times;
    std::vector<StatePoint> values;
};

// Jump list of a step path over its whole window. Cadlag paths and constant
// paths qualify.
struct StepIndex {
    bool valid = false;
    StatePoint first;
    std::vector<double> times;
    std::vector<StatePoint> vals;
};

StepIndex build_steps(const SampledPath& x) {
    StepIndex ix;
    auto n0 = x.node(0);
    ix.first.assign(n0.begin(), n0.end());
    for (std::size_t i = 1; i < x.size(); ++i) {
        auto prev = x.node(i - 1);
        auto cur = x.node(i);
        if (!std::equal(prev.begin(), prev.end(), cur.begin())) {
            if (x.kind() != PathKind::Cadlag) return ix;  // non-constant continuous path
            ix.times.push_back(x.time(i));
            ix.vals.emplace_back(cur.begin(), cur.end());
        }
    }
    ix.valid = true;
    return ix;
}

Steps slice_steps(const StepIndex& ix, double a, double b, double dt) {
    const double tol = kGridTol * dt;
    Steps s;
    auto lo = std::upper_bound(ix.times.begin(), ix.times.end(), a + tol);
    const auto k = static_cast<std::size_t>(lo - ix.times.begin());
    s.values.push_back(k == 0 ? ix.first : ix.vals[k - 1]);
    for (std::size_t i = k; i < ix.times.size() && ix.times[i] <= b + tol; ++i) {
        s.times.push_back(std::min(ix.times[i], b));
        s.values.push_back(ix.vals[i]);
    }
    return s;
}

// sup of d(x(t), y(t)) over [a, b] for two step functions.
double identity_sup_steps(const Steps& x, const Steps& y) {
    std::size_t i = 0, j = 0;
    double best = d_state(x.values[0], y.values[0]);
    while (i < x.times.size() || j < y.times.size()) {
        const double tx = i < x.times.size() ? x.times[i] : std::numeric_limits<double>::infinity();
        const double ty = j < y.times.size() ? y.times[j] : std::numeric_limits<double>::infinity();
        const double t = std::min(tx, ty);
        if (tx == t) ++i;
        if (ty == t) ++j;
        best = std::max(best, d_state(x.values[i], y.values[j]));
    }
    return best;
}

struct Interval {
    double lo, hi;
};

void merge_intervals(std::vector<Interval>& v) {
    if (v.size() < 2) return;
    std::sort(v.begin(), v.end(), [](const Interval& l, const Interval& r) { return l.lo < r.lo; });
    std::size_t w = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i].lo <= v[w].hi)
            v[w].hi = std::max(v[w].hi, v[i].hi);
        else
            v[++w] = v[i];
    }
    v.resize(w + 1);
}

// Exact d_a^b for step paths. Feasibility of a threshold eps is decided by a
// sweep over x-jump events: state = (y segment at the event, tie flag), with
// the exact set of reachable lambda values at the event time.
class StepSearch {
public:
    StepSearch(const Steps& x, const Steps& y, double a, double b) : a_(a), b_(b), p_(x.times), q_(y.times) {
        m_ = p_.size();
        n_ = q_.size();
        cost_.resize((m_ + 1) * (n_ + 1));
        for (std::size_t i = 0; i <= m_; ++i)
            for (std::size_t j = 0; j <= n_; ++j) cost_[i * (n_ + 1) + j] = d_state(x.values[i], y.values[j]);
        tol_ = 1e-12 * (b - a) + 1e-15;
    }

    double cell(std::size_t i, std::size_t j) const { return cost_[i * (n_ + 1) + j]; }
    double endpoint_bound() const { return std::max(cell(0, 0), cell(m_, n_)); }

    bool feasible(double eps) {
        const double lo_s = std::exp(-eps), hi_s = std::exp(eps);
        const std::size_t S = 2 * (n_ + 1);
        reach_.assign((m_ + 2) * S, {});
        reach_[0].push_back({a_, a_});  // event 0: time a, y segment 0, no tie
        prefix_bad(eps);
        for (std::size_t i = 1; i <= m_ + 1; ++i) {
            const bool end = i == m_ + 1;
            const double ti = end ? b_ : p_[i - 1];
            const double dti = ti - time_of(i - 1);
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t j = s / 2;
                const bool tie = s % 2;
                if (end && (tie || j != n_)) continue;
                if (tie && j == 0) continue;
                Interval c = end ? Interval{b_, b_} : tie ? Interval{q_[j - 1], q_[j - 1]} : Interval{seg_lo(j), seg_hi(j)};
                auto& out = reach_[i * S + s];
                for (std::size_t sp = 0; sp < S; ++sp) {
                    const auto& prev = reach_[(i - 1) * S + sp];
                    if (prev.empty() || !transition_ok(i, sp, s)) continue;
                    for (const Interval& r : prev) {
                        const double lo = std::max(r.lo + lo_s * dti, c.lo - tol_);
                        const double hi = std::min(r.hi + hi_s * dti, c.hi + tol_);
                        if (lo <= hi) out.push_back({std::clamp(lo, c.lo, c.hi), std::clamp(hi, c.lo, c.hi)});
                    }
                }
                merge_intervals(out);
            }
        }
        return !reach_[(m_ + 1) * S + 2 * n_].empty();
    }

    // Requires the preceding feasible() call to have succeeded.
    TimeChange witness(double eps) const {
        const double lo_s = std::exp(-eps), hi_s = std::exp(eps);
        const std::size_t S = 2 * (n_ + 1);
        std::vector<double> img(m_ + 2);
        img[m_ + 1] = b_;
        std::size_t s = 2 * n_;
        for (std::size_t i = m_ + 1; i >= 1; --i) {
            const double v = img[i];
            const double dti = time_of(i) - time_of(i - 1);
            const double want_lo = v - hi_s * dti, want_hi = v - lo_s * dti;
            bool found = false;
            for (std::size_t sp = 0; sp < S && !found; ++sp) {
                if (!transition_ok(i, sp, s)) continue;
                for (const Interval& r : reach_[(i - 1) * S + sp]) {
                    const double lo = std::max(r.lo, want_lo - tol_), hi = std::min(r.hi, want_hi + tol_);
                    if (lo > hi) continue;
                    img[i - 1] = std::clamp(v - dti, lo, hi);
                    s = sp;
                    found = true;
                    break;
                }
            }
            if (!found) img[i - 1] = std::clamp(v - dti, want_lo, want_hi);
        }
        img[0] = a_;
        TimeChange lam;
        for (std::size_t i = 0; i <= m_ + 1; ++i) {
            const double t = time_of(i);
            if (!lam.knots.empty() && t <= lam.knots.back()) continue;
            if (!lam.images.empty() && img[i] <= lam.images.back()) continue;
            lam.knots.push_back(t);
            lam.images.push_back(img[i]);
        }
        if (lam.knots.back() != b_) {
            lam.knots.back() = b_;
            lam.images.back() = b_;
        }
        return lam;
    }

private:
    double time_of(std::size_t i) const { return i == 0 ? a_ : i == m_ + 1 ? b_ : p_[i - 1]; }
    double seg_lo(std::size_t j) const { return j == 0 ? a_ : q_[j - 1]; }
    double seg_hi(std::size_t j) const { return j == n_ ? b_ : q_[j]; }

    void prefix_bad(double eps) {
        bad_.assign((m_ + 1) * (n_ + 2), 0);
        for (std::size_t i = 0; i <= m_; ++i)
            for (std::size_t j = 0; j <= n_; ++j)
                bad_[i * (n_ + 2) + j + 1] = bad_[i * (n_ + 2) + j] + (cell(i, j) > eps ? 1 : 0);
    }
    // Are all cells (row, j0..j1) allowed?
    bool row_ok(std::size_t row, std::size_t j0, std::size_t j1) const {
        if (j1 < j0) return true;
        return bad_[row * (n_ + 2) + j1 + 1] == bad_[row * (n_ + 2) + j0];
    }
    bool transition_ok(std::size_t i, std::size_t sp, std::size_t s) const {
        const std::size_t jp = sp / 2, j = s / 2;
        const bool tie = s % 2;
        if (i == 1 && sp != 0) return false;  // event 0 only has state (0, no tie)
        if (tie) return j > jp && row_ok(i - 1, jp, j - 1);
        return j >= jp && row_ok(i - 1, jp, j);
    }

    double a_, b_;
    std::vector<double> p_, q_;
    std::size_t m_ = 0, n_ = 0;
    std::vector<double> cost_;
    std::vector<std::vector<Interval>> reach_;
    std::vector<int> bad_;
    double tol_;
};

double identity_sup(const SampledPath& x, const SampledPath& y, double a, double b) {
    // Breakpoints of both paths in [a, b]; check both one-sided values.
    std::vector<double> ts{a, b};
    for (const SampledPath* p : {&x, &y}) {
        const double dt = p->dt();
        const auto k0 = static_cast<std::int64_t>(std::ceil(a / dt));
        const auto k1 = static_cast<std::int64_t>(std::floor(b / dt));
        for (std::int64_t k = std::max(k0, p->first_index()); k <= std::min(k1, p->last_index()); ++k)
            ts.push_back(static_cast<double>(k) * dt);
    }
    StatePoint xv(x.dim()), yv(y.dim());
    double best = 0;
    for (double t : ts) {
        x.evaluate_into(t, xv);
        y.evaluate_into(t, yv);
        best = std::max(best, d_state(xv, yv));
        if (t > a) {
            x.left_limit_into(t, xv);
            y.left_limit_into(t, yv);
            best = std::max(best, d_state(xv, yv));
        }
    }
    return best;
}

// sup over [k0, k1] of d(x(t), y(lambda(t))) for lambda linear from v0 to v1.
double segment_sup(const SampledPath& x, const SampledPath& y, double k0, double k1, double v0, double v1, bool closed_right) {
    const double slope = (v1 - v0) / (k1 - k0);
    std::vector<double> ts{k0, k1};
    {
        const double dt = x.dt();
        for (auto k = static_cast<std::int64_t>(std::floor(k0 / dt)) + 1; static_cast<double>(k) * dt < k1; ++k)
            if (k >= x.first_index() && k <= x.last_index()) ts.push_back(static_cast<double>(k) * dt);
    }
    {
        const double dt = y.dt();
        for (auto k = static_cast<std::int64_t>(std::floor(v0 / dt)) + 1; static_cast<double>(k) * dt < v1; ++k)
            if (k >= y.first_index() && k <= y.last_index()) ts.push_back(k0 + (static_cast<double>(k) * dt - v0) / slope);
    }
    StatePoint xv(x.dim()), yv(y.dim());
    double best = 0;
    for (double t : ts) {
        const double u = v0 + slope * (t - k0);
        if (t < k1 || closed_right) {
            x.evaluate_into(t, xv);
            y.evaluate_into(u, yv);
            best = std::max(best, d_state(xv, yv));
        }
        if (t > k0) {
            x.left_limit_into(t, xv);
            y.left_limit_into(u, yv);
            best = std::max(best, d_state(xv, yv));
        }
    }
    return best;
}

// Upper bound: lambda piecewise linear on K uniform knots, images on a grid
// refined slope_levels times, slopes restricted to [e^-2, e^2].
MetricValue general_search(const SampledPath& x, const SampledPath& y, double a, double b, int levels, double ub) {
    constexpr int K = 16;
    constexpr double L = 2.0;
    const int r = levels;
    const int V = K * r + 1;
    const double hk = (b - a) / K, hv = (b - a) / (K * r);
    const int wmin = std::max(1, static_cast<int>(std::ceil(r * std::exp(-L) - 1e-12)));
    const int wmax = static_cast<int>(std::floor(r * std::exp(L) + 1e-12));
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost(static_cast<std::size_t>((K + 1) * V), inf);
    std::vector<int> from(static_cast<std::size_t>((K + 1) * V), -1);
    cost[0] = 0;
    for (int i = 1; i <= K; ++i) {
        const double k0 = a + (i - 1) * hk, k1 = i == K ? b : a + i * hk;
        for (int u = 0; u < V; ++u) {
            const double cu = cost[static_cast<std::size_t>((i - 1) * V + u)];
            if (!(cu < ub)) continue;
            for (int w = wmin; w <= wmax && u + w < V; ++w) {
                const int v = u + w;
                const double lip = std::abs(std::log(static_cast<double>(w) / r));
                double c = std::max(cu, lip);
                auto& slot = cost[static_cast<std::size_t>(i * V + v)];
                if (!(c < slot) || c >= ub) continue;
                const double v0 = a + u * hv, v1 = v == V - 1 ? b : a + v * hv;
                c = std::max(c, segment_sup(x, y, k0, k1, v0, v1, i == K));
                if (c < slot) {
                    slot = c;
                    from[static_cast<std::size_t>(i * V + v)] = u;
                }
            }
        }
    }
    MetricValue mv{ub, TimeChange::identity(a, b), true, 0};
    const double best = cost[static_cast<std::size_t>(K * V + V - 1)];
    if (best < ub) {
        TimeChange lam;
        lam.knots.resize(K + 1);
        lam.images.resize(K + 1);
        int v = V - 1;
        for (int i = K; i >= 0; --i) {
            lam.knots[static_cast<std::size_t>(i)] = i == K ? b : a + i * hk;
            lam.images[static_cast<std::size_t>(i)] = v == V - 1 ? b : a + v * hv;
            if (i > 0) v = from[static_cast<std::size_t>(i * V + v)];
        }
        mv.value = best;
        mv.witness = lam;
    }
    return mv;
}

MetricValue d_ab_core(const SampledPath& x, const SampledPath& y, double a, double b, const SearchBudget& budget,
                      const StepIndex& ix, const StepIndex& iy) {
    if (ix.valid && iy.valid) {
        const Steps sx = slice_steps(ix, a, b, x.dt()), sy = slice_steps(iy, a, b, y.dt());
        const double ub = identity_sup_steps(sx, sy);
        if ((sx.times.size() + 1) * (sy.times.size() + 1) <= budget.max_matchings) {
            StepSearch search(sx, sy, a, b);
            double lo = search.endpoint_bound();
            double hi = ub;
            if (search.feasible(lo)) return {lo, search.witness(lo), false, 0};
            while (hi - lo > 1e-11) {
                const double mid = 0.5 * (lo + hi);
                if (search.feasible(mid))
                    hi = mid;
                else
                    lo = mid;
            }
            if (search.feasible(hi)) return {hi, search.witness(hi), false, 0};
            return {ub, TimeChange::identity(a, b), false, 0};
        }
    }
    const double ub = identity_sup(x, y, a, b);
    // lambda fixes a and b, so the end point mismatch is a lower bound
    const double lb = std::max(d_state(x.evaluate(a), y.evaluate(a)), d_state(x.evaluate(b), y.evaluate(b)));
    if (ub <= lb) return {ub, TimeChange::identity(a, b), false, 0};
    if (budget.slope_levels <= 0) return {ub, TimeChange::identity(a, b), true, 0};
    return general_search(x, y, a, b, budget.slope_levels, ub);
}

} // namespace

MetricValue d_ab_j1(const SampledPath& x, const SampledPath& y, double a, double b, const SearchBudget& budget) {
    if (!(a < b)) throw PathError(Errc::EmptyInterval, "d_ab_j1 needs a < b");
    if (x.dim() != y.dim()) throw PathError(Errc::DimensionMismatch, "d_ab_j1 dimension mismatch");
    return d_ab_core(x, y, a, b, budget, build_steps(x), build_steps(y));
}

MetricValue d_j1(const SampledPath& x, const SampledPath& y, const SearchBudget& budget) {
    if (!(budget.s_max > 0) || !(budget.quad_step > 0)) throw PathError(Errc::InvalidArgument, "bad quadrature budget");
    if (x.dim() != y.dim()) throw PathError(Errc::DimensionMismatch, "d_j1 dimension mismatch");
    const auto N = static_cast<std::size_t>(std::ceil(budget.s_max / budget.quad_step - 1e-9));
    const double h = budget.s_max / static_cast<double>(N);
    const StepIndex ix = build_steps(x), iy = build_steps(y);
    std::vector<double> rows(N, 0.0);
    std::vector<char> approx(N, 0);
    parallel_for(N, [&](std::size_t i) {
        const double s = -(static_cast<double>(i) + 0.5) * h;
        double acc = 0;
        for (std::size_t j = 0; j < N; ++j) {
            const double t = (static_cast<double>(j) + 0.5) * h;
            const MetricValue v = d_ab_core(x, y, s, t, budget, ix, iy);
            acc += std::exp(s - t) * v.value;
            if (v.is_upper_bound) approx[i] = 1;
        }
        rows[i] = acc * h * h;
    });
    MetricValue out;
    for (std::size_t i = 0; i < N; ++i) {
        out.value += rows[i];
        out.is_upper_bound = out.is_upper_bound || approx[i];
    }
    out.value = std::min(out.value, 1.0);
    out.tail_error = 2.0 * std::exp(-budget.s_max);
    return out;
}

MetricValue d_minus_j1(const SampledPath& x, const SampledPath& y, const SearchBudget& budget) {
    if (!is_stopped(x) || !is_stopped(y)) throw PathError(Errc::NotStopped, "d_minus_j1 needs stopped paths");
    if (!(budget.s_max > 0) || !(budget.quad_step > 0)) throw PathError(Errc::InvalidArgument, "bad quadrature budget");
    const auto N = static_cast<std::size_t>(std::ceil(budget.s_max / budget.quad_step - 1e-9));
    const double h = budget.s_max / static_cast<double>(N);
    const StepIndex ix = build_steps(x), iy = build_steps(y);
    std::vector<double> vals(N, 0.0);
    std::vector<char> approx(N, 0);
    parallel_for(N, [&](std::size_t j) {
        const double t = (static_cast<double>(j) + 0.5) * h;
        const MetricValue v = d_ab_core(x, y, -t, 0.0, budget, ix, iy);
        vals[j] = std::exp(-t) * v.value * h;
        approx[j] = v.is_upper_bound;
    });
    MetricValue out;
    for (std::size_t j = 0; j < N; ++j) {
        out.value += vals[j];
        out.is_upper_bound = out.is_upper_bound || approx[j];
    }
    out.value = std::min(out.value, 1.0);
    out.tail_error = std::exp(-budget.s_max);
    return out;
}

double modulus(const SampledPath& x, double delta, double T) {
    if (!(delta > 0) || !(delta < 2 * T)) throw PathError(Errc::OutOfRange, "modulus needs 0 < delta < 2T");
    const double dt = x.dt();
    const std::int64_t kT = grid_steps(T, dt);
    const auto m = static_cast<std::int64_t>(std::ceil(delta / dt - kGridTol));
    const std::int64_t N = 2 * kT;  // nodes 0..N cover [-T, T]
    const std::size_t d = x.dim();
    auto node = [&](std::int64_t i) { return x.node_at_index(i - kT); };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best(static_cast<std::size_t>(N + 1), inf);
    best[0] = 0;
    for (std::int64_t j = m; j <= N; ++j) {
        // Cell [t_i, t_j) holds nodes i..j-1; grow it leftwards from j-1.
        double osc = 0, mn = inf, mx = -inf;
        double out = inf;
        for (std::int64_t i = j - 1; i >= 0; --i) {
            auto p = node(i);
            if (d == 1) {
                mn = std::min(mn, p[0]);
                mx = std::max(mx, p[0]);
                osc = std::min(1.0, mx - mn);
            } else {
                for (std::int64_t k = i + 1; k < j && osc < 1.0; ++k) osc = std::max(osc, d_state(p, node(k)));
            }
            if (j - i >= m && best[static_cast<std::size_t>(i)] < inf)
                out = std::min(out, std::max(best[static_cast<std::size_t>(i)], osc));
        }
        best[static_cast<std::size_t>(j)] = out;
    }
    return best[static_cast<std::size_t>(N)];
}

double f_delta_bound(double delta, double t) {
    const double at = std::abs(t);
    if (!(delta > 0) || !(at < delta)) throw PathError(Errc::OutOfRange, "f_delta_bound needs |t| < delta");
    return std::max(std::log(delta / (delta - at)), std::log1p(at / delta));
}

} // namespace pathsg
