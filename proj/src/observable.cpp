#include "pathsg/observable.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pathsg/errors.hpp"

namespace pathsg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clampv(double v, double c) { return std::clamp(v, -c, c); }

void need_dim(std::span<const double> x, std::size_t n) {
    if (x.size() < n)
        throw PathError(Errc::DimensionMismatch, "test function needs dimension " + std::to_string(n));
}

double snap(double u) {
    const double r = std::nearbyint(u);
    return std::abs(u - r) <= kGridTol ? r : u;
}

} // namespace

// ---------------------------------------------------------------- TestFunction

TestFunction TestFunction::coordinate(std::size_t index, double clamp) {
    if (!(clamp > 0)) throw PathError(Errc::InvalidArgument, "coordinate clamp must be positive");
    TestFunction f;
    f.kind_ = Kind::Coordinate;
    f.index_ = index;
    f.scalar_ = clamp;
    f.bound_ = clamp;
    return f;
}

TestFunction TestFunction::cosine(std::vector<double> freq) {
    if (freq.empty()) throw PathError(Errc::InvalidArgument, "cosine needs a frequency vector");
    TestFunction f;
    f.kind_ = Kind::Cosine;
    f.params_ = std::move(freq);
    f.bound_ = 1.0;
    return f;
}

TestFunction TestFunction::gaussian_bump(std::vector<double> center, double width) {
    if (center.empty() || !(width > 0)) throw PathError(Errc::InvalidArgument, "bad gaussian bump");
    TestFunction f;
    f.kind_ = Kind::GaussianBump;
    f.params_ = std::move(center);
    f.scalar_ = width;
    f.bound_ = 1.0;
    return f;
}

TestFunction TestFunction::polynomial(std::size_t index, std::vector<double> coeffs, double clamp) {
    if (coeffs.empty() || !(clamp > 0) || !std::isfinite(clamp))
        throw PathError(Errc::InvalidArgument, "polynomial needs coefficients and a finite clamp");
    TestFunction f;
    f.kind_ = Kind::BoundedPolynomial;
    f.index_ = index;
    f.params_ = std::move(coeffs);
    f.scalar_ = clamp;
    double b = 0, p = 1;
    for (double c : f.params_) {
        b += std::abs(c) * p;
        p *= clamp;
    }
    f.bound_ = b;
    return f;
}

TestFunction TestFunction::user(Fn fn, double bound, Grad grad) {
    if (!fn) throw PathError(Errc::InvalidArgument, "empty user function");
    TestFunction f;
    f.kind_ = Kind::User;
    f.bound_ = bound;
    f.fn_ = std::make_shared<const Fn>(std::move(fn));
    if (grad) f.grad_ = std::make_shared<const Grad>(std::move(grad));
    return f;
}

double TestFunction::operator()(std::span<const double> x) const {
    switch (kind_) {
    case Kind::Coordinate:
        need_dim(x, index_ + 1);
        return clampv(x[index_], scalar_);
    case Kind::Cosine: {
        need_dim(x, params_.size());
        double s = 0;
        for (std::size_t i = 0; i < params_.size(); ++i) s += params_[i] * x[i];
        return std::cos(s);
    }
    case Kind::GaussianBump: {
        need_dim(x, params_.size());
        double r2 = 0;
        for (std::size_t i = 0; i < params_.size(); ++i) r2 += (x[i] - params_[i]) * (x[i] - params_[i]);
        return std::exp(-r2 / (2 * scalar_ * scalar_));
    }
    case Kind::BoundedPolynomial: {
        need_dim(x, index_ + 1);
        const double u = clampv(x[index_], scalar_);
        double v = 0;
        for (std::size_t k = params_.size(); k-- > 0;) v = v * u + params_[k];
        return v;
    }
    case Kind::User:
        return (*fn_)(x);
    }
    return 0;
}

bool TestFunction::has_gradient() const { return kind_ != Kind::User || grad_ != nullptr; }

void TestFunction::gradient(std::span<const double> x, std::span<double> out) const {
    if (out.size() != x.size()) throw PathError(Errc::DimensionMismatch, "gradient buffer size");
    std::fill(out.begin(), out.end(), 0.0);
    switch (kind_) {
    case Kind::Coordinate:
        need_dim(x, index_ + 1);
        if (std::abs(x[index_]) < scalar_) out[index_] = 1.0;
        return;
    case Kind::Cosine: {
        need_dim(x, params_.size());
        double s = 0;
        for (std::size_t i = 0; i < params_.size(); ++i) s += params_[i] * x[i];
        for (std::size_t i = 0; i < params_.size(); ++i) out[i] = -std::sin(s) * params_[i];
        return;
    }
    case Kind::GaussianBump: {
        const double v = (*this)(x);
        for (std::size_t i = 0; i < params_.size(); ++i) out[i] = -(x[i] - params_[i]) / (scalar_ * scalar_) * v;
        return;
    }
    case Kind::BoundedPolynomial: {
        need_dim(x, index_ + 1);
        if (std::abs(x[index_]) >= scalar_) return;
        const double u = x[index_];
        double d = 0;
        for (std::size_t k = params_.size(); k-- > 1;) d = d * u + static_cast<double>(k) * params_[k];
        out[index_] = d;
        return;
    }
    case Kind::User:
        if (!grad_) throw PathError(Errc::InvalidArgument, "user test function has no gradient");
        (*grad_)(x, out);
        return;
    }
}

bool operator==(const TestFunction& a, const TestFunction& b) {
    return a.kind_ == b.kind_ && a.index_ == b.index_ && a.params_ == b.params_ && a.scalar_ == b.scalar_ &&
           a.bound_ == b.bound_ && a.fn_ == b.fn_ && a.grad_ == b.grad_;
}

double gradient_fd_error(const TestFunction& f, std::span<const std::vector<double>> probes, double h) {
    double worst = 0;
    for (const auto& p : probes) {
        std::vector<double> g(p.size()), xp = p, xm = p;
        f.gradient(p, g);
        for (std::size_t i = 0; i < p.size(); ++i) {
            xp[i] = p[i] + h;
            xm[i] = p[i] - h;
            const double fd = (f(xp) - f(xm)) / (2 * h);
            worst = std::max(worst, std::abs(fd - g[i]));
            xp[i] = xm[i] = p[i];
        }
    }
    return worst;
}

// ---------------------------------------------------------------- Window

Window Window::all() { return {false, {-kInf, 0}, {kInf, 0}}; }
Window Window::before(double t) { return {false, {-kInf, 0}, {t, -1}}; }
Window Window::from(double t) { return {false, {t, 0}, {kInf, 0}}; }

Window Window::hull(const Window& o) const {
    if (empty) return o;
    if (o.empty) return *this;
    return {false, std::min(lo, o.lo), std::max(hi, o.hi)};
}

Window Window::translate(double s) const {
    if (empty) return *this;
    return {false, {lo.t + s, lo.side}, {hi.t + s, hi.side}};
}

bool Window::contains(const Window& o) const {
    if (o.empty) return true;
    if (empty) return false;
    return lo <= o.lo && o.hi <= hi;
}

std::pair<std::int64_t, std::int64_t> Window::grid_closure(double dt) const {
    if (empty) return {1, 0};
    constexpr auto lo_max = std::numeric_limits<std::int64_t>::min();
    constexpr auto hi_max = std::numeric_limits<std::int64_t>::max();
    std::int64_t first = lo_max, last = hi_max;
    if (std::isfinite(lo.t)) {
        const double u = snap(lo.t / dt);
        first = static_cast<std::int64_t>(std::floor(u));
        if (lo.side < 0 && u == std::floor(u)) --first;
    }
    if (std::isfinite(hi.t)) {
        const double u = snap(hi.t / dt);
        last = static_cast<std::int64_t>(std::ceil(u));
        if (hi.side > 0 && u == std::ceil(u)) ++last;
    }
    return {first, last};
}

// ---------------------------------------------------------------- Observable

using detail::Node;
using detail::NodeKind;

Observable::Observable() : Observable(constant(0.0)) {}

Observable Observable::integral(TestFunction f, double a, double b) {
    if (!(a <= b)) throw PathError(Errc::InvalidArgument, "integral needs a <= b");
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Integral;
    n->a = a;
    n->b = b;
    n->window = a < b ? Window::half_open(a, b) : Window::none();
    n->bound = a < b ? (b - a) * f.bound() : 0.0;
    n->f = std::move(f);
    return Observable(std::move(n));
}

Observable Observable::eval(TestFunction f, double t) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Eval;
    n->t = t;
    n->window = Window::point(t);
    n->bound = f.bound();
    n->f = std::move(f);
    return Observable(std::move(n));
}

Observable Observable::left_lim(TestFunction f, double t) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::LeftLim;
    n->t = t;
    n->window = Window::left_of(t);
    n->bound = f.bound();
    n->f = std::move(f);
    return Observable(std::move(n));
}

Observable Observable::constant(double c) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Const;
    n->c = c;
    n->bound = std::abs(c);
    return Observable(std::move(n));
}

Observable Observable::product(std::vector<Observable> factors) {
    if (factors.empty()) return constant(1.0);
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Product;
    n->bound = 1.0;
    for (const auto& g : factors) {
        n->window = n->window.hull(g.window());
        n->bound *= g.bound();
    }
    n->children = std::move(factors);
    return Observable(std::move(n));
}

Observable Observable::sum(std::vector<Observable> terms) {
    if (terms.empty()) return constant(0.0);
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Sum;
    for (const auto& g : terms) {
        n->window = n->window.hull(g.window());
        n->bound += g.bound();
    }
    n->children = std::move(terms);
    return Observable(std::move(n));
}

Observable Observable::scale(double c, Observable g) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Scale;
    n->c = c;
    n->window = g.window();
    n->bound = std::abs(c) * g.bound();
    n->children.push_back(std::move(g));
    return Observable(std::move(n));
}

Observable Observable::user(UserFn fn, double bound, std::optional<Window> window) {
    if (!fn) throw PathError(Errc::InvalidArgument, "empty user observable");
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::User;
    n->user = std::make_shared<const UserFn>(std::move(fn));
    n->window = window.value_or(Window::all());
    n->bound = bound;
    return Observable(std::move(n));
}

Observable::Kind Observable::kind() const { return node_->kind; }
const Window& Observable::window() const { return node_->window; }
double Observable::bound() const { return node_->bound; }
const TestFunction& Observable::function() const { return node_->f; }
double Observable::a() const { return node_->a; }
double Observable::b() const { return node_->b; }
double Observable::t() const { return node_->t; }
double Observable::c() const { return node_->c; }
const std::vector<Observable>& Observable::children() const { return node_->children; }

bool operator==(const Observable& x, const Observable& y) {
    if (x.node_ == y.node_) return true;
    const Node& p = *x.node_;
    const Node& q = *y.node_;
    if (p.kind != q.kind || p.children.size() != q.children.size()) return false;
    switch (p.kind) {
    case NodeKind::Integral:
        if (p.a != q.a || p.b != q.b || !(p.f == q.f)) return false;
        break;
    case NodeKind::Eval:
    case NodeKind::LeftLim:
        if (p.t != q.t || !(p.f == q.f)) return false;
        break;
    case NodeKind::Const:
    case NodeKind::Scale:
        if (p.c != q.c) return false;
        break;
    case NodeKind::User:
        if (p.user != q.user || p.user_shift != q.user_shift || !(p.window == q.window)) return false;
        break;
    default:
        break;
    }
    for (std::size_t i = 0; i < p.children.size(); ++i)
        if (!(p.children[i] == q.children[i])) return false;
    return true;
}

// ---------------------------------------------------------------- apply

namespace {

// int_a^b f(x(s)) ds in lattice coordinates. Continuous paths: trapezoid over
// the piecewise-linear interpolant; cadlag paths: exact for the step function.
double integrate(const TestFunction& f, const SampledPath& x, double a, double b) {
    if (a >= b) return 0.0;
    const double dt = x.dt();
    const double ua = snap(a / dt), ub = snap(b / dt);
    const auto k0 = static_cast<std::int64_t>(std::floor(ua));
    const auto k1 = static_cast<std::int64_t>(std::ceil(ub));
    const bool cadlag = x.kind() == PathKind::Cadlag;
    std::vector<double> buf(x.dim());
    auto at = [&](double u, std::int64_t k) {
        // value at lattice position u inside cell [k, k+1]
        if (u == static_cast<double>(k)) return f(x.node_at_index(k));
        if (u == static_cast<double>(k + 1)) return f(x.node_at_index(k + 1));
        const double w = u - static_cast<double>(k);
        auto p = x.node_at_index(k), q = x.node_at_index(k + 1);
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = p[i] + w * (q[i] - p[i]);
        return f(buf);
    };
    double sum = 0.0;
    double f_prev = 0.0;
    bool have_prev = false;
    for (std::int64_t k = k0; k < k1; ++k) {
        const double lo = std::max(ua, static_cast<double>(k));
        const double hi = std::min(ub, static_cast<double>(k + 1));
        const double len = (hi - lo) * dt;
        if (cadlag) {
            sum += f(x.node_at_index(k)) * len;
            continue;
        }
        const double fl = (have_prev && lo == static_cast<double>(k)) ? f_prev : at(lo, k);
        const double fh = at(hi, k);
        sum += 0.5 * (fl + fh) * len;
        f_prev = fh;
        have_prev = hi == static_cast<double>(k + 1);
    }
    return sum;
}

} // namespace

double apply(const Observable& F, const SampledPath& x) {
    const Node& n = F.node();
    switch (n.kind) {
    case NodeKind::Integral:
        return integrate(n.f, x, n.a, n.b);
    case NodeKind::Eval: {
        std::vector<double> buf(x.dim());
        x.evaluate_into(n.t, buf);
        return n.f(buf);
    }
    case NodeKind::LeftLim: {
        std::vector<double> buf(x.dim());
        x.left_limit_into(n.t, buf);
        return n.f(buf);
    }
    case NodeKind::Product: {
        double v = 1.0;
        for (const auto& g : n.children) v *= apply(g, x);
        return v;
    }
    case NodeKind::Sum: {
        double v = 0.0;
        for (const auto& g : n.children) v += apply(g, x);
        return v;
    }
    case NodeKind::Scale:
        return n.c * apply(n.children[0], x);
    case NodeKind::Const:
        return n.c;
    case NodeKind::User:
        if (n.user_shift == 0.0) return (*n.user)(x);
        return (*n.user)(shift(x, n.user_shift));
    }
    return 0.0;
}

// ---------------------------------------------------------------- shift, derivation

Observable shift_obs(const Observable& F, double t) {
    if (t == 0.0) return F;
    const Node& n = F.node();
    switch (n.kind) {
    case NodeKind::Integral:
        return Observable::integral(n.f, n.a + t, n.b + t);
    case NodeKind::Eval:
        return Observable::eval(n.f, n.t + t);
    case NodeKind::LeftLim:
        return Observable::left_lim(n.f, n.t + t);
    case NodeKind::Const:
        return F;
    case NodeKind::Scale:
        return Observable::scale(n.c, shift_obs(n.children[0], t));
    case NodeKind::Product:
    case NodeKind::Sum: {
        std::vector<Observable> ch;
        ch.reserve(n.children.size());
        for (const auto& g : n.children) ch.push_back(shift_obs(g, t));
        return n.kind == NodeKind::Sum ? Observable::sum(std::move(ch)) : Observable::product(std::move(ch));
    }
    case NodeKind::User: {
        auto m = std::make_shared<Node>(n);
        m->user_shift = n.user_shift + t;
        m->window = n.window.translate(t);
        return Observable(std::move(m));
    }
    }
    return F;
}

Observable shift_obs(const Observable& F, double t, double dt) {
    grid_steps(t, dt);
    return shift_obs(F, t);
}

bool in_d0_domain(const Observable& F) {
    switch (F.kind()) {
    case NodeKind::Integral:
    case NodeKind::Const:
        return true;
    case NodeKind::Sum:
    case NodeKind::Product:
    case NodeKind::Scale:
        return std::all_of(F.children().begin(), F.children().end(), in_d0_domain);
    default:
        return false;
    }
}

Observable d0_derivative(const Observable& F) {
    const Node& n = F.node();
    switch (n.kind) {
    case NodeKind::Const:
        return Observable::constant(0.0);
    case NodeKind::Integral:
        return Observable::left_lim(n.f, n.b) - Observable::left_lim(n.f, n.a);
    case NodeKind::Scale:
        return Observable::scale(n.c, d0_derivative(n.children[0]));
    case NodeKind::Sum: {
        std::vector<Observable> ch;
        for (const auto& g : n.children) ch.push_back(d0_derivative(g));
        return Observable::sum(std::move(ch));
    }
    case NodeKind::Product: {
        std::vector<Observable> terms;
        for (std::size_t k = 0; k < n.children.size(); ++k) {
            std::vector<Observable> fac = n.children;
            fac[k] = d0_derivative(n.children[k]);
            terms.push_back(Observable::product(std::move(fac)));
        }
        return Observable::sum(std::move(terms));
    }
    default:
        throw PathError(Errc::NotInD0Domain, "derivation is defined on sums/products of integral nodes only");
    }
}

double check_cocycle(const Observable& F, const SampledPath& x, double t, double quad_step) {
    if (!(t > 0) || !(quad_step > 0)) throw PathError(Errc::InvalidArgument, "check_cocycle needs t > 0, quad_step > 0");
    const Observable G = d0_derivative(F);
    const double lhs = apply(shift_obs(F, t, x.dt()), x) - apply(F, x);
    const auto N = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t / quad_step - 1e-9)));
    const double h = t / static_cast<double>(N);
    double rhs = 0;
    for (std::int64_t i = 0; i < N; ++i) rhs += apply(shift_obs(G, (static_cast<double>(i) + 0.5) * h), x);
    return std::abs(lhs - rhs * h);
}

bool depends_only_on(const Observable& F, const Window& I) { return I.contains(F.window()); }

double left_lim_reference(const TestFunction& f, const SampledPath& x, double t, int n) {
    if (n <= 0) throw PathError(Errc::InvalidArgument, "n must be positive");
    const double dn = static_cast<double>(n);
    return dn * integrate(f, x, t - 2.0 / dn, t - 1.0 / dn);
}

} // namespace pathsg
