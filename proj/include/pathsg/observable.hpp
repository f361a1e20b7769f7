#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pathsg/path.hpp"

namespace pathsg {

// Bounded test function f : R^d -> R.
class TestFunction {
public:
    enum class Kind { Coordinate, Cosine, GaussianBump, BoundedPolynomial, User };
    using Fn = std::function<double(std::span<const double>)>;
    using Grad = std::function<void(std::span<const double>, std::span<double>)>;

    TestFunction() = default;
    static TestFunction coordinate(std::size_t index, double clamp = std::numeric_limits<double>::infinity());
    static TestFunction cosine(std::vector<double> freq);
    static TestFunction gaussian_bump(std::vector<double> center, double width);
    // p(clamp(x_index)) with p(u) = sum coeffs[k] u^k
    static TestFunction polynomial(std::size_t index, std::vector<double> coeffs, double clamp);
    static TestFunction user(Fn fn, double bound, Grad grad = {});
    static TestFunction one() { return polynomial(0, {1.0}, 1.0); }

    double operator()(std::span<const double> x) const;
    bool has_gradient() const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    double bound() const { return bound_; }
    Kind kind() const { return kind_; }
    std::size_t index() const { return index_; }
    const std::vector<double>& params() const { return params_; }
    double scalar() const { return scalar_; }

    friend bool operator==(const TestFunction& a, const TestFunction& b);

private:
    Kind kind_ = Kind::Coordinate;
    std::size_t index_ = 0;
    std::vector<double> params_;  // frequencies / center / coefficients
    double scalar_ = 0;           // clamp or width
    double bound_ = 0;
    std::shared_ptr<const Fn> fn_;
    std::shared_ptr<const Grad> grad_;
};

// Largest gap between the analytic gradient and central differences.
double gradient_fd_error(const TestFunction& f, std::span<const std::vector<double>> probes, double h = 1e-5);

// A cut of the time axis: (t, -1) is t-, (t, 0) is t itself, (t, +1) is t+.
struct Cut {
    double t;
    int side;
    friend bool operator<(const Cut& a, const Cut& b) { return a.t < b.t || (a.t == b.t && a.side < b.side); }
    friend bool operator==(const Cut& a, const Cut& b) { return a.t == b.t && a.side == b.side; }
    friend bool operator<=(const Cut& a, const Cut& b) { return !(b < a); }
};

// Dependence window [lo, hi] in cut order; empty means "depends on nothing".
struct Window {
    bool empty = true;
    Cut lo{0, 0}, hi{0, 0};

    static Window none() { return {}; }
    static Window all();
    static Window point(double t) { return {false, {t, 0}, {t, 0}}; }
    static Window left_of(double t) { return {false, {t, -1}, {t, -1}}; }
    static Window half_open(double a, double b) { return {false, {a, 0}, {b, -1}}; }
    static Window closed(double a, double b) { return {false, {a, 0}, {b, 0}}; }
    static Window before(double t);  // (-inf, t)
    static Window from(double t);    // [t, inf)

    Window hull(const Window& o) const;
    Window translate(double s) const;
    bool contains(const Window& o) const;
    // Node index range [first, last] read when evaluating on a grid of step dt.
    std::pair<std::int64_t, std::int64_t> grid_closure(double dt) const;
    friend bool operator==(const Window& a, const Window& b) {
        return a.empty == b.empty && (a.empty || (a.lo == b.lo && a.hi == b.hi));
    }
};

class Observable;

namespace detail {
enum class NodeKind { Integral, Eval, LeftLim, Product, Sum, Scale, Const, User };
struct Node;
} // namespace detail

class Observable {
public:
    using Kind = detail::NodeKind;
    using UserFn = std::function<double(const SampledPath&)>;

    Observable();  // Const 0
    static Observable integral(TestFunction f, double a, double b);
    static Observable eval(TestFunction f, double t);
    static Observable left_lim(TestFunction f, double t);
    static Observable constant(double c);
    static Observable product(std::vector<Observable> factors);
    static Observable sum(std::vector<Observable> terms);
    static Observable scale(double c, Observable g);
    // The window cannot be inferred; none given means the whole line.
    static Observable user(UserFn fn, double bound, std::optional<Window> window = std::nullopt);

    Kind kind() const;
    const Window& window() const;
    double bound() const;
    const TestFunction& function() const;
    double a() const;  // Integral lower end
    double b() const;  // Integral upper end
    double t() const;  // Eval / LeftLim time
    double c() const;  // Const value or Scale factor
    const std::vector<Observable>& children() const;
    const detail::Node& node() const { return *node_; }

    friend bool operator==(const Observable& x, const Observable& y);
    friend Observable operator*(const Observable& x, const Observable& y) { return product({x, y}); }
    friend Observable operator+(const Observable& x, const Observable& y) { return sum({x, y}); }
    friend Observable operator-(const Observable& x, const Observable& y) { return sum({x, scale(-1.0, y)}); }

private:
    explicit Observable(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::Node> node_;
    friend Observable shift_obs(const Observable&, double);
};

namespace detail {
struct Node {
    NodeKind kind = NodeKind::Const;
    TestFunction f;
    double a = 0, b = 0, t = 0, c = 0;
    std::vector<Observable> children;
    std::shared_ptr<const Observable::UserFn> user;
    double user_shift = 0;
    Window window;
    double bound = 0;
};
} // namespace detail

double apply(const Observable& F, const SampledPath& x);

// Theta_t F. Symbolic translation, valid for any real t.
Observable shift_obs(const Observable& F, double t);
// Same, but insists that t is a multiple of dt (NonGridShift otherwise).
Observable shift_obs(const Observable& F, double t, double dt);

// Product-rule image on the algebra generated by integral nodes.
Observable d0_derivative(const Observable& F);
bool in_d0_domain(const Observable& F);

double check_cocycle(const Observable& F, const SampledPath& x, double t, double quad_step);

bool depends_only_on(const Observable& F, const Window& I);
inline bool past_determined(const Observable& F, double t = 0) { return depends_only_on(F, Window::before(t)); }

// Slow reference for F_t^*(f): n * int_{t-2/n}^{t-1/n} f(x(s)) ds.
double left_lim_reference(const TestFunction& f, const SampledPath& x, double t, int n);

} // namespace pathsg
