#include "pathsg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "pathsg/errors.hpp"
#include "pathsg/io.hpp"
#include "pathsg/rng.hpp"

namespace pathsg {

using nlohmann::json;

namespace {

std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

// Read-only view of a config object that remembers where it sits in the document.
class Node {
public:
    Node(const json& j, std::string ptr) : j_(&j), ptr_(std::move(ptr)) {}

    const json& raw() const { return *j_; }
    const std::string& ptr() const { return ptr_; }
    std::string ptr(const std::string& key) const { return ptr_ + "/" + escape(key); }
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(ptr_, msg); }
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const { throw ConfigError(ptr(key), msg); }

    bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }
    Node child(const std::string& key) const {
        if (!has(key)) fail(key, "missing field");
        return {j_->at(key), ptr(key)};
    }
    Node at(std::size_t i) const { return {j_->at(i), ptr_ + "/" + std::to_string(i)}; }
    std::size_t size() const { return j_->size(); }

    void expect_object() const {
        if (!j_->is_object()) fail("expected an object");
    }
    void allow(std::initializer_list<const char*> keys) const {
        expect_object();
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            bool ok = false;
            for (const char* k : keys) ok = ok || it.key() == k;
            if (!ok) fail(it.key(), "unknown field");
        }
    }

    double as_num() const {
        if (!j_->is_number()) fail("expected a number");
        return j_->get<double>();
    }
    double num(const std::string& key) const { return child(key).as_num(); }
    double num(const std::string& key, double def) const { return has(key) ? num(key) : def; }
    double positive(const std::string& key) const {
        const double v = num(key);
        if (!(v > 0)) fail(key, "must be positive");
        return v;
    }
    std::size_t count(const std::string& key, std::size_t def) const {
        if (!has(key)) return def;
        const json& v = j_->at(key);
        if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) fail(key, "expected a positive integer");
        return v.get<std::size_t>();
    }
    std::uint64_t u64(const std::string& key) const {
        const json& v = child(key).raw();
        if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    std::string as_str() const {
        if (!j_->is_string()) fail("expected a string");
        return j_->get<std::string>();
    }
    std::string str(const std::string& key) const { return child(key).as_str(); }
    std::string str(const std::string& key, const std::string& def) const { return has(key) ? str(key) : def; }
    // a number or an array of numbers
    std::vector<double> nums(const std::string& key) const {
        Node c = child(key);
        if (c.raw().is_number()) return {c.as_num()};
        if (!c.raw().is_array()) c.fail("expected a number or an array of numbers");
        std::vector<double> v;
        for (std::size_t i = 0; i < c.size(); ++i) v.push_back(c.at(i).as_num());
        return v;
    }
    std::vector<std::string> strs(const std::string& key) const {
        Node c = child(key);
        if (!c.raw().is_array()) c.fail("expected an array of names");
        std::vector<std::string> v;
        for (std::size_t i = 0; i < c.size(); ++i) v.push_back(c.at(i).as_str());
        return v;
    }

private:
    const json* j_;
    std::string ptr_;
};

PathKind parse_kind(const Node& n) {
    const std::string k = n.str("kind", "continuous");
    if (k == "continuous") return PathKind::Continuous;
    if (k == "cadlag") return PathKind::Cadlag;
    n.fail("kind", "expected \"continuous\" or \"cadlag\"");
}

// ---------------------------------------------------------------- paths

SampledPath build_path(const Node& n, const std::string& name, double dt, std::uint64_t seed) {
    n.expect_object();
    const std::string type = n.str("type");
    const double t_min = n.num("t_min", -1.0), t_max = n.num("t_max", 0.0);
    if (type != "file" && !(t_min < t_max)) n.fail("t_max", "must exceed t_min");
    auto fn_path = [&](PathKind kind, std::size_t dim, const std::function<StatePoint(double)>& f) {
        try {
            return SampledPath::from_function(kind, t_min, t_max, dt, dim, f);
        } catch (const PathError& e) {
            n.fail(e.what());
        }
    };
    if (type == "constant") {
        n.allow({"type", "value", "t_min", "t_max", "kind"});
        const StatePoint v = n.nums("value");
        return fn_path(parse_kind(n), v.size(), [&](double) { return v; });
    }
    if (type == "linear") {
        n.allow({"type", "slope", "intercept", "t_min", "t_max", "kind"});
        const double s = n.num("slope"), c = n.num("intercept", 0.0);
        return fn_path(parse_kind(n), 1, [&](double t) { return StatePoint{c + s * t}; });
    }
    if (type == "sine") {
        n.allow({"type", "amplitude", "freq", "phase", "offset", "t_min", "t_max", "kind"});
        const double a = n.num("amplitude", 1.0), w = n.num("freq", 1.0), p = n.num("phase", 0.0),
                     c = n.num("offset", 0.0);
        return fn_path(parse_kind(n), 1, [&](double t) { return StatePoint{c + a * std::sin(w * t + p)}; });
    }
    if (type == "piecewise_linear") {
        n.allow({"type", "knots", "t_min", "t_max", "kind"});
        Node k = n.child("knots");
        if (!k.raw().is_array() || k.size() < 1) k.fail("expected [[t, v], ...]");
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < k.size(); ++i) {
            Node p = k.at(i);
            if (!p.raw().is_array() || p.size() != 2) p.fail("expected [t, v]");
            pts.emplace_back(p.at(0).as_num(), p.at(1).as_num());
            if (i > 0 && !(pts[i].first > pts[i - 1].first)) p.fail("knot times must increase");
        }
        return fn_path(parse_kind(n), 1, [&](double t) {
            if (t <= pts.front().first) return StatePoint{pts.front().second};
            for (std::size_t i = 1; i < pts.size(); ++i)
                if (t <= pts[i].first) {
                    const auto [t0, v0] = pts[i - 1];
                    const auto [t1, v1] = pts[i];
                    return StatePoint{v0 + (v1 - v0) * (t - t0) / (t1 - t0)};
                }
            return StatePoint{pts.back().second};
        });
    }
    if (type == "step") {
        n.allow({"type", "v0", "times", "values", "t_min", "t_max"});
        const double v0 = n.num("v0", 0.0);
        const auto times = n.has("times") ? n.nums("times") : std::vector<double>{};
        const auto vals = n.has("values") ? n.nums("values") : std::vector<double>{};
        if (times.size() != vals.size()) n.fail("values", "needs one value per jump time");
        return fn_path(PathKind::Cadlag, 1, [&](double t) {
            double v = v0;
            for (std::size_t i = 0; i < times.size(); ++i)
                if (t >= times[i] - kGridTol * dt) v = vals[i];
            return StatePoint{v};
        });
    }
    if (type == "random_walk") {
        n.allow({"type", "scale", "dim", "seed", "start", "t_min", "t_max", "kind"});
        const double scale = n.num("scale", 1.0);
        const std::size_t dim = n.count("dim", 1);
        const std::uint64_t s = n.has("seed") ? n.u64("seed") : derive_seed(seed, fnv1a(name));
        const NoiseStream ns(s, 0, StreamTag::Aux);
        StatePoint cur(dim, n.num("start", 0.0));
        std::uint64_t step = 0;
        return fn_path(parse_kind(n), dim, [&](double) {
            const StatePoint out = cur;
            for (std::size_t i = 0; i < dim; ++i)
                cur[i] += scale * std::sqrt(dt) * ns.normal(step, static_cast<std::uint32_t>(i));
            ++step;
            return out;
        });
    }
    if (type == "file") {
        n.allow({"type", "file"});
        SampledPath p;
        try {
            p = read_path_file(n.str("file"));
        } catch (const ConfigError& e) {
            n.fail("file", e.what());
        }
        if (std::abs(p.dt() - dt) > kGridTol * dt) n.fail("file", "path step differs from the config dt");
        return p;
    }
    n.fail("type", "unknown path type '" + type + "'");
}

// ---------------------------------------------------------------- coefficients

using Vec = std::span<const double>;
using Out = std::span<double>;

double lag_of(const Node& c) {
    const double d = c.num("delay", 1.0);
    if (!(d > 0)) c.fail("delay", "must be positive");
    return d;
}

DriftSpec build_drift(const Node& c) {
    if (c.raw().is_string()) {
        if (c.as_str() == "zero") return DriftSpec::zero(1);
        c.fail("unknown drift '" + c.as_str() + "'");
    }
    c.expect_object();
    const std::string name = c.str("name");
    const std::size_t dim = c.count("dim", 1);
    const double a = c.num("a", 1.0);
    if (name == "zero") {
        c.allow({"name", "dim"});
        return DriftSpec::zero(dim);
    }
    if (name == "linear") {
        c.allow({"name", "dim", "a"});
        return DriftSpec::pointwise(dim, [a](Vec y, Out o) { for (std::size_t i = 0; i < y.size(); ++i) o[i] = a * y[i]; },
                                    std::abs(a));
    }
    if (name == "sine") {
        c.allow({"name", "dim", "a"});
        return DriftSpec::pointwise(
            dim, [a](Vec y, Out o) { for (std::size_t i = 0; i < y.size(); ++i) o[i] = a * std::sin(y[i]); }, std::abs(a));
    }
    if (name == "linear_delay") {
        c.allow({"name", "dim", "a", "delay"});
        return DriftSpec::discrete_delay(
            dim, [a](Vec y, Out o) { for (std::size_t i = 0; i < y.size(); ++i) o[i] = a * y[i]; }, std::abs(a), lag_of(c));
    }
    if (name == "sine_delay") {
        c.allow({"name", "dim", "a", "delay"});
        return DriftSpec::discrete_delay(
            dim, [a](Vec y, Out o) { for (std::size_t i = 0; i < y.size(); ++i) o[i] = a * std::sin(y[i]); },
            std::abs(a), lag_of(c));
    }
    if (name == "mean_delay") {
        // a times the average of y over [-delay, 0], trapezoid on the grid
        c.allow({"name", "dim", "a", "delay"});
        const double h = lag_of(c);
        return DriftSpec::history(
            dim, h,
            [a](const HistoryView& v, Out o) {
                const std::int64_t H = v.steps();
                for (std::size_t i = 0; i < v.dim(); ++i) {
                    double s = 0.5 * (v.at(-H)[i] + v.at(0)[i]);
                    for (std::int64_t j = -H + 1; j < 0; ++j) s += v.at(j)[i];
                    o[i] = a * s / static_cast<double>(H);
                }
            },
            std::abs(a));
    }
    c.fail("name", "unknown drift '" + name + "'");
}

DiffusionSpec build_diffusion(const Node& c, std::size_t dim) {
    if (c.raw().is_string()) {
        if (c.as_str() == "none") return DiffusionSpec::none(dim);
        c.fail("unknown diffusion '" + c.as_str() + "'");
    }
    c.expect_object();
    const std::string name = c.str("name");
    if (name == "none") {
        c.allow({"name"});
        return DiffusionSpec::none(dim);
    }
    if (name == "constant") {
        c.allow({"name", "sigma"});
        const auto s = c.nums("sigma");
        if (s.size() == 1) {
            std::vector<double> m(dim * dim, 0.0);
            for (std::size_t i = 0; i < dim; ++i) m[i * dim + i] = s[0];
            return DiffusionSpec::constant(dim, dim, m);
        }
        if (s.size() % dim != 0) c.fail("sigma", "matrix size is not a multiple of the dimension");
        return DiffusionSpec::constant(dim, s.size() / dim, s);
    }
    const double s = c.num("sigma", 1.0);
    auto diag = [dim](double v, std::size_t i, Out o) { o[i * dim + i] = v; };
    if (name == "sine") {
        // s (1 + sin(y)/2) on the diagonal, bounded away from 0
        c.allow({"name", "sigma"});
        return DiffusionSpec::pointwise(dim, dim, [s, diag](Vec y, Out o) {
            std::fill(o.begin(), o.end(), 0.0);
            for (std::size_t i = 0; i < y.size(); ++i) diag(s * (1 + 0.5 * std::sin(y[i])), i, o);
        });
    }
    if (name == "sine_delay") {
        c.allow({"name", "sigma", "delay"});
        const double h = lag_of(c);
        return DiffusionSpec::history(dim, dim, h, [s, h, diag](const HistoryView& v, Out o) {
            std::fill(o.begin(), o.end(), 0.0);
            StatePoint y(v.dim());
            v.eval(-h, y);
            for (std::size_t i = 0; i < y.size(); ++i) diag(s * (1 + 0.5 * std::sin(y[i])), i, o);
        });
    }
    c.fail("name", "unknown diffusion '" + name + "'");
}

LevySpec build_levy(const Node& c, std::size_t dim) {
    c.allow({"drift", "cov", "jump_rate", "jumps"});
    LevySpec l;
    l.drift = c.has("drift") ? c.nums("drift") : std::vector<double>(dim, 0.0);
    if (l.drift.size() != dim) c.fail("drift", "dimension differs from the drift coefficient");
    if (c.has("cov")) {
        const auto v = c.nums("cov");
        if (v.size() == 1) {
            l.cov.assign(dim * dim, 0.0);
            for (std::size_t i = 0; i < dim; ++i) l.cov[i * dim + i] = v[0];
        } else if (v.size() == dim * dim) {
            l.cov = v;
        } else {
            c.fail("cov", "expected a variance or a d x d matrix");
        }
    } else {
        l.cov.assign(dim * dim, 0.0);
    }
    l.jump_rate = c.num("jump_rate", 0.0);
    if (l.jump_rate < 0) c.fail("jump_rate", "must be >= 0");
    if (c.has("jumps")) {
        Node j = c.child("jumps");
        const std::string t = j.str("type");
        if (t == "fixed") {
            j.allow({"type", "value"});
            l.jumps = JumpLaw::fixed(j.nums("value"));
        } else if (t == "gaussian") {
            j.allow({"type", "mean", "sd"});
            l.jumps = JumpLaw::gaussian(j.has("mean") ? j.nums("mean") : std::vector<double>(dim, 0.0), j.num("sd"));
        } else {
            j.fail("type", "expected \"fixed\" or \"gaussian\"");
        }
        if (l.jumps.mean.size() != dim) j.fail("jump dimension differs from the drift coefficient");
    } else {
        l.jumps = JumpLaw::fixed(std::vector<double>(dim, 0.0));
    }
    return l;
}

Dynamics build_dynamics(const Node& n, const Built& b) {
    n.allow({"type", "drift", "diffusion", "levy", "T", "initial", "seed"});
    Dynamics d;
    d.type = n.str("type");
    if (d.type != "dde" && d.type != "sde" && d.type != "sdde" && d.type != "levy_delay")
        n.fail("type", "expected dde, sde, sdde or levy_delay");
    d.drift = build_drift(n.child("drift"));
    const std::size_t dim = d.drift.dim;
    d.diffusion = n.has("diffusion") ? build_diffusion(n.child("diffusion"), dim) : DiffusionSpec::none(dim);
    if (d.type == "dde" && d.diffusion.kind != DiffusionSpec::Kind::None) n.fail("diffusion", "a dde has no diffusion");
    if (d.type == "sde" && d.drift.kind != DriftSpec::Kind::Pointwise) n.fail("drift", "sde needs a pointwise drift");
    if (d.type == "sde" && d.diffusion.kind == DiffusionSpec::Kind::History)
        n.fail("diffusion", "sde needs a pointwise diffusion");
    if (d.type == "levy_delay") {
        if (!n.has("levy")) n.fail("levy", "missing field");
        d.levy = build_levy(n.child("levy"), dim);
    } else if (n.has("levy")) {
        n.fail("levy", "only levy_delay dynamics take noise parameters");
    }
    d.T = n.has("T") ? n.positive("T") : 1.0;
    d.initial = n.str("initial", "");
    if (!d.initial.empty() && !b.paths.count(d.initial)) n.fail("initial", "unknown path '" + d.initial + "'");
    d.seed = n.has("seed") ? n.u64("seed") : b.seed;
    return d;
}

// ---------------------------------------------------------------- observables

TestFunction build_function(const Node& n) {
    if (n.raw().is_string()) {
        const std::string s = n.as_str();
        if (s == "one") return TestFunction::one();
        if (s == "cos") return TestFunction::cosine({1.0});
        if (s == "x") return TestFunction::coordinate(0);
        n.fail("unknown test function '" + s + "'");
    }
    n.expect_object();
    const std::string name = n.str("name");
    try {
        if (name == "coordinate") {
            n.allow({"name", "index", "clamp"});
            return TestFunction::coordinate(static_cast<std::size_t>(n.num("index", 0)),
                                            n.num("clamp", std::numeric_limits<double>::infinity()));
        }
        if (name == "cosine") {
            n.allow({"name", "freq"});
            return TestFunction::cosine(n.has("freq") ? n.nums("freq") : std::vector<double>{1.0});
        }
        if (name == "gaussian_bump") {
            n.allow({"name", "center", "width"});
            return TestFunction::gaussian_bump(n.nums("center"), n.num("width", 1.0));
        }
        if (name == "polynomial") {
            n.allow({"name", "index", "coeffs", "clamp"});
            return TestFunction::polynomial(static_cast<std::size_t>(n.num("index", 0)), n.nums("coeffs"), n.num("clamp"));
        }
        if (name == "one") {
            n.allow({"name"});
            return TestFunction::one();
        }
    } catch (const PathError& e) {
        n.fail(e.what());
    }
    n.fail("name", "unknown test function '" + name + "'");
}

class ObservableBuilder {
public:
    ObservableBuilder(const Node& defs, double dt) : defs_(defs), dt_(dt) {}

    Observable named(const std::string& name, const Node& where) {
        if (auto it = done_.find(name); it != done_.end()) return it->second;
        if (!defs_.has(name)) where.fail("unknown observable '" + name + "'");
        if (active_.count(name)) where.fail("observable '" + name + "' refers to itself");
        active_.insert(name);
        Observable o = build(defs_.child(name));
        active_.erase(name);
        done_.emplace(name, o);
        return o;
    }

    Observable build(const Node& n) {
        if (n.raw().is_string()) return named(n.as_str(), n);
        n.expect_object();
        const std::string op = n.str("op");
        try {
            if (op == "integral") {
                n.allow({"op", "f", "a", "b"});
                return Observable::integral(build_function(n.child("f")), n.num("a"), n.num("b"));
            }
            if (op == "eval") {
                n.allow({"op", "f", "t"});
                return Observable::eval(build_function(n.child("f")), n.num("t"));
            }
            if (op == "left_lim") {
                n.allow({"op", "f", "t"});
                return Observable::left_lim(build_function(n.child("f")), n.num("t"));
            }
            if (op == "const") {
                n.allow({"op", "c"});
                return Observable::constant(n.num("c"));
            }
            if (op == "product" || op == "sum") {
                n.allow({"op", "args"});
                Node a = n.child("args");
                if (!a.raw().is_array() || a.size() == 0) a.fail("expected a non-empty array");
                std::vector<Observable> xs;
                for (std::size_t i = 0; i < a.size(); ++i) xs.push_back(build(a.at(i)));
                return op == "product" ? Observable::product(std::move(xs)) : Observable::sum(std::move(xs));
            }
            if (op == "scale") {
                n.allow({"op", "c", "arg"});
                return Observable::scale(n.num("c"), build(n.child("arg")));
            }
            if (op == "shift") {
                n.allow({"op", "t", "arg"});
                return shift_obs(build(n.child("arg")), n.num("t"), dt_);
            }
            if (op == "d0_derivative") {
                n.allow({"op", "arg"});
                return d0_derivative(build(n.child("arg")));
            }
        } catch (const PathError& e) {
            n.fail(e.what());
        }
        n.fail("op", "unknown op '" + op + "'");
    }

private:
    Node defs_;
    double dt_;
    std::map<std::string, Observable> done_;
    std::set<std::string> active_;
};

// ---------------------------------------------------------------- checks

struct Ctx {
    const Built& b;
    const Node& n;

    const ExpectationSpec& spec() const {
        if (!b.spec) n.fail("this check needs an \"expectation\" section");
        return *b.spec;
    }
    const SampledPath& path(const std::string& key) const { return path_named(n.str(key), n.ptr(key)); }
    const SampledPath& path_named(const std::string& name, const std::string& where) const {
        auto it = b.paths.find(name);
        if (it == b.paths.end()) throw ConfigError(where, "unknown path '" + name + "'");
        return it->second;
    }
    std::vector<SampledPath> paths(const std::string& key) const {
        std::vector<SampledPath> v;
        const auto names = n.strs(key);
        for (std::size_t i = 0; i < names.size(); ++i)
            v.push_back(path_named(names[i], n.ptr(key) + "/" + std::to_string(i)));
        if (v.empty()) n.fail(key, "expected at least one path");
        return v;
    }
    std::pair<SampledPath, SampledPath> path_pair(const std::string& key) const {
        auto v = paths(key);
        if (v.size() != 2) n.fail(key, "expected two paths");
        return {v[0], v[1]};
    }
    Observable obs(const std::string& key) const { return obs_named(n.str(key), n.ptr(key)); }
    Observable obs_named(const std::string& name, const std::string& where) const {
        auto it = b.observables.find(name);
        if (it == b.observables.end()) throw ConfigError(where, "unknown observable '" + name + "'");
        return it->second;
    }
    std::vector<Observable> obs_list(const std::string& key) const {
        std::vector<Observable> v;
        const auto names = n.strs(key);
        for (std::size_t i = 0; i < names.size(); ++i)
            v.push_back(obs_named(names[i], n.ptr(key) + "/" + std::to_string(i)));
        return v;
    }
    const Dynamics& dyn(const std::string& key, const char* type) const {
        const std::string name = n.str(key);
        auto it = b.dynamics.find(name);
        if (it == b.dynamics.end()) n.fail(key, "unknown dynamics '" + name + "'");
        if (type && it->second.type != type) n.fail(key, std::string("expected ") + type + " dynamics");
        return it->second;
    }
    NestedBudget nested() const {
        NestedBudget nb;
        nb.n_outer = n.count("n_outer", nb.n_outer);
        nb.n_inner = n.count("n_inner", nb.n_inner);
        return nb;
    }
};

// Closed forms a check may compare against, as functions of t.
double expected_value(const Node& n, double t) {
    Node e = n.child("expected");
    if (e.raw().is_number()) return e.as_num();
    e.expect_object();
    const std::string o = e.str("oracle");
    if (o == "heat_cosine") {
        // E cos(w (x0 + sigma B_t))
        e.allow({"oracle", "x0", "freq", "sigma"});
        const double w = e.num("freq", 1.0), s = e.num("sigma", 1.0);
        return std::exp(-w * w * s * s * t / 2) * std::cos(w * e.num("x0"));
    }
    if (o == "ou_mean") {
        e.allow({"oracle", "x0", "theta"});
        return e.num("x0") * std::exp(-e.num("theta", 1.0) * t);
    }
    e.fail("oracle", "unknown oracle '" + o + "'");
}

using CheckFn = std::function<CheckReport(const Ctx&)>;

const std::map<std::string, std::pair<std::vector<const char*>, CheckFn>>& check_table() {
    static const std::map<std::string, std::pair<std::vector<const char*>, CheckFn>> table = {
        {"expectation_axioms",
         {{"observables", "paths", "tol"},
          [](const Ctx& c) {
              return check_expectation_axioms(c.spec(), c.obs_list("observables"), c.paths("paths"), c.n.num("tol", 0.0));
          }}},
        {"homogeneity",
         {{"observable", "path", "t", "z_tol", "n_outer", "n_inner"},
          [](const Ctx& c) {
              return check_homogeneity(c.spec(), c.obs("observable"), c.path("path"), c.n.num("t"),
                                       c.n.num("z_tol", 4.0), c.nested());
          }}},
        {"semigroup_law",
         {{"observable", "path", "s", "t", "z_tol", "n_outer", "n_inner"},
          [](const Ctx& c) {
              return check_semigroup_law(c.spec(), c.obs("observable"), c.path("path"), c.n.num("s"), c.n.num("t"),
                                         c.n.num("z_tol", 4.0), c.nested());
          }}},
        {"markov_reduction",
         {{"f", "t", "paths", "tol"},
          [](const Ctx& c) {
              auto [x1, x2] = c.path_pair("paths");
              return check_markov_reduction(c.spec(), build_function(c.n.child("f")), c.n.num("t"), x1, x2,
                                            c.n.num("tol", 0.0));
          }}},
        {"finite_delay_invariance",
         {{"observable", "t", "paths", "tol"},
          [](const Ctx& c) {
              auto [x1, x2] = c.path_pair("paths");
              return check_finite_delay_invariance(c.spec(), c.obs("observable"), c.n.num("t"), x1, x2,
                                                   c.n.num("tol", 0.0));
          }}},
        {"multiplicativity",
         {{"observables", "path", "tol"},
          [](const Ctx& c) {
              auto v = c.obs_list("observables");
              if (v.size() != 2) c.n.fail("observables", "expected two observables");
              return check_multiplicativity(c.spec(), v[0], v[1], c.path("path"), c.n.num("tol", 1e-12));
          }}},
        {"simplex_generator",
         {{"functions", "a", "b", "path", "dt_fd", "tol"},
          [](const Ctx& c) {
              Node fs = c.n.child("functions");
              if (!fs.raw().is_array()) fs.fail("expected an array");
              std::vector<TestFunction> f;
              for (std::size_t i = 0; i < fs.size(); ++i) f.push_back(build_function(fs.at(i)));
              return simplex_generator_check(c.spec(), f, c.n.num("a"), c.n.num("b"), c.path("path"),
                                             c.n.num("dt_fd"), c.n.num("tol", 0.0));
          }}},
        {"semigroup_value",
         {{"observable", "path", "t", "expected", "z_tol", "abs_tol"},
          [](const Ctx& c) {
              const double t = c.n.num("t");
              const MCEstimate e = semigroup_apply(c.spec(), t, c.obs("observable"), c.path("path"));
              const double want = expected_value(c.n, t), z_tol = c.n.num("z_tol", 4.0), abs_tol = c.n.num("abs_tol", 0.0);
              CheckItem it;
              it.name = "error";
              it.value = e.mean - want;
              it.se = e.se;
              it.z = e.se > 0 ? it.value / e.se : 0.0;
              it.tolerance = abs_tol;
              it.pass = std::abs(it.value) <= z_tol * e.se + abs_tol;
              it.note = "estimate " + fmt_double(e.mean) + ", expected " + fmt_double(want);
              return CheckReport{"semigroup_value", {it}};
          }}},
        {"generator",
         {{"observable", "path", "t_list", "expected", "tol"},
          [](const Ctx& c) {
              const auto ts = c.n.nums("t_list");
              if (ts.size() < 2) c.n.fail("t_list", "need at least two times");
              const auto rows = generator_probe(c.spec(), c.obs("observable"), c.path("path"), ts);
              const double est = richardson(rows), want = expected_value(c.n, 0.0);
              CheckItem it = residual_item("extrapolated_error", std::abs(est - want), c.n.num("tol"));
              it.note = "extrapolated " + fmt_double(est);
              return CheckReport{"generator", {it}};
          }}},
        {"cocycle",
         {{"observable", "path", "t", "quad_step", "tol"},
          [](const Ctx& c) {
              const double r = check_cocycle(c.obs("observable"), c.path("path"), c.n.num("t"), c.n.num("quad_step"));
              return CheckReport{"cocycle", {residual_item("residual", r, c.n.num("tol"))}};
          }}},
        {"dde_solution",
         {{"dynamics", "expected", "tol"},
          [](const Ctx& c) {
              const Dynamics& d = c.dyn("dynamics", "dde");
              if (d.initial.empty()) c.n.fail("dynamics", "dde needs an initial path");
              Node e = c.n.child("expected");
              if (!e.raw().is_array() || e.size() == 0) e.fail("expected [[t, value], ...]");
              std::vector<std::pair<double, double>> pts;
              double T = 0;
              for (std::size_t i = 0; i < e.size(); ++i) {
                  Node p = e.at(i);
                  if (!p.raw().is_array() || p.size() != 2) p.fail("expected [t, value]");
                  pts.emplace_back(p.at(0).as_num(), p.at(1).as_num());
                  T = std::max(T, pts.back().first);
              }
              const SampledPath y = evolution_map_dde(d.drift, c.b.paths.at(d.initial), T);
              double worst = 0, at = 0;
              for (auto [t, v] : pts) {
                  const double err = std::abs(y.evaluate(t)[0] - v);
                  if (err > worst) {
                      worst = err;
                      at = t;
                  }
              }
              return CheckReport{"dde_solution", {residual_item("max_error", worst, c.n.num("tol"), at)}};
          }}},
        {"evolution_map",
         {{"dynamics", "paths", "t_list", "tol"},
          [](const Ctx& c) {
              const Dynamics& d = c.dyn("dynamics", "dde");
              const double T = d.T;
              const DriftSpec b = d.drift;
              const EvolutionMap phi = [b, T](const SampledPath& x) { return evolution_map_dde(b, x, T); };
              return check_evolution_map(phi, c.paths("paths"), c.n.nums("t_list"), c.n.num("tol"));
          }}},
        {"random_evolution_map",
         {{"dynamics", "paths", "t_list", "c_list", "n_noise", "tol"},
          [](const Ctx& c) {
              const Dynamics& d = c.dyn("dynamics", "levy_delay");
              std::vector<NoisePath> omegas;
              const std::size_t n = c.n.count("n_noise", 4);
              for (std::size_t i = 0; i < n; ++i) omegas.push_back(sample_levy(d.levy, d.T, c.b.dt, d.seed, i));
              std::vector<StatePoint> cs;
              Node cl = c.n.child("c_list");
              if (!cl.raw().is_array()) cl.fail("expected an array of states");
              for (std::size_t i = 0; i < cl.size(); ++i) {
                  Node e = cl.at(i);
                  cs.push_back(e.raw().is_number() ? StatePoint{e.as_num()} : StatePoint{});
                  if (!e.raw().is_number()) {
                      if (!e.raw().is_array()) e.fail("expected a state");
                      for (std::size_t k = 0; k < e.size(); ++k) cs.back().push_back(e.at(k).as_num());
                  }
              }
              const DriftSpec b = d.drift;
              const RandomEvolutionMap phi = [b](const NoisePath& w, const SampledPath& x) {
                  return levy_delay_flow(b, w, x);
              };
              return check_random_evolution_map(phi, omegas, c.paths("paths"), c.n.nums("t_list"), cs, c.n.num("tol"));
          }}},
    };
    return table;
}

std::string environment_string() {
#ifdef __VERSION__
    std::string s = __VERSION__;
#else
    std::string s = "unknown";
#endif
    return s + ";cxx=" + std::to_string(__cplusplus) + ";ptr=" + std::to_string(sizeof(void*));
}

} // namespace

SweepAxis parse_axis(const std::string& s) {
    if (s == "dt") return SweepAxis::Dt;
    if (s == "n_paths") return SweepAxis::NPaths;
    if (s == "t") return SweepAxis::T;
    throw ConfigError("/axis", "unknown sweep axis '" + s + "' (expected dt, n_paths or t)");
}

std::string axis_name(SweepAxis a) {
    switch (a) {
    case SweepAxis::Dt: return "dt";
    case SweepAxis::NPaths: return "n_paths";
    case SweepAxis::T: return "t";
    }
    return "?";
}

Experiment::Experiment(json cfg) : cfg_(std::move(cfg)) {
    const Node root(cfg_, "");
    root.allow({"name", "seed", "dt", "paths", "dynamics", "observables", "expectation", "checks", "output"});
    root.str("name");
    root.u64("seed");
    root.positive("dt");
    Node checks = root.child("checks");
    if (!checks.raw().is_array()) checks.fail("expected an array");
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Node c = checks.at(i);
        c.expect_object();
        const std::string type = c.str("name");
        const auto& table = check_table();
        auto it = table.find(type);
        if (it == table.end()) c.fail("name", "unknown check '" + type + "'");
        for (auto k = c.raw().begin(); k != c.raw().end(); ++k) {
            if (k.key() == "name" || k.key() == "label") continue;
            bool ok = false;
            for (const char* a : it->second.first) ok = ok || k.key() == a;
            if (!ok) c.fail(k.key(), "unknown parameter for " + type);
        }
    }
    if (root.has("output")) {
        Node o = root.child("output");
        o.allow({"csv", "json"});
        if (o.has("csv")) o.str("csv");
        if (o.has("json")) o.str("json");
    }
    build();  // resolves every name
}

Experiment Experiment::from_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("", "cannot open " + file);
    try {
        return Experiment(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("", file + ": " + e.what());
    }
}

std::string Experiment::name() const { return cfg_.at("name").get<std::string>(); }
std::uint64_t Experiment::seed() const { return cfg_.at("seed").get<std::uint64_t>(); }
std::uint64_t Experiment::digest() const { return fnv1a(cfg_.dump()); }

std::optional<std::string> Experiment::csv_output() const {
    if (cfg_.contains("output") && cfg_["output"].contains("csv")) return cfg_["output"]["csv"].get<std::string>();
    return std::nullopt;
}

std::optional<std::string> Experiment::json_output() const {
    if (cfg_.contains("output") && cfg_["output"].contains("json")) return cfg_["output"]["json"].get<std::string>();
    return std::nullopt;
}

Built Experiment::build(const Overrides& o) const {
    const Node root(cfg_, "");
    Built b;
    b.seed = seed();
    b.dt = o.dt ? *o.dt : root.num("dt");
    if (!(b.dt > 0)) throw ConfigError("/dt", "must be positive");
    if (root.has("paths")) {
        Node ps = root.child("paths");
        ps.expect_object();
        for (auto it = ps.raw().begin(); it != ps.raw().end(); ++it)
            b.paths.emplace(it.key(), build_path(ps.child(it.key()), it.key(), b.dt, b.seed));
    }
    if (root.has("dynamics")) {
        Node ds = root.child("dynamics");
        ds.expect_object();
        for (auto it = ds.raw().begin(); it != ds.raw().end(); ++it)
            b.dynamics.emplace(it.key(), build_dynamics(ds.child(it.key()), b));
    }
    if (root.has("observables")) {
        Node os = root.child("observables");
        os.expect_object();
        ObservableBuilder ob(os, b.dt);
        for (auto it = os.raw().begin(); it != os.raw().end(); ++it)
            b.observables.emplace(it.key(), ob.named(it.key(), os.child(it.key())));
    }
    if (root.has("expectation")) {
        Node e = root.child("expectation");
        e.allow({"dynamics", "n_paths", "horizon", "seed", "picard"});
        const std::string dn = e.str("dynamics");
        auto it = b.dynamics.find(dn);
        if (it == b.dynamics.end()) e.fail("dynamics", "unknown dynamics '" + dn + "'");
        const Dynamics& d = it->second;
        MCBudget mc;
        mc.n_paths = o.n_paths ? *o.n_paths : e.count("n_paths", mc.n_paths);
        mc.seed = e.has("seed") ? e.u64("seed") : b.seed;
        mc.dt = b.dt;
        mc.horizon = e.has("horizon") ? e.positive("horizon") : d.T;
        if (d.type == "dde") {
            DdeOptions opt;
            opt.picard = static_cast<int>(e.num("picard", opt.picard));
            b.spec = ExpectationSpec::deterministic(d.drift, mc, opt);
        } else if (d.type == "sde") {
            b.spec = ExpectationSpec::markov(d.drift, d.diffusion, mc);
        } else if (d.type == "sdde") {
            b.spec = ExpectationSpec::delay(d.drift, d.diffusion, mc);
        } else {
            b.spec = ExpectationSpec::levy_flow(d.drift, d.levy, mc);
        }
    }
    return b;
}

RunReport Experiment::run(const Overrides& o) const {
    const auto t0 = std::chrono::steady_clock::now();
    const Built b = build(o);
    RunReport r;
    r.name = name();
    r.seed = b.seed;
    r.config_digest = digest();
    const json& checks = cfg_.at("checks");
    const std::string base = (cfg_.contains("expectation") ? cfg_["expectation"].dump() : "") + "|" +
                             std::to_string(b.seed) + "|" + fmt_double(b.dt) + "|" +
                             (o.n_paths ? std::to_string(*o.n_paths) : "");
    for (std::size_t i = 0; i < checks.size(); ++i) {
        json cj = checks[i];
        if (o.t && cj.contains("t")) cj["t"] = *o.t;
        const Node n(cj, "/checks/" + std::to_string(i));
        CheckResult res;
        res.type = cj.at("name").get<std::string>();
        res.name = cj.contains("label") ? cj["label"].get<std::string>() : res.type;
        res.inputs_digest = fnv1a(cj.dump() + "|" + base);
        try {
            res.report = check_table().at(res.type).second(Ctx{b, n});
        } catch (const PathError& e) {
            res.error = e.what();
        }
        r.checks.push_back(std::move(res));
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<SweepRow> Experiment::sweep(SweepAxis axis, const std::vector<double>& values) const {
    if (axis == SweepAxis::T) {
        bool any = false;
        for (const auto& c : cfg_.at("checks")) any = any || c.contains("t");
        if (!any) throw ConfigError("/checks", "no check has a \"t\" parameter to sweep");
    }
    if (axis == SweepAxis::NPaths && !cfg_.contains("expectation"))
        throw ConfigError("/expectation", "n_paths sweep needs an expectation section");
    std::vector<SweepRow> rows;
    for (double v : values) {
        Overrides o;
        switch (axis) {
        case SweepAxis::Dt:
            if (!(v > 0)) throw ConfigError("/values", "dt values must be positive");
            o.dt = v;
            break;
        case SweepAxis::NPaths:
            if (!(v >= 1) || v != std::floor(v)) throw ConfigError("/values", "n_paths values must be positive integers");
            o.n_paths = static_cast<std::size_t>(v);
            break;
        case SweepAxis::T:
            o.t = v;
            break;
        }
        const RunReport r = run(o);
        for (const auto& c : r.checks) {
            if (!c.error.empty()) {
                CheckItem e;
                e.name = "error";
                e.value = NAN;
                e.pass = false;
                e.note = c.error;
                rows.push_back({v, c.name, e});
                continue;
            }
            for (const auto& it : c.report.items) rows.push_back({v, c.name, it});
        }
    }
    return rows;
}

const Dynamics& Experiment::pick(const Built& b, const std::string& name, const char* what) const {
    if (!name.empty()) {
        auto it = b.dynamics.find(name);
        if (it == b.dynamics.end()) throw ConfigError("/dynamics", "unknown dynamics '" + name + "'");
        return it->second;
    }
    const Dynamics* found = nullptr;
    for (const auto& [k, d] : b.dynamics) {
        const bool match = std::string(what) == "dde" ? d.type == "dde" : d.type != "dde";
        if (!match) continue;
        if (found) throw ConfigError("/dynamics", std::string("several ") + what + " entries; pick one by name");
        found = &d;
    }
    if (!found) throw ConfigError("/dynamics", std::string("no ") + what + " dynamics in the config");
    return *found;
}

SampledPath Experiment::solve_dde(const std::string& dynamics) const {
    const Built b = build();
    const Dynamics& d = pick(b, dynamics, "dde");
    if (d.type != "dde") throw ConfigError("/dynamics", "solve-dde needs dde dynamics");
    if (d.initial.empty()) throw ConfigError("/dynamics", "dde dynamics need an \"initial\" path");
    return evolution_map_dde(d.drift, b.paths.at(d.initial), d.T);
}

SampledPath Experiment::simulate(const std::string& dynamics, std::uint64_t trajectory) const {
    const Built b = build();
    const Dynamics& d = pick(b, dynamics, "stochastic");
    if (d.initial.empty()) throw ConfigError("/dynamics", "dynamics need an \"initial\" path");
    const SampledPath& x = b.paths.at(d.initial);
    const NoiseRef noise{NoiseStream(d.seed, trajectory), 0};
    if (d.type == "sde") return concat(stop(x), simulate_sde(d.drift, d.diffusion, value_at_zero_star(x), d.T, b.dt, noise));
    if (d.type == "sdde") {
        const SampledPath s = stop(x);
        double h = std::max(d.drift.h, d.diffusion.h);
        h = std::max(1.0, std::ceil(h / b.dt - kGridTol)) * b.dt;
        return concat(s, simulate_sdde(d.drift, d.diffusion, past_segment(s, 0.0, h), d.T, b.dt, noise));
    }
    if (d.type == "levy_delay") return levy_delay_flow(d.drift, sample_levy(d.levy, d.T, b.dt, d.seed, trajectory), x);
    throw ConfigError("/dynamics", "simulate needs sde, sdde or levy_delay dynamics");
}

namespace {

void csv_item(std::ostringstream& os, const CheckItem& it) {
    os << it.name << ',' << fmt_double(it.value) << ',' << fmt_double(it.se) << ',';
    if (it.z) os << fmt_double(*it.z);
    os << ',' << fmt_double(it.tolerance) << ',' << (it.pass ? "true" : "false") << '\n';
}

} // namespace

std::string run_csv(const RunReport& r) {
    std::ostringstream os;
    os << "check,item,value,stderr,z,tolerance,pass\n";
    for (const auto& c : r.checks) {
        if (!c.error.empty()) {
            os << c.name << ",error,nan,0,,0,false\n";
            continue;
        }
        for (const auto& it : c.report.items) {
            os << c.name << ',';
            csv_item(os, it);
        }
    }
    return os.str();
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << axis_name(axis) << ",check,item,value,stderr,z,tolerance,pass\n";
    for (const auto& r : rows) {
        os << fmt_double(r.axis_value) << ',' << r.check << ',';
        csv_item(os, r.item);
    }
    return os.str();
}

json run_json(const RunReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        json j{{"name", c.name}, {"type", c.type}, {"inputs_digest", hex64(c.inputs_digest)}, {"pass", c.pass()}};
        if (!c.error.empty()) j["error"] = c.error;
        json items = json::array();
        for (const auto& it : c.report.items) items.push_back(item_to_json(it));
        j["items"] = std::move(items);
        checks.push_back(std::move(j));
    }
    const std::string env = environment_string();
    return {{"name", r.name},
            {"seed", r.seed},
            {"config_digest", hex64(r.config_digest)},
            {"environment", env},
            {"environment_digest", hex64(fnv1a(env))},
            {"pass", r.pass()},
            {"wall_time_s", r.wall_time},
            {"checks", std::move(checks)}};
}

} // namespace pathsg
