#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pathsg/errors.hpp"
#include "pathsg/observable.hpp"

using namespace pathsg;
using namespace testutil;

namespace {
const TestFunction id = TestFunction::coordinate(0);
const TestFunction cos1 = TestFunction::cosine({1.0});
} // namespace

TEST_CASE("apply on the basic nodes") {
    auto x = linear_path(-1, 2, 0.01);
    CHECK(apply(Observable::integral(id, 0, 1), x) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(apply(Observable::eval(cos1, 0), x) == 1.0);
    auto s = unit_step(0, -1, 1, 0.01);
    CHECK(apply(Observable::left_lim(id, 0), s) == 0.0);
    CHECK(apply(Observable::eval(id, 0), s) == 1.0);
    // off-grid ends: linear path, trapezoid on linear interpolant is exact
    CHECK(apply(Observable::integral(id, 0.123, 0.777), x) == doctest::Approx((0.777 * 0.777 - 0.123 * 0.123) / 2));
    // cadlag: exact for the step function
    auto st = step_path(-1, 2, 0.01, 0.0, {0.25, 0.5}, {2.0, -1.0});
    CHECK(apply(Observable::integral(id, 0, 1), st) == doctest::Approx(0.25 * 2.0 - 0.5));
    CHECK(apply(Observable::integral(id, 0.2, 0.255), st) == doctest::Approx(0.005 * 2.0));
    // constant extrapolation outside the sampled window
    CHECK(apply(Observable::integral(id, 2, 4), x) == doctest::Approx(4.0));
    CHECK_THROWS_AS(Observable::integral(id, 1, 0), PathError);
    CHECK(apply(Observable::integral(id, 0.5, 0.5), x) == 0.0);
}

TEST_CASE("test functions: bounds and gradients") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4, 4);
    std::vector<TestFunction> fs{TestFunction::coordinate(1, 2.0), TestFunction::cosine({0.7, -1.3}),
                                 TestFunction::gaussian_bump({0.2, -0.1}, 0.8),
                                 TestFunction::polynomial(0, {0.5, -1.0, 0.25}, 1.5)};
    std::vector<std::vector<double>> probes;
    for (int i = 0; i < 40; ++i) probes.push_back({u(rng), u(rng)});
    // keep probes away from the clamp kinks
    std::erase_if(probes, [](const auto& p) {
        return std::abs(std::abs(p[0]) - 1.5) < 1e-3 || std::abs(std::abs(p[1]) - 2.0) < 1e-3;
    });
    for (const auto& f : fs) {
        CHECK(gradient_fd_error(f, probes) < 1e-4);
        for (const auto& p : probes) CHECK(std::abs(f(p)) <= f.bound());
    }
    CHECK(fs[3].bound() == doctest::Approx(0.5 + 1.5 + 0.25 * 2.25));
    auto user = TestFunction::user([](std::span<const double> x) { return std::tanh(x[0]); }, 1.0,
                                   [](std::span<const double> x, std::span<double> g) {
                                       g[0] = 1 - std::tanh(x[0]) * std::tanh(x[0]);
                                   });
    CHECK(gradient_fd_error(user, probes) < 1e-4);
    CHECK_FALSE(TestFunction::user([](std::span<const double>) { return 0.0; }, 0.0).has_gradient());
}

TEST_CASE("left limit agrees with the integral-average reference") {
    std::mt19937_64 rng(5);
    for (auto kind : {PathKind::Continuous, PathKind::Cadlag}) {
        auto x = random_path(rng, kind, -2, 2, 0.01);
        for (double t : {0.0, 0.37, -1.0, 0.505}) {
            const double lim = apply(Observable::left_lim(cos1, t), x);
            const double ref = left_lim_reference(cos1, x, t, 1 << 20);
            CHECK(ref == doctest::Approx(lim).epsilon(1e-4));
        }
    }
    auto s = unit_step(0, -1, 1, 0.01);
    CHECK(left_lim_reference(id, s, 0, 1000) == 0.0);
}

TEST_CASE("shift acts on node times") {
    auto F = Observable::integral(cos1, -0.5, 0.25);
    CHECK(shift_obs(F, 0.75) == Observable::integral(cos1, 0.25, 1.0));
    CHECK(shift_obs(F, 0) == F);
    CHECK(shift_obs(F, 0.1).window() == F.window().translate(0.1));
    CHECK_THROWS_AS(shift_obs(F, 0.015, 0.01), PathError);
    CHECK(shift_obs(Observable::left_lim(id, 0), 1.0) == Observable::left_lim(id, 1.0));
}

TEST_CASE("apply(shift_obs(F, t), x) == apply(F, shift(x, t)) bit-exactly") {
    std::mt19937_64 rng(11);
    const double dt = 0.01;
    std::uniform_int_distribution<int> kt(-100, 100);
    for (int rep = 0; rep < 200; ++rep) {
        const auto kind = rep % 2 ? PathKind::Cadlag : PathKind::Continuous;
        auto x = random_path(rng, kind, -4, 4, dt);
        auto F = random_observable(rng, -2, 2, dt, 3);
        const double t = kt(rng) * dt;
        REQUIRE(apply(shift_obs(F, t, dt), x) == apply(F, shift(x, t)));
    }
}

TEST_CASE("user closures shift by shifting the path") {
    auto G = Observable::user([](const SampledPath& p) { return p.evaluate(0.5)[0]; }, 10.0, Window::point(0.5));
    auto x = linear_path(-2, 2, 0.01);
    CHECK(apply(shift_obs(G, 0.25), x) == doctest::Approx(0.75));
    CHECK(shift_obs(G, 0.25).window() == Window::point(0.75));
    auto H = Observable::user([](const SampledPath&) { return 1.0; }, 1.0);
    CHECK(H.window() == Window::all());
    CHECK_FALSE(past_determined(H));
}

TEST_CASE("derivation rules") {
    auto F = Observable::integral(cos1, -1, 0.5);
    auto G = Observable::integral(id, 0, 1);
    CHECK(d0_derivative(F) == Observable::left_lim(cos1, 0.5) - Observable::left_lim(cos1, -1));
    CHECK(d0_derivative(F * G) == d0_derivative(F) * G + F * d0_derivative(G));
    CHECK(d0_derivative(Observable::constant(3.0)) == Observable::constant(0.0));
    CHECK_THROWS_AS(d0_derivative(F * Observable::eval(id, 0)), PathError);
    CHECK_THROWS_AS(d0_derivative(Observable::left_lim(id, 0)), PathError);
    CHECK_FALSE(in_d0_domain(Observable::user([](const SampledPath&) { return 0.0; }, 0.0)));
    // window of the image comes from the left-limit nodes
    CHECK(d0_derivative(F).window() == Window{false, {-1, -1}, {0.5, -1}});

    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        auto x = random_path(rng, rep % 2 ? PathKind::Cadlag : PathKind::Continuous, -3, 3, 0.01);
        auto A = random_observable(rng, -2, 2, 0.01, 2, true);
        auto B = random_observable(rng, -2, 2, 0.01, 2, true);
        const double lhs = apply(d0_derivative(A * B), x);
        const double rhs = apply(d0_derivative(A) * B + A * d0_derivative(B), x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("cocycle residual") {
    auto x = linear_path(-2, 3, 0.001);
    auto F = Observable::integral(id, 0, 1);
    CHECK(check_cocycle(F, x, 0.5, 1e-2) < 1e-10);
    CHECK(check_cocycle(Observable::constant(2.0), x, 0.5, 1e-2) == 0.0);
    CHECK_THROWS_AS(check_cocycle(Observable::eval(id, 0), x, 0.5, 1e-2), PathError);

    auto smooth = SampledPath::from_function(PathKind::Continuous, -3, 3, 0.001, 1,
                                             [](double t) { return StatePoint{std::sin(2 * t) + 0.3 * t}; });
    auto P = Observable::integral(cos1, 0, 1) * Observable::integral(TestFunction::gaussian_bump({0}, 0.7), -1, 0);
    const double r_coarse = check_cocycle(P, smooth, 0.5, 1e-2);
    const double r_fine = check_cocycle(P, smooth, 0.5, 1e-3);
    CHECK(r_fine < 1e-3);
    CHECK(r_fine <= r_coarse);
}

TEST_CASE("dependence windows") {
    auto f = cos1;
    CHECK(depends_only_on(Observable::integral(f, -2, -1), Window::before(0)));
    CHECK_FALSE(depends_only_on(Observable::eval(f, 1), Window::before(0)));
    CHECK(depends_only_on(Observable::left_lim(f, 0), Window::before(0)));
    CHECK_FALSE(depends_only_on(Observable::eval(f, 0), Window::before(0)));
    CHECK(depends_only_on(Observable::integral(f, -1, 0), Window::before(0)));
    CHECK(depends_only_on(Observable::constant(1), Window::none()));
    CHECK(depends_only_on(Observable::eval(f, 1), Window::from(0)));
    auto P = Observable::integral(f, -2, -1) * Observable::eval(f, 1);
    CHECK(P.window() == Window{false, {-2, 0}, {1, 0}});
}

TEST_CASE("window soundness and stop invariance on random pairs") {
    std::mt19937_64 rng(17);
    const double dt = 0.01;
    std::normal_distribution<double> g(0, 1);
    int past_cases = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const auto kind = rep % 2 ? PathKind::Cadlag : PathKind::Continuous;
        auto x = random_path(rng, kind, -3, 3, dt);
        auto F = random_observable(rng, -2, 2, dt, 3);
        auto [k0, k1] = F.window().grid_closure(dt);
        auto vals = x.values();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto k = x.first_index() + static_cast<std::int64_t>(i);
            if (k < k0 || k > k1) vals[i] += g(rng);
        }
        SampledPath y(kind, x.first_index(), dt, 1, vals);
        REQUIRE(apply(F, x) == apply(F, y));
        CHECK(std::abs(apply(F, x)) <= F.bound() * (1 + 1e-12));
        if (past_determined(F)) {
            ++past_cases;
            REQUIRE(apply(F, x) == apply(F, stop(x)));
        }
    }
    CHECK(past_cases > 20);
}
