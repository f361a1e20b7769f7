#include <cmath>
#include <cstdlib>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pathsg/errors.hpp"
#include "pathsg/semigroup.hpp"

using namespace pathsg;

namespace {

DriftSpec zero_drift() { return DriftSpec::zero(1); }
DiffusionSpec unit_noise() { return DiffusionSpec::constant(1, 1, {1.0}); }

DriftSpec decay() {
    return DriftSpec::pointwise(1, [](std::span<const double> y, std::span<double> o) { o[0] = -y[0]; }, 1.0);
}

DriftSpec delayed_decay() {
    return DriftSpec::discrete_delay(1, [](std::span<const double> y, std::span<double> o) { o[0] = -y[0]; }, 1.0);
}

ExpectationSpec brownian(std::size_t n, double dt = 1e-2, double horizon = 2.0, std::uint64_t seed = 7) {
    return ExpectationSpec::markov(zero_drift(), unit_noise(), MCBudget{n, seed, dt, horizon});
}

SampledPath const_path(double v, double lo = -1.5, double dt = 1e-2) {
    return SampledPath::constant(PathKind::Continuous, lo, 0.0, dt, {v});
}

TestFunction cos1() { return TestFunction::cosine({1.0}); }
TestFunction coord() { return TestFunction::coordinate(0); }

bool within(double est, double se, double truth, double k = 4.5) { return std::abs(est - truth) <= k * se + 1e-12; }

} // namespace

TEST_CASE("expectation against closed forms") {
    SUBCASE("Brownian cosine") {
        const auto spec = brownian(20000);
        for (double t : {0.25, 1.0}) {
            const MCEstimate e = expectation(spec, Observable::eval(cos1(), t), const_path(0.0));
            CHECK(e.n == 20000);
            CHECK(within(e.mean, e.se, std::exp(-t / 2)));
        }
    }
    SUBCASE("Brownian occupation integral") {
        const auto spec = brownian(20000, 1e-2, 1.0);
        const auto F = Observable::integral(TestFunction::polynomial(0, {0, 0, 1}, 100.0), 0.0, 1.0);
        const MCEstimate e = expectation(spec, F, const_path(0.0));
        CHECK(within(e.mean, e.se, 0.5));
    }
    SUBCASE("deterministic decay") {
        const auto spec = ExpectationSpec::deterministic(decay(), MCBudget{500, 1, 1e-3, 1.0});
        const MCEstimate e = expectation(spec, Observable::eval(coord(), 1.0), const_path(1.0, -1.0, 1e-3));
        CHECK(e.n == 1);
        CHECK(e.se == 0);
        CHECK(std::abs(e.mean - std::exp(-1.0)) < 1e-3);
    }
    SUBCASE("delay kind with a frozen past") {
        // y' = -y(t-1), y = 1 on [-1, 0]: y(t) = 1 - t on [0, 1]
        const auto spec = ExpectationSpec::delay(delayed_decay(), DiffusionSpec::none(1), MCBudget{3, 1, 1e-2, 1.0});
        const MCEstimate e = expectation(spec, Observable::eval(coord(), 1.0), const_path(1.0));
        CHECK(std::abs(e.mean) < 1e-9);
        CHECK(e.se == 0);
    }
}

TEST_CASE("past-determined observables are evaluated without sampling") {
    const auto spec = brownian(50);
    std::mt19937_64 rng(3);
    const auto x = testutil::random_path(rng, PathKind::Cadlag, -1.5, 0.0, 1e-2);
    const auto F = Observable::integral(cos1(), -1.0, 0.0) * Observable::left_lim(coord(), 0.0);
    const MCEstimate e = expectation(spec, F, x);
    CHECK(e.n == 0);
    CHECK(e.mean == apply(F, x));
    CHECK(expectation(spec, Observable::constant(1.0), x).mean == 1.0);
}

TEST_CASE("horizon and grid guards") {
    const auto spec = brownian(10, 1e-2, 1.0);
    const auto x = const_path(0.0);
    try {
        expectation(spec, Observable::eval(cos1(), 1.5), x);
        FAIL("expected HorizonExceeded");
    } catch (const PathError& e) {
        CHECK(e.code() == Errc::HorizonExceeded);
    }
    try {
        expectation(spec, Observable::user([](const SampledPath&) { return 0.0; }, 1.0), x);
        FAIL("expected HorizonExceeded");
    } catch (const PathError& e) {
        CHECK(e.code() == Errc::HorizonExceeded);
    }
    try {
        expectation(spec, Observable::eval(cos1(), 0.5), const_path(0.0, -1.0, 2e-2));
        FAIL("expected GridMismatch");
    } catch (const PathError& e) {
        CHECK(e.code() == Errc::GridMismatch);
    }
    try {
        semigroup_apply(spec, 0.5, Observable::eval(cos1(), 0.1), x);
        FAIL("expected NotPastDetermined");
    } catch (const PathError& e) {
        CHECK(e.code() == Errc::NotPastDetermined);
    }
}

TEST_CASE("expectation axioms hold exactly") {
    std::mt19937_64 rng(11);
    std::vector<SampledPath> paths;
    for (int i = 0; i < 3; ++i) paths.push_back(testutil::random_path(rng, PathKind::Cadlag, -1.5, 0.6, 1e-2));
    paths.push_back(testutil::random_path(rng, PathKind::Continuous, -1.5, 0.6, 1e-2));
    std::vector<Observable> Fs{
        Observable::eval(cos1(), 0.5),
        Observable::integral(coord(), -0.5, 0.8),
        Observable::left_lim(cos1(), 0.3) * Observable::integral(cos1(), -1.0, -0.2),
        Observable::integral(TestFunction::gaussian_bump({0.0}, 0.5), -1.0, 0.0),
    };
    const MCBudget mc{200, 5, 1e-2, 1.0};
    LevySpec lv{{0.1}, {0.25}, 2.0, JumpLaw::gaussian({0.0}, 0.5)};
    const std::vector<ExpectationSpec> specs{
        ExpectationSpec::deterministic(delayed_decay(), mc),
        ExpectationSpec::markov(decay(), unit_noise(), mc),
        ExpectationSpec::delay(delayed_decay(), unit_noise(), mc),
        ExpectationSpec::levy_flow(decay(), lv, mc),
    };
    for (const auto& spec : specs) {
        const CheckReport r = check_expectation_axioms(spec, Fs, paths, 0.0);
        CAPTURE(static_cast<int>(spec.kind));
        for (const auto& it : r.items) {
            CAPTURE(it.name);
            CHECK(it.pass);
        }
    }
}

TEST_CASE("conditional expectation") {
    const auto spec = brownian(400);
    std::mt19937_64 rng(5);
    const auto x = testutil::random_path(rng, PathKind::Continuous, -1.5, 1.0, 1e-2);
    const auto F = Observable::eval(cos1(), 1.2) * Observable::integral(coord(), 0.0, 0.9);
    // t = 0 is the plain expectation
    CHECK(conditional_expectation(spec, F, x, 0.0).mean == expectation(spec, F, x).mean);
    // determined before t: no averaging left
    const auto G = Observable::integral(cos1(), 0.1, 0.7);
    const MCEstimate c = conditional_expectation(spec, G, x, 0.8);
    CHECK(c.n == 0);
    CHECK(c.mean == doctest::Approx(apply(G, x)).epsilon(1e-12));
    // deterministic kind restarts from the realized history
    const auto det = ExpectationSpec::deterministic(delayed_decay(), MCBudget{1, 1, 1e-2, 2.0});
    const auto y = sample_path(det, const_path(1.0), 0, 2.0);
    const auto H = Observable::eval(coord(), 1.7);
    CHECK(conditional_expectation(det, H, y, 0.6).mean == doctest::Approx(apply(H, y)).epsilon(1e-12));
}

TEST_CASE("semigroup_apply") {
    const auto spec = brownian(20000);
    const auto x = const_path(0.4);
    const auto F = Observable::left_lim(cos1(), 0.0);
    CHECK(semigroup_apply(spec, 0.0, F, x).mean == apply(F, x));
    const MCEstimate e = semigroup_apply(spec, 0.5, F, x);
    CHECK(within(e.mean, e.se, std::exp(-0.25) * std::cos(0.4)));
    const MCEstimate s = induced_state_semigroup(spec, cos1(), 0.5, {0.4});
    CHECK(s.mean == e.mean);
}

TEST_CASE("homogeneity and semigroup law") {
    const NestedBudget nb{60, 120};
    SUBCASE("Brownian") {
        const auto spec = brownian(4000, 2e-2, 2.0);
        const auto x = const_path(0.2, -1.0, 2e-2);
        const auto F = Observable::eval(cos1(), 1.0);
        const CheckReport h = check_homogeneity(spec, F, x, 0.5, 4.0, nb);
        CHECK(h.pass());
        const auto G = Observable::left_lim(cos1(), 0.0);
        const CheckReport s = check_semigroup_law(spec, G, x, 0.4, 0.6, 4.0, nb);
        CHECK(s.pass());
        const CheckReport s0 = check_semigroup_law(spec, G, x, 0.0, 0.6, 4.0, nb);
        CHECK(s0.items[0].value == 0);
    }
    SUBCASE("delay") {
        const auto spec = ExpectationSpec::delay(delayed_decay(), DiffusionSpec::constant(1, 1, {0.5}),
                                                 MCBudget{4000, 9, 2e-2, 2.0});
        const auto x = const_path(1.0, -1.0, 2e-2);
        const CheckReport h = check_homogeneity(spec, Observable::integral(coord(), 0.5, 1.5), x, 0.7, 4.0, nb);
        CHECK(h.pass());
    }
    SUBCASE("deterministic exact") {
        const auto spec = ExpectationSpec::deterministic(delayed_decay(), MCBudget{1, 1, 1e-2, 2.0});
        std::mt19937_64 rng(8);
        const auto x = testutil::random_path(rng, PathKind::Continuous, -1.5, 0.0, 1e-2);
        const CheckReport h = check_homogeneity(spec, Observable::eval(cos1(), 1.3), x, 0.7);
        CHECK(h.pass());
        const CheckReport s = check_semigroup_law(spec, Observable::left_lim(coord(), 0.0), x, 0.5, 0.9);
        CHECK(s.pass());
        CHECK(s.items[0].value <= 1e-12);
    }
}

TEST_CASE("Markov reduction") {
    const auto spec = ExpectationSpec::markov(decay(), unit_noise(), MCBudget{500, 3, 1e-2, 1.0});
    std::mt19937_64 rng(1);
    auto x1 = testutil::random_path(rng, PathKind::Continuous, -1.0, 0.0, 1e-2);
    auto x2 = testutil::random_path(rng, PathKind::Continuous, -1.0, 0.0, 1e-2);
    // give both the same value at 0
    std::vector<double> v = x2.values();
    v.back() = x1.values().back();
    x2 = SampledPath(PathKind::Continuous, x2.first_index(), 1e-2, 1, v);
    const CheckReport r = check_markov_reduction(spec, cos1(), 0.5, x1, x2, 0.0);
    CHECK(r.pass());
    CHECK(r.items[0].value == 0);
    try {
        check_markov_reduction(spec, cos1(), 0.5, x1, const_path(9.0, -1.0), 0.0);
        FAIL("expected PathsDisagreeAtZero");
    } catch (const PathError& e) {
        CHECK(e.code() == Errc::PathsDisagreeAtZero);
    }
    // a delay drift remembers the past
    const auto dspec = ExpectationSpec::delay(delayed_decay(), unit_noise(), MCBudget{2000, 3, 1e-2, 1.5});
    const auto z1 = const_path(0.0, -1.0);
    const auto z2 = SampledPath::from_function(PathKind::Continuous, -1.0, 0.0, 1e-2, 1,
                                               [](double t) { return StatePoint{t < -0.5 ? 2.0 : -4.0 * t}; });
    const CheckReport d = check_markov_reduction(dspec, coord(), 1.0, z1, z2, 0.1);
    CHECK(d.pass());
}

TEST_CASE("generator probe") {
    const auto spec = brownian(40000, 1e-2, 1.0);
    const double x0 = 0.3;
    const auto x = const_path(x0);
    const auto F = Observable::left_lim(cos1(), 0.0);
    const std::vector<double> ts{0.05, 0.1, 0.2};
    const auto rows = generator_probe(spec, F, x, ts);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) CHECK(within(r.quotient, r.se, (std::exp(-r.t / 2) - 1) * std::cos(x0) / r.t));
    // deterministic: d/dt cos(y(t)) at 0 with y' = -y
    const auto det = ExpectationSpec::deterministic(decay(), MCBudget{1, 1, 1e-4, 0.1});
    const auto xd = const_path(x0, -1e-3, 1e-4);
    const std::vector<double> td{0.002, 0.004};
    const auto rd = generator_probe(det, F, xd, td);
    CHECK(std::abs(richardson(rd) - std::sin(x0) * x0) < 1e-3);
    const std::vector<GeneratorRow> syn{{0.2, 3.0 + 2 * 0.2, 0}, {0.1, 3.0 + 2 * 0.1, 0}};
    CHECK(richardson(syn) == doctest::Approx(3.0));
}

TEST_CASE("simplex generator") {
    const auto spec = brownian(20000, 1e-2, 1.2);
    const auto x = const_path(0.0);
    const std::vector<TestFunction> one{cos1()};
    const CheckReport r = simplex_generator_check(spec, one, 0.0, 1.0, x, 0.02, 0.02);
    CHECK(r.pass());
    const auto* q = r.find("quotient");
    REQUIRE(q);
    CHECK(std::abs(q->value - (std::exp(-0.5) - 1)) <= 4 * q->se + 0.02);
    const std::vector<TestFunction> two{TestFunction::one(), TestFunction::one()};
    const CheckReport r2 = simplex_generator_check(spec, two, 0.0, 1.0, x, 0.02, 1e-9);
    CHECK(r2.pass());
    CHECK(std::abs(r2.find("image")->value) < 1e-12);
    const std::vector<TestFunction> mixed{cos1(), TestFunction::gaussian_bump({0.0}, 1.0)};
    CHECK(simplex_generator_check(spec, mixed, 0.2, 1.0, x, 0.02, 0.02).pass());
    const std::vector<TestFunction> three{cos1(), cos1(), cos1()};
    CHECK_THROWS_AS(simplex_generator_check(spec, three, 0.0, 1.0, x, 0.02, 0.02), PathError);
}

TEST_CASE("finite delay invariance") {
    const auto spec = ExpectationSpec::delay(delayed_decay(), unit_noise(), MCBudget{300, 2, 1e-2, 1.0});
    const auto x1 = SampledPath::from_function(PathKind::Continuous, -2.0, 0.0, 1e-2, 1,
                                               [](double t) { return StatePoint{t < -1.0 ? 5.0 * t : 0.3}; });
    const auto x2 = const_path(0.3, -2.0);
    const auto F = Observable::integral(cos1(), -1.0, 0.0);
    const CheckReport r = check_finite_delay_invariance(spec, F, 0.7, x1, x2, 0.0);
    CHECK(r.pass());
    CHECK(r.items[0].value == 0);
    CHECK(r.items[0].note.empty());
}

TEST_CASE("multiplicativity") {
    const auto x = const_path(0.0);
    const auto F = Observable::eval(cos1(), 0.5), G = Observable::eval(coord(), 0.5);
    const auto Fsq = Observable::eval(coord(), 0.5);
    const auto bm = brownian(20000);
    const CheckReport b = check_multiplicativity(bm, Fsq, Fsq, x, 1e-12);
    CHECK_FALSE(b.pass());
    CHECK(*b.items[0].z >= 4.0);
    const auto det = ExpectationSpec::deterministic(decay(), MCBudget{1, 1, 1e-2, 1.0});
    const CheckReport d = check_multiplicativity(det, F, G, const_path(0.7), 1e-12);
    CHECK(d.pass());
    const CheckReport p = check_multiplicativity(bm, Observable::left_lim(cos1(), 0.0), F, x, 1e-12);
    CHECK(p.pass());
}

TEST_CASE("thread count does not change estimates") {
    const auto spec = ExpectationSpec::levy_flow(decay(), LevySpec{{0.0}, {1.0}, 1.5, JumpLaw::fixed({0.5})},
                                                 MCBudget{300, 4, 1e-2, 1.0});
    const auto F = Observable::integral(cos1(), 0.0, 1.0);
    const auto x = const_path(0.1);
    setenv("PATHSG_THREADS", "1", 1);
    const MCEstimate a = expectation(spec, F, x);
    setenv("PATHSG_THREADS", "3", 1);
    const MCEstimate b = expectation(spec, F, x);
    unsetenv("PATHSG_THREADS");
    CHECK(a.mean == b.mean);
    CHECK(a.se == b.se);
}
