#include "oracles.hpp"

#include "sublim/measures.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace sublim;
using Catch::Matchers::WithinAbs;

namespace {

AmbiguitySet two_measure_family() {
    return AmbiguitySet({DiscreteMeasure::on_line({-1, 1}, {0.3, 0.7}), DiscreteMeasure::on_line({-1, 1}, {0.7, 0.3})});
}

AmbiguitySet rademacher_1_2() { return AmbiguitySet({DiscreteMeasure::rademacher(1), DiscreteMeasure::rademacher(2)}); }

const RandomVariable identity = RandomVariable::scalar([](double x) { return x; });

} // namespace

TEST_CASE("DiscreteMeasure validates its invariants") {
    CHECK_THROWS_AS(DiscreteMeasure({}, {}), ParameterError);
    CHECK_THROWS_AS(DiscreteMeasure::on_line({0, 1}, {1.0}), ParameterError);
    CHECK_THROWS_AS(DiscreteMeasure::on_line({0, 1}, {0.5, 0.6}), ParameterError);
    CHECK_THROWS_AS(DiscreteMeasure::on_line({0, 1}, {-0.1, 1.1}), ParameterError);
    CHECK_THROWS_AS(DiscreteMeasure::on_line({1, 1}, {0.5, 0.5}), ParameterError);
    CHECK_THROWS_AS(DiscreteMeasure({{0.0, 1.0}, {1.0}}, {0.5, 0.5}), ParameterError);
    CHECK_THROWS_AS(DiscreteMeasure({{}}, {1.0}), ParameterError);
    CHECK_THROWS_AS(AmbiguitySet({}), ParameterError);
    CHECK_THROWS_AS(AmbiguitySet({DiscreteMeasure::rademacher(1), DiscreteMeasure({{0.0, 0.0}}, {1.0})}),
                    ParameterError);
}

TEST_CASE("weights within tolerance are renormalized") {
    const auto m = DiscreteMeasure::on_line({0, 1}, {0.5, 0.5 + 5e-13});
    CHECK(m.weight(0) + m.weight(1) == 1.0);
    CHECK_THROWS_AS(DiscreteMeasure::on_line({0, 1}, {0.5, 0.5 + 1e-11}), ParameterError);
}

TEST_CASE("upper_expectation examples") {
    SECTION("constant") {
        CHECK(upper_expectation(two_measure_family(), RandomVariable::constant(5.0)).value == 5.0);
    }
    SECTION("two measures, X = x") {
        const auto r = upper_expectation(two_measure_family(), identity);
        CHECK_THAT(r.value, WithinAbs(0.4, 1e-15));
        CHECK(r.argmax == 0);
    }
    SECTION("Rademacher family, X = x^2") {
        const auto r = upper_expectation(rademacher_1_2(), RandomVariable::scalar([](double x) { return x * x; }));
        CHECK(r.value == 4.0);
        CHECK(r.argmax == 1);
    }
    SECTION("ties go to the lowest index") {
        const AmbiguitySet fam({DiscreteMeasure::rademacher(1), DiscreteMeasure::rademacher(1)});
        CHECK(upper_expectation(fam, identity).argmax == 0);
    }
}

TEST_CASE("non-finite evaluation names the atom") {
    const auto bad = RandomVariable::scalar([](double x) { return x > 0 ? std::log(-x) : 0.0; });
    try {
        (void)upper_expectation(rademacher_1_2(), bad);
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("(1)") != std::string::npos);
    }
}

TEST_CASE("verify_sublinearity examples") {
    const auto fam = two_measure_family();
    const auto neg = RandomVariable::scalar([](double x) { return -x; });

    auto r = verify_sublinearity(fam, identity, neg, 0.0, -3.0);
    CHECK(r.ok());
    CHECK(r.e_lambda_x == 0.0);
    CHECK_THAT(r.e_constant, WithinAbs(-3.0, 1e-15));
    CHECK_THAT(r.ex + r.ey, WithinAbs(0.8, 1e-15));
    CHECK_THAT(r.ex_plus_y, WithinAbs(0.0, 1e-15));
    CHECK_FALSE(r.monotone_applies);

    const auto shifted = RandomVariable::scalar([](double x) { return x - 1.0; });
    r = verify_sublinearity(fam, identity, shifted, 2.0, 1.0);
    CHECK(r.monotone_applies);
    CHECK(r.ok());
    CHECK_THROWS_AS(verify_sublinearity(fam, identity, shifted, -1.0, 0.0), ParameterError);
}

TEST_CASE("capacity examples") {
    const auto fam = rademacher_1_2();
    CHECK(capacity(fam, Event::everything()) == 1.0);
    CHECK(capacity(fam, Event::nothing()) == 0.0);
    CHECK(capacity(fam, Event::norm_above(1.5)) == 1.0);
    CHECK(capacity(two_measure_family(), {[](PointView x) { return x[0] > 0; }}) == 0.7);
}

TEST_CASE("capacity_properties_check examples") {
    const auto fam = two_measure_family();
    const Event neg{[](PointView x) { return x[0] < 0; }};
    const Event pos{[](PointView x) { return x[0] > 0; }};

    SECTION("single event") {
        const std::vector<Event> ev{pos};
        const auto r = capacity_properties_check(fam, ev);
        CHECK(r.ok());
        CHECK(r.union_capacity == r.capacities[0]);
    }
    SECTION("disjoint events") {
        const std::vector<Event> ev{neg, pos};
        const auto r = capacity_properties_check(fam, ev);
        CHECK(r.ok());
        CHECK(r.union_capacity == 1.0);
        CHECK_THAT(r.capacities[0] + r.capacities[1], WithinAbs(1.4, 1e-15));
    }
    SECTION("nested events") {
        const std::vector<Event> ev{pos, Event::everything()};
        const auto r = capacity_properties_check(fam, ev);
        CHECK(r.monotone);
        CHECK(r.capacities[0] <= r.capacities[1]);
        CHECK(r.envelope == std::vector<double>{0.7, 1.0});
    }
    CHECK_THROWS_AS(capacity_properties_check(fam, std::vector<Event>{}), ParameterError);
}

TEST_CASE("borel_cantelli_tail examples") {
    const auto fam = rademacher_1_2();
    SECTION("empty events") {
        const std::vector<Event> ev(3, Event::nothing());
        CHECK(borel_cantelli_tail(fam, ev) == std::vector<double>{0, 0, 0});
    }
    SECTION("A_k = {|x| >= k}, atoms bounded by 2") {
        std::vector<Event> ev;
        for (int k = 1; k <= 5; ++k)
            ev.push_back(Event::norm_at_least(k));
        const auto t = borel_cantelli_tail(fam, ev);
        CHECK(t == std::vector<double>{1, 1, 0, 0, 0});
    }
    SECTION("geometric capacities") {
        // Single measure with mass 2^-k at atom k (k = 1..6) plus the rest at 0.
        std::vector<double> atoms{0}, weights{1.0 / 64};
        for (int k = 1; k <= 6; ++k) {
            atoms.push_back(k);
            weights.push_back(std::ldexp(1.0, -k));
        }
        const AmbiguitySet single({DiscreteMeasure::on_line(atoms, weights)});
        std::vector<Event> ev;
        for (int k = 1; k <= 6; ++k)
            ev.push_back({[k](PointView x) { return x[0] == k; }});
        const auto t = borel_cantelli_tail(single, ev);
        CHECK(t[0] <= 1.0);
        for (std::size_t n = 0; n < t.size(); ++n)
            CHECK_THAT(t[n], WithinAbs(std::ldexp(1.0, -static_cast<int>(n)) - 1.0 / 64, 1e-15));
    }
    CHECK_THROWS_AS(borel_cantelli_tail(fam, std::vector<Event>{}), ParameterError);
}

TEST_CASE("tightness_radius examples") {
    SECTION("bounded support") {
        const AmbiguitySet fam({DiscreteMeasure::on_line({-1, 0, 1}, {0.25, 0.5, 0.25})});
        const auto c = tightness_radius(fam, 0.5, 2.0);
        CHECK(c.radius >= 1.0);
        CHECK(c.capacity_beyond == 0.0);
        CHECK(c.verified);
    }
    SECTION("Chebyshev bound instantiated") {
        const auto c = tightness_radius(rademacher_1_2(), 0.1, 2.0);
        CHECK(c.moment == 4.0);
        CHECK(c.radius == 6.5);
        CHECK(c.capacity_beyond == 0.0);
        CHECK(c.verified);
    }
    SECTION("lattice boundary is exclusive") {
        // E^[x^2] / eps = 9 exactly: N = 3 fails the strict inequality, 3.5 is next.
        const AmbiguitySet fam({DiscreteMeasure::rademacher(3)});
        CHECK(tightness_radius(fam, 1.0, 2.0).radius == 3.5);
    }
    CHECK_THROWS_AS(tightness_radius(rademacher_1_2(), 2.0, 2.0), ParameterError);
    CHECK_THROWS_AS(tightness_radius(rademacher_1_2(), 0.0, 2.0), ParameterError);
    CHECK_THROWS_AS(tightness_radius(rademacher_1_2(), 0.1, 0.0), ParameterError);
}

TEST_CASE("polar_check examples") {
    const auto fam = rademacher_1_2();
    CHECK(polar_check(fam, Event::nothing()));
    CHECK_FALSE(polar_check(fam, {[](PointView x) { return x[0] == 2.0; }}));
    CHECK(polar_check(fam, {[](PointView x) { return x[0] == 0.5; }}));
}

TEST_CASE("upper expectation is sublinear on random instances") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto fam = oracle::random_family(rng, 1 + trial % 3);
        const double a = u(rng), b = u(rng), c = u(rng);
        const RandomVariable x{[=](PointView p) { return a * std::sin(b * p[0]) + c * p.back(); }, {}, {}};
        const RandomVariable y{[=](PointView p) { return std::cos(a * p[0]) - b * p[0] * p[0]; }, {}, {}};
        const auto r = verify_sublinearity(fam, x, y, std::abs(u(rng)), u(rng));
        REQUIRE(r.ok());
    }
}

TEST_CASE("finite subadditivity and monotone convergence of E^") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto fam = oracle::random_family(rng);
        std::vector<RandomVariable> xs;
        double sum_of_e = 0.0;
        for (int k = 1; k <= 4; ++k) {
            xs.push_back(RandomVariable::scalar([k](double x) { return std::sin(k * x) + 0.1 * k * x; }));
            sum_of_e += upper_expectation(fam, xs.back()).value;
        }
        const RandomVariable total{[&](PointView p) {
                                       double s = 0;
                                       for (const auto& x : xs)
                                           s += x(p);
                                       return s;
                                   },
                                   {}, {}};
        REQUIRE(upper_expectation(fam, total).value <= sum_of_e + 1e-10);

        // X_n = min(|x|, n/4) increases to |x|; on finite supports the limit is reached.
        double prev = -INFINITY;
        for (int n = 1; n <= 16; ++n) {
            const double v =
                upper_expectation(fam, RandomVariable::scalar([n](double x) { return std::min(std::abs(x), n / 4.0); }))
                    .value;
            REQUIRE(v >= prev - 1e-15);
            prev = v;
        }
        REQUIRE(prev == upper_expectation(fam, RandomVariable::scalar([](double x) { return std::abs(x); })).value);
    }
}

TEST_CASE("tightness certificate always verifies on random families") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto fam = oracle::random_family(rng, 1 + trial % 2);
        for (double eps : {1.0, 0.1, 0.01})
            for (double l : {0.5, 1.0, 2.0, 3.0}) {
                const auto c = tightness_radius(fam, eps, l);
                REQUIRE(c.verified);
                REQUIRE(std::pow(c.radius, l) > c.moment / eps);
                if (c.radius > 0.5)
                    REQUIRE_FALSE(std::pow(c.radius - 0.5, l) > c.moment / eps);
            }
    }
}
