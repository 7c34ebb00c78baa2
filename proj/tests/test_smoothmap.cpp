#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "paratensor/smoothmap.hpp"

#include <cmath>

using namespace paratensor;

TEST_CASE("builtin_potential values") {
    const SmoothMap a = builtin_potential();
    CHECK(a.eval(2.0) == 0.5);
    CHECK(a.deriv(1, 2.0) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(a.deriv(2, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(a.eval(1e-9), std::domain_error);
    CHECK_THROWS_AS(builtin_potential(0.05).deriv(1, 0.01), std::domain_error);
}

TEST_CASE("builtin_heat values") {
    const SmoothMap h1 = builtin_heat(1.0);
    CHECK(h1.eval(0.0) == 1.0);
    CHECK(h1.deriv(1, 0.0) == -1.0);
    const SmoothMap h2 = builtin_heat(2.0);
    CHECK(h2.deriv(2, 0.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(builtin_heat(0.0), std::invalid_argument);
}

TEST_CASE("builtin_sin values") {
    const SmoothMap s1 = builtin_sin(1.0);
    CHECK(s1.eval(0.0) == 0.0);
    CHECK(s1.deriv(1, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    const SmoothMap s2 = builtin_sin(2.0);
    CHECK(std::abs(s2.deriv(2, 0.0)) < 1e-14);
}

TEST_CASE("linear and identity maps") {
    const SmoothMap lin = builtin_linear(3.0, -1.0);
    CHECK(lin.eval(2.0) == 5.0);
    CHECK(lin.deriv(1, 17.0) == 3.0);
    CHECK(lin.deriv(2, 17.0) == 0.0);
    CHECK(builtin_identity().eval(0.25) == 0.25);
}

TEST_CASE("derivative order bounds") {
    const SmoothMap h = builtin_heat(1.0);
    CHECK(h.deriv(0, 1.0) == h.eval(1.0));
    CHECK_THROWS_AS(h.deriv(-1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(h.deriv(h.dmax() + 1, 1.0), std::invalid_argument);
}

TEST_CASE("check_derivatives against the finite-difference oracle") {
    SUBCASE("heat map is clean") {
        const auto report = check_derivatives(builtin_heat(1.0), {0.0, 0.5, 1.0}, 1e-5);
        CHECK(report.all_ok);
        for (const auto& check : report.per_order) CHECK(check.max_rel_deviation < 1e-6);
    }
    SUBCASE("potential probes inside the guard are skipped and flagged") {
        const auto report = check_derivatives(builtin_potential(0.05), {0.01, 1.0}, 1e-3);
        REQUIRE(report.skipped_probes.size() == 1);
        CHECK(report.skipped_probes[0] == 0.01);
    }
    SUBCASE("cubic with analytic derivatives sits at rounding level") {
        const SmoothMap cubic(
            "cubic", 4, [](double x) { return x * x * x; },
            [](int m, double x) {
                switch (m) {
                    case 1: return 3.0 * x * x;
                    case 2: return 6.0 * x;
                    case 3: return 6.0;
                    default: return 0.0;
                }
            });
        const auto report = check_derivatives(cubic, {-1.0, 0.25, 2.0}, 1e-5);
        CHECK(report.all_ok);
        // Central differences are exact on cubics up to rounding in h^2 terms.
        CHECK(report.per_order[0].max_rel_deviation < 1e-8);
    }
    SUBCASE("a wrong derivative is flagged") {
        const SmoothMap broken(
            "broken", 1, [](double x) { return x * x; }, [](int, double) { return 1.0; });
        CHECK_FALSE(check_derivatives(broken, {1.0}, 1e-5).all_ok);
    }
}

TEST_CASE("finite-difference fallback map") {
    const SmoothMap fd = finite_difference_map("square", [](double x) { return x * x; }, 2, 1e-5);
    CHECK(fd.name() == "square[fd]");
    CHECK(fd.deriv(1, 3.0) == doctest::Approx(6.0).epsilon(1e-8));
    CHECK(fd.deriv(2, 3.0) == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("map spec parsing") {
    CHECK(parse_map_spec("heat:eps=2").deriv(2, 0.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(parse_map_spec("potential").eval(4.0) == 0.25);
    CHECK(parse_map_spec("sin:beta=2").eval(0.0) == 0.0);
    CHECK(parse_map_spec("linear:a=2,b=1").eval(3.0) == 7.0);
    CHECK(parse_map_spec("identity").eval(0.5) == 0.5);
    CHECK_THROWS_AS(parse_map_spec("nosuch"), std::invalid_argument);
}
