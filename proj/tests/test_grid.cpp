#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "paratensor/grid.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace paratensor;

namespace {

// Enumeration oracle: walk the dyadic ancestors of both points and return the
// length of the deepest interval (lo, hi] containing both.
double dyadic_distance_oracle(double x, double y) {
    if (x == y) return 0.0;
    double best = 1.0;
    for (int depth = 1; depth <= 48; ++depth) {
        const double len = std::ldexp(1.0, -depth);
        const auto cell = [&](double v) {
            const double raw = std::ceil(v / len) - 1.0;
            return std::clamp(raw, 0.0, std::ldexp(1.0, depth) - 1.0);
        };
        if (cell(x) != cell(y)) break;
        best = len;
    }
    return best;
}

}  // namespace

TEST_CASE("DyadicTensor validates construction") {
    CHECK_NOTHROW(DyadicTensor({4, 8}));
    CHECK_THROWS_AS(DyadicTensor({3, 4}), std::invalid_argument);
    CHECK_THROWS_AS(DyadicTensor({2, 2, 2, 2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(DyadicTensor(std::vector<Index>{}), std::invalid_argument);
    CHECK_THROWS_AS(DyadicTensor({4}, ArrayX<double>::Zero(5)), std::invalid_argument);

    DyadicTensor t({4, 8});
    CHECK(t.size() == 32);
    CHECK(t.levels(0) == 2);
    CHECK(t.levels(1) == 3);
    CHECK(t.stride(0) == 8);
    CHECK(t.stride(1) == 1);
}

TEST_CASE("dyadic_distance examples") {
    // Same point: continuum limit 0.
    CHECK(dyadic_distance(0.1, 0.1) == 0.0);
    // Straddling the root split.
    CHECK(dyadic_distance(0.49, 0.51) == 1.0);
    // Frozen from the enumeration oracle: both points lie in (0.25, 0.3125],
    // the depth-4 interval, and separate at depth 5.
    CHECK(dyadic_distance_oracle(0.26, 0.30) == 0.0625);
    CHECK(dyadic_distance(0.26, 0.30) == 0.0625);

    CHECK_THROWS_AS(dyadic_distance(-0.1, 0.5), std::domain_error);
    CHECK_THROWS_AS(dyadic_distance(0.5, 1.5), std::domain_error);
}

TEST_CASE("dyadic_distance agrees with the enumeration oracle on a sweep") {
    const CounterRng rng(7);
    for (int i = 0; i < 500; ++i) {
        const double x = rng.unit(static_cast<std::uint64_t>(2 * i));
        const double y = rng.unit(static_cast<std::uint64_t>(2 * i + 1));
        CHECK(dyadic_distance(x, y) == dyadic_distance_oracle(x, y));
    }
}

TEST_CASE("dyadic_distance_cells equals the continuum distance on cell centers") {
    const int levels = 5;
    for (Index a = 0; a < 32; a += 3) {
        for (Index b = 0; b < 32; b += 5) {
            const double expected = a == b ? std::ldexp(1.0, -levels)
                                           : dyadic_distance(cell_center(a, levels), cell_center(b, levels));
            CHECK(dyadic_distance_cells(a, b, levels) == expected);
        }
    }
}

TEST_CASE("dyadic distance is a symmetric ultrametric on grid points") {
    const int levels = 6;
    const Index n = Index{1} << levels;
    const CounterRng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const Index a = static_cast<Index>(rng.bits(3 * trial) % n);
        const Index b = static_cast<Index>(rng.bits(3 * trial + 1) % n);
        const Index c = static_cast<Index>(rng.bits(3 * trial + 2) % n);
        const double dab = dyadic_distance_cells(a, b, levels);
        const double dba = dyadic_distance_cells(b, a, levels);
        const double dbc = dyadic_distance_cells(b, c, levels);
        const double dac = dyadic_distance_cells(a, c, levels);
        CHECK(dab == dba);
        CHECK(dac <= std::max(dab, dbc));
    }
}

TEST_CASE("box_slice sizes and contents") {
    DyadicTensor f({4, 4});
    for (Index i = 0; i < 16; ++i) f.array()[i] = static_cast<double>(i);

    SUBCASE("root box holds everything") {
        const auto all = box_slice(f, BoxIndex{ScaleTuple{0, 0}, {1, 1}});
        CHECK(all.size() == 16);
        CHECK(all.sum() == doctest::Approx(120.0));
    }
    SUBCASE("finest box is one cell") {
        const auto one = box_slice(f, BoxIndex{ScaleTuple{2, 2}, {3, 2}});
        CHECK(one.size() == 1);
        // k is 1-based: box (3,2) at the finest scale is sample (2,1).
        CHECK(one[0] == f({2, 1}));
    }
    SUBCASE("invalid indices throw") {
        CHECK_THROWS_AS(box_slice(f, BoxIndex{ScaleTuple{2, 2}, {5, 1}}), std::out_of_range);
        CHECK_THROWS_AS(box_slice(f, BoxIndex{ScaleTuple{3, 0}, {1, 1}}), std::out_of_range);
        CHECK_THROWS_AS(box_slice(f, BoxIndex{ScaleTuple{1, 1}, {0, 1}}), std::out_of_range);
    }
}

TEST_CASE("box_slice matches brute-force membership of cell centers") {
    const DyadicTensor f = test::random_tensor({8}, 3);
    const BoxIndex b{ScaleTuple{1}, {2}};
    const auto idx = box_sample_indices(f, b);
    CHECK(idx == std::vector<Index>{4, 5, 6, 7});

    // Membership oracle: a cell center belongs to I^j_k = (2^-j(k-1), 2^-j k].
    std::vector<Index> expected;
    for (Index m = 0; m < 8; ++m) {
        const double x = cell_center(m, 3);
        if (x > 0.5 && x <= 1.0) expected.push_back(m);
    }
    CHECK(idx == expected);

    const DyadicTensor g = test::random_tensor({8, 4}, 4);
    const BoxIndex b2{ScaleTuple{2, 1}, {3, 2}};
    std::vector<Index> oracle;
    for (Index r = 0; r < 8; ++r)
        for (Index c = 0; c < 4; ++c) {
            const double x = cell_center(r, 3);
            const double y = cell_center(c, 2);
            if (x > 0.5 && x <= 0.75 && y > 0.5 && y <= 1.0) oracle.push_back(r * 4 + c);
        }
    CHECK(box_sample_indices(g, b2) == oracle);
}

TEST_CASE("fixed-scale boxes partition the domain") {
    const DyadicTensor f = test::random_tensor({8, 4, 2}, 5);
    const ScaleTuple j{2, 1, 1};
    std::vector<int> hits(static_cast<std::size_t>(f.size()), 0);
    for (Index k0 = 1; k0 <= 4; ++k0)
        for (Index k1 = 1; k1 <= 2; ++k1)
            for (Index k2 = 1; k2 <= 2; ++k2)
                for (Index flat : box_sample_indices(f, BoxIndex{j, {k0, k1, k2}}))
                    hits[static_cast<std::size_t>(flat)] += 1;
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST_CASE("box measure is exact") {
    CHECK(box_measure(BoxIndex{ScaleTuple{0, 0}, {1, 1}}) == 1.0);
    CHECK(box_measure(BoxIndex{ScaleTuple{2, 3}, {1, 1}}) == std::ldexp(1.0, -5));
    CHECK(box_measure(BoxIndex{ScaleTuple{4, 4, 2}, {1, 1, 1}}) == std::ldexp(1.0, -10));
}
