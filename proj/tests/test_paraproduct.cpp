#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "paratensor/paraproduct.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace paratensor;

namespace {

// Outer product g(x) h(y) of two 1D tensors.
DyadicTensor outer(const DyadicTensor& g, const DyadicTensor& h) {
    DyadicTensor out({g.size(), h.size()});
    for (Index a = 0; a < g.size(); ++a)
        for (Index b = 0; b < h.size(); ++b)
            out.array()[a * h.size() + b] = g.array()[a] * h.array()[b];
    return out;
}

DyadicTensor apply_pointwise(const SmoothMap& map, int order, const DyadicTensor& t) {
    DyadicTensor out = t;
    out.array() = map.deriv(order, t.array());
    return out;
}

}  // namespace

TEST_CASE("set_partitions enumerates Bell(d) partitions that cover the axes") {
    CHECK(set_partitions(1).size() == 1);
    CHECK(set_partitions(2).size() == 2);
    CHECK(set_partitions(3).size() == 5);
    CHECK(set_partitions(4).size() == 15);
    for (int d = 1; d <= 4; ++d) {
        for (const auto& blocks : set_partitions(d)) {
            unsigned seen = 0;
            for (unsigned b : blocks) {
                CHECK(b != 0u);
                CHECK((seen & b) == 0u);  // disjoint
                seen |= b;
            }
            CHECK(seen == (1u << d) - 1u);  // cover
        }
    }
}

TEST_CASE("q_block basics") {
    const DyadicTensor f = test::random_tensor({8, 8}, 1);
    SUBCASE("singleton equals difference_op") {
        const auto q = q_block(f, {1}, ScaleTuple{1, 2});
        CHECK(test::max_abs_diff(q, difference_op(f, 1, 2)) == 0.0);
    }
    SUBCASE("separable input factors into an outer product of differences") {
        const DyadicTensor g = test::random_tensor({8}, 2);
        const DyadicTensor h = test::random_tensor({8}, 3);
        const DyadicTensor gh = outer(g, h);
        const auto q = q_block(gh, {0, 1}, ScaleTuple{1, 2});
        const auto expected = outer(difference_op(g, 0, 1), difference_op(h, 0, 2));
        CHECK(test::max_abs_diff(q, expected) < 1e-14);
    }
    SUBCASE("constant input vanishes") {
        const auto c = DyadicTensor::constant({8, 8}, 4.0);
        CHECK(q_block(c, {0, 1}, ScaleTuple{2, 2}).array().abs().maxCoeff() == 0.0);
    }
    SUBCASE("empty axis set rejected") {
        CHECK_THROWS_AS(q_block(f, {}, ScaleTuple{1, 1}), std::invalid_argument);
    }
}

TEST_CASE("d=1 partition term is A'(P^j f) Q^j f") {
    const DyadicTensor f = test::random_tensor({16}, 4);
    const SmoothMap heat = builtin_heat(1.0);
    const auto terms = partition_terms(f, heat, ScaleTuple{2});
    REQUIRE(terms.size() == 1);
    DyadicTensor expected = apply_pointwise(heat, 1, test::naive_average_op(f, ScaleTuple{2}));
    expected.array() *= difference_op(f, 0, 2).array();
    CHECK(test::max_abs_diff(terms[0].value, expected) < 1e-13);
}

TEST_CASE("d=2 partition terms reproduce the explicit second-order formulas") {
    const SmoothMap heat = builtin_heat(1.0);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const DyadicTensor f = test::random_tensor({16, 16}, 100 + seed);
        for (const ScaleTuple j : {ScaleTuple{1, 2}, ScaleTuple{0, 0}, ScaleTuple{3, 1}}) {
            // Frozen oracle, naive box means throughout:
            //   A'(P^j P'^j' f) [P^{j+1}P'^{j'+1}f - P^j P'^{j'+1}f - P^{j+1}P'^{j'}f + P^j P'^{j'}f]
            // + A''(P^j P'^j' f) [P^{j+1}P'^{j'}f - P^j P'^{j'}f][P^j P'^{j'+1}f - P^j P'^{j'}f]
            const auto c00 = test::naive_average_op(f, ScaleTuple{j[0], j[1]});
            const auto c10 = test::naive_average_op(f, ScaleTuple{j[0] + 1, j[1]});
            const auto c01 = test::naive_average_op(f, ScaleTuple{j[0], j[1] + 1});
            const auto c11 = test::naive_average_op(f, ScaleTuple{j[0] + 1, j[1] + 1});

            DyadicTensor first = apply_pointwise(heat, 1, c00);
            first.array() *= c11.array() - c01.array() - c10.array() + c00.array();
            DyadicTensor second = apply_pointwise(heat, 2, c00);
            second.array() *= (c10.array() - c00.array()) * (c01.array() - c00.array());

            const auto terms = partition_terms(f, heat, j);
            REQUIRE(terms.size() == 2);
            const PartitionTerm& mixed = terms[0].order() == 1 ? terms[0] : terms[1];
            const PartitionTerm& product = terms[0].order() == 2 ? terms[0] : terms[1];
            REQUIRE(mixed.order() == 1);
            REQUIRE(product.order() == 2);
            CHECK(test::max_abs_diff(mixed.value, first) < 1e-13);
            CHECK(test::max_abs_diff(product.value, second) < 1e-13);
        }
    }
}

TEST_CASE("d=3 partition terms match the hand-expanded product rule") {
    const SmoothMap heat = builtin_heat(1.0);
    const DyadicTensor f = test::random_tensor({8, 8, 8}, 11);
    const ScaleTuple j{1, 2, 1};

    // Corner averages by the naive oracle; fine axes listed in the name.
    auto naive = [&](int f0, int f1, int f2) {
        return test::naive_average_op(f, ScaleTuple{j[0] + f0, j[1] + f1, j[2] + f2});
    };
    const auto c000 = naive(0, 0, 0);
    const auto c100 = naive(1, 0, 0);
    const auto c010 = naive(0, 1, 0);
    const auto c001 = naive(0, 0, 1);
    const auto c110 = naive(1, 1, 0);
    const auto c101 = naive(1, 0, 1);
    const auto c011 = naive(0, 1, 1);
    const auto c111 = naive(1, 1, 1);

    const auto d0 = c100.array() - c000.array();
    const auto d1 = c010.array() - c000.array();
    const auto d2 = c001.array() - c000.array();
    const auto d01 = c110.array() - c100.array() - c010.array() + c000.array();
    const auto d02 = c101.array() - c100.array() - c001.array() + c000.array();
    const auto d12 = c011.array() - c010.array() - c001.array() + c000.array();
    const auto d012 = c111.array() - c110.array() - c101.array() - c011.array() + c100.array() +
                      c010.array() + c001.array() - c000.array();

    const auto w1 = apply_pointwise(heat, 1, c000).array();
    const auto w2 = apply_pointwise(heat, 2, c000).array();
    const auto w3 = apply_pointwise(heat, 3, c000).array();

    std::vector<ArrayX<double>> expected;
    expected.push_back(w1 * d012);             // {{0,1,2}}
    expected.push_back(w2 * d01 * d2);         // {{0,1},{2}}
    expected.push_back(w2 * d02 * d1);         // {{0,2},{1}}
    expected.push_back(w2 * d0 * d12);         // {{0},{1,2}}
    expected.push_back(w3 * d0 * d1 * d2);     // {{0},{1},{2}}

    const auto terms = partition_terms(f, heat, j);
    REQUIRE(terms.size() == 5);
    // Restricted-growth order matches the construction above.
    for (std::size_t i = 0; i < 5; ++i)
        CHECK((terms[i].value.array() - expected[i]).abs().maxCoeff() < 1e-13);

    // The five orders come out as 1, 2, 2, 2, 3.
    CHECK(terms[0].order() == 1);
    CHECK(terms[1].order() == 2);
    CHECK(terms[2].order() == 2);
    CHECK(terms[3].order() == 2);
    CHECK(terms[4].order() == 3);
}

TEST_CASE("insufficient derivative order is rejected") {
    const DyadicTensor f = test::random_tensor({8, 8}, 12);
    const SmoothMap first_only(
        "lin1", 1, [](double x) { return x; }, [](int, double) { return 1.0; });
    CHECK_THROWS_AS(partition_terms(f, first_only, ScaleTuple{1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(approximate(f, first_only), std::invalid_argument);
}

TEST_CASE("interp_corner_check is exact for d = 1, 2, 3") {
    CHECK(interp_corner_check(test::random_tensor({32}, 13), ScaleTuple{2}) < 1e-13);
    CHECK(interp_corner_check(test::random_tensor({16, 16}, 14), ScaleTuple{2, 1}) < 1e-13);
    CHECK(interp_corner_check(test::random_tensor({8, 8, 8}, 15), ScaleTuple{1, 1, 2}) < 1e-13);
}

TEST_CASE("approximate: identity map reproduces the telescoped expansion") {
    const DyadicTensor f = test::random_tensor({16, 8}, 16);
    const Decomposition dec = approximate(f, builtin_identity());
    // Linear A collapses all multi-block terms: approx = prod_i (id - P_i^0) f.
    DyadicTensor expected = f;
    for (int axis = 0; axis < 2; ++axis) expected.array() -= avg_axis(expected, axis, 0).array();
    CHECK(test::max_abs_diff(dec.approx, expected) < 1e-12);
    DyadicTensor boundary = f;
    boundary.array() -= expected.array();
    CHECK(test::max_abs_diff(dec.residual, boundary) < 1e-12);
}

TEST_CASE("approximate: constant input leaves only A(c)") {
    const auto c = DyadicTensor::constant({16, 16}, 0.8);
    const SmoothMap heat = builtin_heat(1.0);
    const Decomposition dec = approximate(c, heat);
    CHECK(dec.approx.array().abs().maxCoeff() < 1e-14);
    CHECK((dec.residual.array() - std::exp(-0.8)).abs().maxCoeff() < 1e-14);
}

TEST_CASE("approximate: exact split for every map and flag combination") {
    const DyadicTensor f = test::random_tensor({16, 16}, 17);
    for (const char* spec : {"heat:eps=1", "sin:beta=1", "linear:a=2,b=0.5"}) {
        for (const bool centered : {false, true}) {
            ApproxOptions options;
            options.center_means = centered;
            const SmoothMap map = parse_map_spec(spec);
            const Decomposition dec = approximate(f, map, options);
            const DyadicTensor base = centered ? center_directional_means(f) : f;
            DyadicTensor af = base;
            af.array() = map.eval(base.array());
            const double scale = test::rel_tol_scale(af);
            CHECK(((dec.approx.array() + dec.residual.array()) - af.array()).abs().maxCoeff() <
                  1e-12 * scale);
        }
    }
}

TEST_CASE("linear map: residual is the boundary term plus the offset") {
    const DyadicTensor f = test::random_tensor({16, 8}, 18);
    const double a = 1.7, b = -0.4;
    const Decomposition dec = approximate(f, builtin_linear(a, b));
    DyadicTensor telescoped = f;
    for (int axis = 0; axis < 2; ++axis)
        telescoped.array() -= avg_axis(telescoped, axis, 0).array();
    DyadicTensor expected = f;
    expected.array() = b + a * (f.array() - telescoped.array());
    CHECK(test::max_abs_diff(dec.residual, expected) < 1e-12);
}

TEST_CASE("scale-lattice additivity") {
    const DyadicTensor f = test::random_tensor({16, 16}, 19);
    const SmoothMap heat = builtin_heat(1.0);
    ApproxOptions full_opts;
    full_opts.scales = ScaleTuple{3, 3};
    ApproxOptions smaller_opts;
    smaller_opts.scales = ScaleTuple{2, 2};
    const Decomposition full = approximate(f, heat, full_opts);
    const Decomposition smaller = approximate(f, heat, smaller_opts);

    DyadicTensor shell_sum(f.dims());
    for (int j0 = 0; j0 <= 3; ++j0)
        for (int j1 = 0; j1 <= 3; ++j1) {
            if (j0 <= 2 && j1 <= 2) continue;
            for (const auto& term : partition_terms(f, heat, ScaleTuple{j0, j1}))
                shell_sum.array() += term.value.array();
        }
    DyadicTensor difference = full.approx;
    difference.array() -= smaller.approx.array();
    CHECK(test::max_abs_diff(difference, shell_sum) < 1e-12);
}

TEST_CASE("retained terms sum to the approximation") {
    const DyadicTensor f = test::random_tensor({8, 8}, 20);
    ApproxOptions options;
    options.retain_terms = true;
    const Decomposition dec = approximate(f, builtin_heat(1.0), options);
    CHECK(dec.terms.size() == 2 * 3 * 3);  // Bell(2) per lattice point, 3x3 lattice
    DyadicTensor sum(f.dims());
    for (const auto& term : dec.terms) sum.array() += term.value.array();
    CHECK(test::max_abs_diff(sum, dec.approx) < 1e-12);
}

TEST_CASE("order truncation keeps only low-order terms") {
    const DyadicTensor f = test::random_tensor({8, 8}, 21);
    const SmoothMap heat = builtin_heat(1.0);
    ApproxOptions options;
    options.max_order = 1;
    const Decomposition dec = approximate(f, heat, options);
    DyadicTensor expected(f.dims());
    for (int j0 = 0; j0 < 3; ++j0)
        for (int j1 = 0; j1 < 3; ++j1)
            for (const auto& term : partition_terms(f, heat, ScaleTuple{j0, j1}))
                if (term.order() == 1) expected.array() += term.value.array();
    CHECK(test::max_abs_diff(dec.approx, expected) < 1e-12);
}

TEST_CASE("diagonal mode sums only the equal-scale lattice points") {
    const DyadicTensor f = test::random_tensor({8, 8}, 22);
    const SmoothMap heat = builtin_heat(1.0);
    ApproxOptions options;
    options.diagonal_only = true;
    const Decomposition dec = approximate(f, heat, options);
    DyadicTensor expected(f.dims());
    for (int s = 0; s < 3; ++s)
        for (const auto& term : partition_terms(f, heat, ScaleTuple{s, s}))
            expected.array() += term.value.array();
    CHECK(test::max_abs_diff(dec.approx, expected) < 1e-12);
}

TEST_CASE("order aggregates are linearly independent at a fixed scale") {
    // The operators multiplying A^(m) span distinct directions: their Gram
    // matrix on a random input is far from singular.
    const DyadicTensor f = test::random_tensor({8, 8, 8}, 23);
    const ScaleTuple j{1, 1, 1};
    const auto corners = detail::corner_averages(f, j);
    std::vector<DyadicTensor> aggregate(3, DyadicTensor(f.dims()));
    for (const auto& blocks : set_partitions(3)) {
        DyadicTensor product = detail::block_factor(corners, blocks[0]);
        for (std::size_t bi = 1; bi < blocks.size(); ++bi)
            product.array() *= detail::block_factor(corners, blocks[bi]).array();
        aggregate[blocks.size() - 1].array() += product.array();
    }
    Eigen::Matrix3d gram;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            gram(a, b) = (aggregate[static_cast<std::size_t>(a)].array() *
                          aggregate[static_cast<std::size_t>(b)].array())
                             .sum();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(gram);
    CHECK(solver.eigenvalues().minCoeff() > 1e-12 * solver.eigenvalues().maxCoeff());
}

TEST_CASE("scale norms cover the lattice in lexicographic order") {
    const DyadicTensor f = test::random_tensor({8, 4}, 24);
    const Decomposition dec = approximate(f, builtin_heat(1.0));
    REQUIRE(dec.scale_norms.size() == 3 * 2);
    CHECK(dec.scale_norms.front().scale == ScaleTuple{0, 0});
    CHECK(dec.scale_norms.back().scale == ScaleTuple{2, 1});
    for (const auto& entry : dec.scale_norms) {
        REQUIRE(entry.order_l2.size() == 2);
        for (double v : entry.order_l2) CHECK(v >= 0.0);
    }
}
