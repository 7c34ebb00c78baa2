#pragma once

#include "paratensor/grid.hpp"
#include "paratensor/haar.hpp"
#include "paratensor/paraproduct.hpp"
#include "paratensor/smoothmap.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace paratensor {

// The level of the split in the paper's parameterization: 2^{-(j_1+...+j_d) 2 alpha}.
inline double paper_lambda(double alpha, const ScaleTuple& j) {
    if (!(alpha > 0.0)) throw std::invalid_argument("paper_lambda: alpha estimate must be positive");
    return std::exp2(-2.0 * alpha * j.sum());
}

namespace detail {

// Per-box max of |t| over the scale-j partition, as a compact tensor.
inline DyadicTensor box_max_abs(const DyadicTensor& t, const ScaleTuple& j) {
    const int r = t.rank();
    std::vector<Index> cdims(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a) cdims[static_cast<std::size_t>(a)] = Index{1} << j[a];
    DyadicTensor compact(cdims);
    std::vector<Index> idx(static_cast<std::size_t>(r), 0);
    std::vector<Index> shift(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a) shift[static_cast<std::size_t>(a)] = t.levels(a) - j[a];
    for (Index flat = 0; flat < t.size(); ++flat) {
        Index cflat = 0;
        for (int a = 0; a < r; ++a)
            cflat = cflat * compact.dim(a) + (idx[static_cast<std::size_t>(a)] >> shift[static_cast<std::size_t>(a)]);
        double& slot = compact.array()[cflat];
        slot = std::max(slot, std::abs(t.array()[flat]));
        for (int a = r - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < t.dim(a)) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return compact;
}

// Order-m aggregate A^(m)(P^j f) * sum_{|pi|=m} prod_{B in pi} factor(B) at a
// single scale tuple.
inline DyadicTensor order_term(const DyadicTensor& f, const SmoothMap& map, const ScaleTuple& j,
                               int order) {
    const int d = f.rank();
    const auto corners = corner_averages(f, j);
    const unsigned full = (1u << d) - 1u;
    std::vector<DyadicTensor> factor(static_cast<std::size_t>(full) + 1);
    for (unsigned b = 1; b <= full; ++b) factor[b] = block_factor(corners, b);
    DyadicTensor sum(f.dims());
    bool any = false;
    for (const auto& blocks : set_partitions(d)) {
        if (static_cast<int>(blocks.size()) != order) continue;
        DyadicTensor product = factor[blocks[0]];
        for (std::size_t bi = 1; bi < blocks.size(); ++bi)
            product.array() *= factor[blocks[bi]].array();
        sum.array() += product.array();
        any = true;
    }
    if (!any) throw std::invalid_argument("order_term: no partition with that many blocks");
    const DyadicTensor weight = map_deriv_on_boxes(map, order, corners[0], j);
    sum.array() *= weight.array();
    return sum;
}

}  // namespace detail

struct CZDiagnostics {
    // (1) exact decomposition
    double exact_sum_max_dev = 0.0;
    bool exact_sum_ok = false;
    // (2) bounds on the good part; constants measured, not asserted
    double sup_good = 0.0;
    double l1_good = 0.0;
    double l1_af = 0.0;
    double cond2_sup_over_lambda = 0.0;
    double cond2_l1_ratio = 0.0;
    // (3) support containment and per-box means of the bad part
    bool support_ok = false;
    double max_box_mean_abs = 0.0;
    bool mean_zero_asserted = false;
    bool mean_zero_ok = true;
    double bad_l1_ratio = 0.0;  // sum_i L1(bad on B_i) / L1(A(f))
    // (4) measure of the bad set and the Chebyshev bound
    double measure_sum = 0.0;
    double cond4_constant = 0.0;  // measure_sum * lambda / L1(A(f))
    double chebyshev_lhs = 0.0;   // |union D_lambda| * lambda
    double chebyshev_rhs = 0.0;   // sum over all boxes of m(B) * max_B |term_m|
    bool chebyshev_ok = false;

    bool hard_pass() const {
        return exact_sum_ok && support_ok && chebyshev_ok && mean_zero_ok;
    }
};

// A(f) = bad + good with bad supported on the boxes where the order-m term
// exceeds lambda, at a fixed scale tuple and fixed order.
struct CZSplit {
    double lambda = 0.0;
    ScaleTuple scale;
    int order = 0;
    std::vector<BoxIndex> bad_boxes;
    DyadicTensor bad;
    DyadicTensor good;
    DyadicTensor term_box_max;  // compact per-box max |order-m term|, kept for diagnostics
    CZDiagnostics diagnostics;
};

// Boxes of the scale-j partition where the order-m term exceeds lambda in
// sup norm over the box. Lambda = +inf gives the empty set; lambda = 0 gives
// every box carrying a nonzero term.
inline std::vector<BoxIndex> build_dlambda(const DyadicTensor& f, const SmoothMap& map,
                                           const ScaleTuple& j, int order, double lambda) {
    const int d = f.rank();
    if (order < 1 || order > d) throw std::invalid_argument("build_dlambda: order must be in 1..d");
    if (map.dmax() < order)
        throw std::invalid_argument("build_dlambda: map derivatives insufficient for order");
    const DyadicTensor term = detail::order_term(f, map, j, order);
    const DyadicTensor box_max = detail::box_max_abs(term, j);
    std::vector<BoxIndex> boxes;
    std::vector<Index> k(static_cast<std::size_t>(d), 0);
    for (Index flat = 0; flat < box_max.size(); ++flat) {
        if (box_max.array()[flat] > lambda) {
            BoxIndex b;
            b.j = j;
            b.k.resize(static_cast<std::size_t>(d));
            for (int a = 0; a < d; ++a) b.k[static_cast<std::size_t>(a)] = k[static_cast<std::size_t>(a)] + 1;
            boxes.push_back(std::move(b));
        }
        for (int a = d - 1; a >= 0; --a) {
            if (++k[static_cast<std::size_t>(a)] < box_max.dim(a)) break;
            k[static_cast<std::size_t>(a)] = 0;
        }
    }
    return boxes;
}

struct CZOptions {
    // Assert per-box means of the bad part vanish (valid under the directional
    // mean-zero hypothesis); otherwise means are reported only.
    bool assert_mean_zero = false;
    double mean_tol = 1e-10;
    double exact_tol = 1e-12;
};

inline CZDiagnostics verify_conditions(const CZSplit& split, const DyadicTensor& a_of_f,
                                       const CZOptions& options = {});

inline CZSplit cz_split(const DyadicTensor& f, const SmoothMap& map, const ScaleTuple& j,
                        int order, double lambda, const CZOptions& options = {}) {
    const int d = f.rank();
    if (order < 1 || order > d) throw std::invalid_argument("cz_split: order must be in 1..d");
    if (map.dmax() < d)
        throw std::invalid_argument("cz_split: map must provide derivatives up to order d");

    const DyadicTensor term = detail::order_term(f, map, j, order);
    CZSplit split;
    split.lambda = lambda;
    split.scale = j;
    split.order = order;
    split.term_box_max = detail::box_max_abs(term, j);

    // Bad-box indicator on the compact box grid.
    DyadicTensor indicator(split.term_box_max.dims());
    std::vector<Index> k(static_cast<std::size_t>(d), 0);
    for (Index flat = 0; flat < indicator.size(); ++flat) {
        if (split.term_box_max.array()[flat] > lambda) {
            indicator.array()[flat] = 1.0;
            BoxIndex b;
            b.j = j;
            b.k.resize(static_cast<std::size_t>(d));
            for (int a = 0; a < d; ++a) b.k[static_cast<std::size_t>(a)] = k[static_cast<std::size_t>(a)] + 1;
            split.bad_boxes.push_back(std::move(b));
        }
        for (int a = d - 1; a >= 0; --a) {
            if (++k[static_cast<std::size_t>(a)] < indicator.dim(a)) break;
            k[static_cast<std::size_t>(a)] = 0;
        }
    }

    // Single-scale approximation at j, all orders, restricted to the bad set.
    DyadicTensor approx(f.dims());
    for (int m = 1; m <= d; ++m) {
        if (m == order)
            approx.array() += term.array();
        else
            approx.array() += detail::order_term(f, map, j, m).array();
    }
    const DyadicTensor mask = detail::upsample_broadcast(indicator, f.dims());
    split.bad = approx;
    split.bad.array() *= mask.array();

    split.good = f;
    split.good.array() = map.eval(f.array()) - split.bad.array();

    DyadicTensor af = f;
    af.array() = map.eval(f.array());
    split.diagnostics = verify_conditions(split, af, options);
    return split;
}

inline CZDiagnostics verify_conditions(const CZSplit& split, const DyadicTensor& a_of_f,
                                       const CZOptions& options) {
    CZDiagnostics diag;
    const Index n = a_of_f.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double af_scale = std::max(a_of_f.array().abs().maxCoeff(), 1e-300);

    // (1) exact sum
    diag.exact_sum_max_dev =
        ((split.bad.array() + split.good.array()) - a_of_f.array()).abs().maxCoeff() / af_scale;
    diag.exact_sum_ok = diag.exact_sum_max_dev <= options.exact_tol;

    // (2) measured constants for the good part
    diag.sup_good = split.good.array().abs().maxCoeff();
    diag.l1_good = split.good.array().abs().sum() * inv_n;
    diag.l1_af = a_of_f.array().abs().sum() * inv_n;
    diag.cond2_sup_over_lambda = split.lambda > 0 ? diag.sup_good / split.lambda : 0.0;
    diag.cond2_l1_ratio = diag.l1_af > 0 ? diag.l1_good / diag.l1_af : 0.0;

    // (3) support containment, per-box means, bad-part L1 ratio
    diag.support_ok = true;
    double bad_l1 = 0.0;
    double worst_mean = 0.0;
    std::vector<char> in_bad(static_cast<std::size_t>(n), 0);
    for (const BoxIndex& b : split.bad_boxes) {
        double sum = 0.0, abs_sum = 0.0;
        Index count = 0;
        detail::for_each_box_sample(split.bad, b, [&](Index flat, std::span<const Index>) {
            sum += split.bad.array()[flat];
            abs_sum += std::abs(split.bad.array()[flat]);
            in_bad[static_cast<std::size_t>(flat)] = 1;
            ++count;
        });
        worst_mean = std::max(worst_mean, std::abs(sum / static_cast<double>(count)));
        bad_l1 += abs_sum * inv_n;
    }
    for (Index i = 0; i < n; ++i)
        if (!in_bad[static_cast<std::size_t>(i)] && split.bad.array()[i] != 0.0) diag.support_ok = false;
    diag.max_box_mean_abs = worst_mean;
    diag.mean_zero_asserted = options.assert_mean_zero;
    diag.mean_zero_ok = !options.assert_mean_zero || worst_mean <= options.mean_tol * af_scale;
    diag.bad_l1_ratio = diag.l1_af > 0 ? bad_l1 / diag.l1_af : 0.0;

    // (4) measure bound and the literal Chebyshev inequality
    const double box_measure_value = std::exp2(-split.scale.sum());
    diag.measure_sum = box_measure_value * static_cast<double>(split.bad_boxes.size());
    diag.cond4_constant = diag.l1_af > 0 ? diag.measure_sum * split.lambda / diag.l1_af : 0.0;
    diag.chebyshev_lhs = diag.measure_sum * split.lambda;
    diag.chebyshev_rhs = box_measure_value * split.term_box_max.array().sum();
    diag.chebyshev_ok = diag.chebyshev_lhs <= diag.chebyshev_rhs ||
                        split.bad_boxes.empty();  // vacuous at lambda = +inf
    return diag;
}

}  // namespace paratensor
