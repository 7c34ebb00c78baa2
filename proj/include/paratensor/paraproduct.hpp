#pragma once

#include "paratensor/grid.hpp"
#include "paratensor/haar.hpp"
#include "paratensor/smoothmap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace paratensor {

// Set partitions of {0..d-1} in restricted-growth-string order; each block is
// an axis bitmask, blocks ordered by first appearance. Bell(d) partitions:
// 1, 2, 5, 15 for d = 1..4.
inline std::vector<std::vector<unsigned>> set_partitions(int d) {
    std::vector<std::vector<unsigned>> out;
    std::vector<int> assign(static_cast<std::size_t>(d), 0);
    auto emit = [&] {
        int nblocks = 0;
        for (int a : assign) nblocks = std::max(nblocks, a + 1);
        std::vector<unsigned> blocks(static_cast<std::size_t>(nblocks), 0u);
        for (int i = 0; i < d; ++i)
            blocks[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] |= 1u << i;
        out.push_back(std::move(blocks));
    };
    // Odometer over restricted growth strings: assign[i] <= 1 + max(assign[<i]).
    while (true) {
        emit();
        int i = d - 1;
        for (; i > 0; --i) {
            int prefix_max = 0;
            for (int l = 0; l < i; ++l) prefix_max = std::max(prefix_max, assign[static_cast<std::size_t>(l)]);
            if (assign[static_cast<std::size_t>(i)] <= prefix_max) break;
        }
        if (i <= 0) break;
        ++assign[static_cast<std::size_t>(i)];
        for (int l = i + 1; l < d; ++l) assign[static_cast<std::size_t>(l)] = 0;
    }
    return out;
}

inline std::vector<std::vector<int>> blocks_as_axis_lists(const std::vector<unsigned>& blocks, int d) {
    std::vector<std::vector<int>> out;
    for (unsigned mask : blocks) {
        std::vector<int> axes;
        for (int i = 0; i < d; ++i)
            if (mask & (1u << i)) axes.push_back(i);
        out.push_back(std::move(axes));
    }
    return out;
}

// Composition of the one-axis difference operators Q^{j_i} over the given
// axes, other axes untouched. The factors commute, so the ascending order is
// a convention, not a constraint.
inline DyadicTensor q_block(const DyadicTensor& f, std::vector<int> axes, const ScaleTuple& j) {
    if (axes.empty()) throw std::invalid_argument("q_block: axis set must be nonempty");
    validate_scale(f, j);
    std::sort(axes.begin(), axes.end());
    DyadicTensor out = f;
    for (int a : axes) out = difference_op(out, a, j[a]);
    return out;
}

namespace detail {

// Corner averages C_S = (prod_{i in S} P_i^{j_i+1}) (prod_{i not in S} P_i^{j_i}) f
// for every S subseteq {0..d-1}, indexed by bitmask. Requires j_i < N_i.
// C_full is built by d fine passes, every other C_S by one coarsening pass
// from a parent with one more fine axis.
inline std::vector<DyadicTensor> corner_averages(const DyadicTensor& f, const ScaleTuple& j) {
    const int d = f.rank();
    validate_scale(f, j);
    for (int a = 0; a < d; ++a)
        if (j[a] >= f.levels(a))
            throw std::out_of_range("corner_averages: scale must be below the axis depth");
    const unsigned full = (1u << d) - 1u;
    std::vector<DyadicTensor> corners(static_cast<std::size_t>(full) + 1);
    DyadicTensor fine = f;
    for (int a = 0; a < d; ++a) fine = avg_axis(fine, a, j[a] + 1);
    corners[full] = std::move(fine);
    for (unsigned s = full; s-- > 0;) {
        int missing = 0;
        while (s & (1u << missing)) ++missing;
        corners[s] = avg_axis(corners[s | (1u << missing)], missing, j[missing]);
    }
    return corners;
}

// Block factor (prod_{i in B} Q_i^{j_i}) (prod_{i not in B} P_i^{j_i}) f as the
// alternating corner sum sum_{T subseteq B} (-1)^{|B|-|T|} C_T.
inline DyadicTensor block_factor(const std::vector<DyadicTensor>& corners, unsigned block) {
    DyadicTensor out = corners[0];
    int bits = 0;
    for (unsigned m = block; m; m >>= 1) bits += static_cast<int>(m & 1u);
    if (bits % 2 != 0) out.array() = -out.array();
    for (unsigned t = block; t > 0; t = (t - 1) & block) {
        int tb = 0;
        for (unsigned m = t; m; m >>= 1) tb += static_cast<int>(m & 1u);
        if ((bits - tb) % 2 == 0)
            out.array() += corners[t].array();
        else
            out.array() -= corners[t].array();
    }
    return out;
}

// One value per scale-j box, sampled at the box corner of a tensor that is
// piecewise constant at that granularity.
inline DyadicTensor downsample_box_values(const DyadicTensor& t, const ScaleTuple& j) {
    const int r = t.rank();
    std::vector<Index> cdims(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a) cdims[static_cast<std::size_t>(a)] = Index{1} << j[a];
    DyadicTensor compact(cdims);
    const int last = r - 1;
    const Index last_block = t.dim(last) >> j[last];
    std::vector<Index> tstride(static_cast<std::size_t>(r)), cstride(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a) {
        tstride[static_cast<std::size_t>(a)] = t.stride(a);
        Index s = 1;
        for (int l = r - 1; l > a; --l) s *= compact.dim(l);
        cstride[static_cast<std::size_t>(a)] = s;
    }
    auto rec = [&](auto&& self, int axis, Index toff, Index coff) -> void {
        if (axis == last) {
            for (Index cb = 0; cb < compact.dim(last); ++cb)
                compact.array()[coff + cb] = t.array()[toff + cb * last_block];
            return;
        }
        const Index block = t.dim(axis) >> j[axis];
        for (Index cb = 0; cb < compact.dim(axis); ++cb)
            self(self, axis + 1, toff + cb * block * tstride[static_cast<std::size_t>(axis)],
                 coff + cb * cstride[static_cast<std::size_t>(axis)]);
    };
    rec(rec, 0, 0, 0);
    return compact;
}

// Inverse of downsample_box_values: broadcast one value per box onto the full
// grid, contiguous runs along the last axis.
inline DyadicTensor upsample_broadcast(const DyadicTensor& compact, const std::vector<Index>& dims) {
    const int r = static_cast<int>(dims.size());
    DyadicTensor full(dims);
    const int last = r - 1;
    const Index last_block = dims[static_cast<std::size_t>(last)] / compact.dim(last);
    std::vector<Index> fstride(static_cast<std::size_t>(r)), cstride(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a) {
        fstride[static_cast<std::size_t>(a)] = full.stride(a);
        Index s = 1;
        for (int l = r - 1; l > a; --l) s *= compact.dim(l);
        cstride[static_cast<std::size_t>(a)] = s;
    }
    auto rec = [&](auto&& self, int axis, Index foff, Index coff) -> void {
        if (axis == last) {
            for (Index cb = 0; cb < compact.dim(last); ++cb)
                full.array().segment(foff + cb * last_block, last_block)
                    .setConstant(compact.array()[coff + cb]);
            return;
        }
        const Index block = dims[static_cast<std::size_t>(axis)] / compact.dim(axis);
        for (Index fb = 0; fb < dims[static_cast<std::size_t>(axis)]; ++fb)
            self(self, axis + 1, foff + fb * fstride[static_cast<std::size_t>(axis)],
                 coff + (fb / block) * cstride[static_cast<std::size_t>(axis)]);
    };
    rec(rec, 0, 0, 0);
    return full;
}

// A^(m)(P^j f) evaluated once per scale-j box and broadcast back, instead of
// once per sample.
inline DyadicTensor map_deriv_on_boxes(const SmoothMap& map, int order,
                                       const DyadicTensor& averaged, const ScaleTuple& j) {
    DyadicTensor compact = downsample_box_values(averaged, j);
    compact.array() = map.deriv(order, compact.array());
    return upsample_broadcast(compact, averaged.dims());
}

}  // namespace detail

// One per-scale term of the decomposition: the partition pi of the axes picks
// the derivative order |pi| and the product of block factors.
struct PartitionTerm {
    ScaleTuple scale;
    std::vector<std::vector<int>> blocks;
    DyadicTensor value;

    int order() const { return static_cast<int>(blocks.size()); }
};

// All Bell(d) terms at scale tuple j:
//   term(pi) = A^(|pi|)(P^j f) * prod_{B in pi} (prod_{i in B} Q_i^{j_i}) (prod_{i not in B} P_i^{j_i}) f.
// At d=2 the two terms are exactly the explicit second-order decomposition:
// the one-block term A'(P f) carries the mixed corner difference, the
// two-block term A''(P f) the product of the two one-axis differences taken
// at the complementary averaged scales.
inline std::vector<PartitionTerm> partition_terms(const DyadicTensor& f, const SmoothMap& map,
                                                  const ScaleTuple& j) {
    const int d = f.rank();
    if (map.dmax() < d)
        throw std::invalid_argument("partition_terms: map must provide derivatives up to order d");
    const auto corners = detail::corner_averages(f, j);
    const unsigned full = (1u << d) - 1u;
    std::vector<DyadicTensor> factor(static_cast<std::size_t>(full) + 1);
    for (unsigned b = 1; b <= full; ++b) factor[b] = detail::block_factor(corners, b);
    std::vector<DyadicTensor> weight(static_cast<std::size_t>(d) + 1);
    for (int m = 1; m <= d; ++m) weight[static_cast<std::size_t>(m)] = detail::map_deriv_on_boxes(map, m, corners[0], j);

    std::vector<PartitionTerm> terms;
    for (const auto& blocks : set_partitions(d)) {
        PartitionTerm term;
        term.scale = j;
        term.blocks = blocks_as_axis_lists(blocks, d);
        term.value = weight[blocks.size()];
        for (unsigned b : blocks) term.value.array() *= factor[b].array();
        terms.push_back(std::move(term));
    }
    return terms;
}

// Max deviation between the alternating corner differences of the interpolants
// delta^t(f), t in {0,1}^d, and the sequential Q composition over all axes.
// The interpolant is multilinear in t, so the two routes agree to rounding.
inline double interp_corner_check(const DyadicTensor& f, const ScaleTuple& j) {
    const int d = f.rank();
    validate_scale(f, j);
    for (int a = 0; a < d; ++a)
        if (j[a] >= f.levels(a))
            throw std::out_of_range("interp_corner_check: scale must be below the axis depth");
    DyadicTensor corner_sum(f.dims());
    for (unsigned t = 0; t < (1u << d); ++t) {
        DyadicTensor g = f;
        int bits = 0;
        for (int a = 0; a < d; ++a) {
            const bool fine = (t & (1u << a)) != 0;
            bits += fine ? 1 : 0;
            g = avg_axis(g, a, fine ? j[a] + 1 : j[a]);
        }
        if ((d - bits) % 2 == 0)
            corner_sum.array() += g.array();
        else
            corner_sum.array() -= g.array();
    }
    std::vector<int> all_axes(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) all_axes[static_cast<std::size_t>(a)] = a;
    const DyadicTensor q = q_block(f, all_axes, j);
    return (corner_sum.array() - q.array()).abs().maxCoeff();
}

struct ApproxOptions {
    // Per-axis truncation scale N_i; empty means the full grid depth. The
    // lattice summed is j_i in [0, min(N_i, levels_i - 1)] inclusive (the
    // terms a full-depth N_i would add at j_i = levels_i vanish identically).
    ScaleTuple scales;
    bool center_means = false;
    bool retain_terms = false;
    // Sum only partitions with at most this many blocks; 0 means all orders.
    // Truncation below d is an experimentation mode, not part of the identity.
    int max_order = 0;
    // Restrict the lattice to j_1 = j_2 = ... = j_d (cost-reduction mode).
    bool diagonal_only = false;
};

struct ScaleTermNorms {
    ScaleTuple scale;
    std::vector<double> order_l2;  // index m-1: l2 norm of the order-m aggregate
};

// The pair A(f) = approx + residual plus per-scale diagnostics. The residual
// is the literal difference, so the split is exact by construction; what the
// decomposition buys is the regularity gain of the residual.
struct Decomposition {
    DyadicTensor approx;
    DyadicTensor residual;
    std::vector<ScaleTermNorms> scale_norms;
    std::vector<PartitionTerm> terms;  // populated only with retain_terms

    std::string map_name;
    ScaleTuple scales_used;  // effective per-axis lattice caps (inclusive)
    bool centered = false;
    int max_order = 0;
    bool diagonal_only = false;
};

// The multiscale quasilinear approximation: partition_terms summed over the
// scale lattice in lexicographic order, residual = pointwise A(f) - approx.
inline Decomposition approximate(const DyadicTensor& input, const SmoothMap& map,
                                 const ApproxOptions& options = {}) {
    const int d = input.rank();
    if (map.dmax() < d)
        throw std::invalid_argument("approximate: map must provide derivatives up to order d");
    ScaleTuple n = options.scales;
    if (n.j.empty()) {
        n.j.resize(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) n.j[static_cast<std::size_t>(a)] = input.levels(a);
    }
    if (n.rank() != d) throw std::invalid_argument("approximate: scales rank mismatch");
    std::vector<int> cap(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        if (n[a] < 0 || n[a] > input.levels(a))
            throw std::out_of_range("approximate: scale bound outside the grid depth");
        cap[static_cast<std::size_t>(a)] = std::min(n[a], input.levels(a) - 1);
    }
    const int order_limit = options.max_order > 0 ? std::min(options.max_order, d) : d;

    const DyadicTensor f = options.center_means ? center_directional_means(input) : input;

    Decomposition dec;
    dec.map_name = map.name();
    dec.scales_used = ScaleTuple(cap);
    dec.centered = options.center_means;
    dec.max_order = options.max_order;
    dec.diagonal_only = options.diagonal_only;
    dec.approx = DyadicTensor(f.dims());

    const auto partitions = set_partitions(d);
    std::vector<int> j(static_cast<std::size_t>(d), 0);
    auto process_scale = [&](const ScaleTuple& scale) {
        const auto corners = detail::corner_averages(f, scale);
        const unsigned full_mask = (1u << d) - 1u;
        std::vector<DyadicTensor> factor(static_cast<std::size_t>(full_mask) + 1);
        for (unsigned b = 1; b <= full_mask; ++b) factor[b] = detail::block_factor(corners, b);

        ScaleTermNorms norms;
        norms.scale = scale;
        norms.order_l2.assign(static_cast<std::size_t>(d), 0.0);
        std::vector<DyadicTensor> order_sum(static_cast<std::size_t>(d) + 1);
        for (const auto& blocks : partitions) {
            const int m = static_cast<int>(blocks.size());
            if (m > order_limit) continue;
            DyadicTensor product = factor[blocks[0]];
            for (std::size_t bi = 1; bi < blocks.size(); ++bi)
                product.array() *= factor[blocks[bi]].array();
            if (order_sum[static_cast<std::size_t>(m)].size() == 0)
                order_sum[static_cast<std::size_t>(m)] = std::move(product);
            else
                order_sum[static_cast<std::size_t>(m)].array() += product.array();
            if (options.retain_terms) {
                PartitionTerm term;
                term.scale = scale;
                term.blocks = blocks_as_axis_lists(blocks, d);
                term.value = detail::map_deriv_on_boxes(map, m, corners[0], scale);
                for (unsigned b : blocks) term.value.array() *= factor[b].array();
                dec.terms.push_back(std::move(term));
            }
        }
        for (int m = 1; m <= order_limit; ++m) {
            auto& sum = order_sum[static_cast<std::size_t>(m)];
            if (sum.size() == 0) continue;
            const DyadicTensor weight = detail::map_deriv_on_boxes(map, m, corners[0], scale);
            sum.array() *= weight.array();
            norms.order_l2[static_cast<std::size_t>(m - 1)] =
                std::sqrt((sum.array() * sum.array()).sum());
            dec.approx.array() += sum.array();
        }
        dec.scale_norms.push_back(std::move(norms));
    };

    if (options.diagonal_only) {
        int cap_min = cap[0];
        for (int c : cap) cap_min = std::min(cap_min, c);
        for (int s = 0; s <= cap_min; ++s) process_scale(ScaleTuple::uniform(d, s));
    } else {
        while (true) {
            process_scale(ScaleTuple(j));
            int a = d - 1;
            for (; a >= 0; --a) {
                if (++j[static_cast<std::size_t>(a)] <= cap[static_cast<std::size_t>(a)]) break;
                j[static_cast<std::size_t>(a)] = 0;
            }
            if (a < 0) break;
        }
    }

    dec.residual = f;
    dec.residual.array() = map.eval(f.array()) - dec.approx.array();
    return dec;
}

}  // namespace paratensor
