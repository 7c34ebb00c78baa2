#pragma once

#include "paratensor/grid.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace paratensor {

namespace detail {

// Visit every 1D line of the tensor along `axis`. fn receives (base, stride):
// the line elements are data[base + t*stride], t in [0, dim(axis)).
template <typename Scalar, typename Fn>
void for_each_line(const DyadicTensorT<Scalar>& f, int axis, Fn&& fn) {
    const Index len = f.dim(axis);
    const Index stride = f.stride(axis);
    const Index outer_count = f.size() / (len * stride);
    for (Index outer = 0; outer < outer_count; ++outer) {
        const Index block = outer * len * stride;
        for (Index inner = 0; inner < stride; ++inner) fn(block + inner, stride);
    }
}

}  // namespace detail

// One-axis averaging operator P^{j}: each sample replaced by the mean of its
// scale-j dyadic interval along `axis`. Box means use a fixed left-to-right
// summation order, so results are bit-reproducible.
template <typename Scalar>
DyadicTensorT<Scalar> avg_axis(const DyadicTensorT<Scalar>& f, int axis, int scale) {
    if (axis < 0 || axis >= f.rank()) throw std::out_of_range("avg_axis: bad axis");
    if (scale < 0 || scale > f.levels(axis)) throw std::out_of_range("avg_axis: bad scale");
    const Index len = f.dim(axis);
    const Index block = len >> scale;
    if (block == 1) return f;
    DyadicTensorT<Scalar> out = f;
    const Scalar inv = Scalar(1) / static_cast<Scalar>(block);
    detail::for_each_line(f, axis, [&](Index base, Index stride) {
        for (Index b0 = 0; b0 < len; b0 += block) {
            Scalar sum = 0;
            for (Index t = 0; t < block; ++t) sum += f.array()[base + (b0 + t) * stride];
            const Scalar mean = sum * inv;
            for (Index t = 0; t < block; ++t) out.array()[base + (b0 + t) * stride] = mean;
        }
    });
    return out;
}

// Averaging operator P^{j_1,...,j_d}: per-axis box means over B^j_k, returned
// as a piecewise-constant tensor with the dims of f.
template <typename Scalar>
DyadicTensorT<Scalar> average_op(const DyadicTensorT<Scalar>& f, const ScaleTuple& j) {
    validate_scale(f, j);
    DyadicTensorT<Scalar> out = f;
    for (int a = 0; a < f.rank(); ++a) out = avg_axis(out, a, j[a]);
    return out;
}

// One-axis difference operator Q^{j} = P^{j+1} - P^{j}. Requires j < N_axis:
// there is no finer scale beyond the sample grid.
template <typename Scalar>
DyadicTensorT<Scalar> difference_op(const DyadicTensorT<Scalar>& f, int axis, int scale) {
    if (axis < 0 || axis >= f.rank()) throw std::out_of_range("difference_op: bad axis");
    if (scale < 0 || scale >= f.levels(axis))
        throw std::out_of_range("difference_op: scale must be below the axis depth");
    DyadicTensorT<Scalar> fine = avg_axis(f, axis, scale + 1);
    const DyadicTensorT<Scalar> coarse = avg_axis(f, axis, scale);
    fine.array() -= coarse.array();
    return fine;
}

// Subtracts the directional mean along every axis: f <- prod_i (id - P_i^0) f.
// Afterwards the average of f along each direction is identically zero, the
// hypothesis of the Calderon-Zygmund split.
template <typename Scalar>
DyadicTensorT<Scalar> center_directional_means(const DyadicTensorT<Scalar>& f) {
    DyadicTensorT<Scalar> out = f;
    for (int a = 0; a < f.rank(); ++a) {
        DyadicTensorT<Scalar> mean = avg_axis(out, a, 0);
        out.array() -= mean.array();
    }
    return out;
}

// Full tensor-product Haar coefficients of a DyadicTensor, orthonormal in the
// plain discrete dot product (sum of squares preserved).
//
// Layout: same flat shape as the input. Along each axis, position 0 holds the
// scaling component phi^0 and positions [2^s, 2^{s+1}) hold the wavelet
// components psi^s_k, s in [0, N_axis), k 0-based within the scale. A
// coefficient is indexed per axis by either the scaling slot or a (scale,
// location) wavelet slot.
template <typename Scalar>
struct HaarPyramidT {
    std::vector<Index> dims;
    ArrayX<Scalar> coeffs;

    Index size() const { return coeffs.size(); }
    int rank() const { return static_cast<int>(dims.size()); }

    // Coefficient of the constant basis function (all axes scaling).
    Scalar mean() const { return coeffs[0]; }

    // Wavelet scale of an axis position, or -1 for the scaling slot.
    static int scale_of_position(Index p) {
        if (p == 0) return -1;
        int s = 0;
        while ((Index{2} << s) <= p) ++s;
        return s;
    }

    // 0-based wavelet location of an axis position (valid when p >= 1).
    static Index location_of_position(Index p) {
        const int s = scale_of_position(p);
        return p - (Index{1} << s);
    }

    static Index position_of(int scale, Index location) {
        return (Index{1} << scale) + location;
    }
};

using HaarPyramid = HaarPyramidT<double>;

namespace detail {

// In-place full Haar pass over one line: repeated orthonormal butterfly
// (a,b) -> ((a+b)/sqrt2, (a-b)/sqrt2) with averages packed to the front.
template <typename Scalar>
void haar_line_forward(ArrayX<Scalar>& data, Index base, Index stride, Index len,
                       std::vector<Scalar>& scratch) {
    const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
    for (Index n = len; n > 1; n /= 2) {
        const Index half = n / 2;
        for (Index i = 0; i < half; ++i) {
            const Scalar a = data[base + (2 * i) * stride];
            const Scalar b = data[base + (2 * i + 1) * stride];
            scratch[static_cast<std::size_t>(i)] = (a + b) * inv_sqrt2;
            scratch[static_cast<std::size_t>(half + i)] = (a - b) * inv_sqrt2;
        }
        for (Index i = 0; i < n; ++i) data[base + i * stride] = scratch[static_cast<std::size_t>(i)];
    }
}

template <typename Scalar>
void haar_line_inverse(ArrayX<Scalar>& data, Index base, Index stride, Index len,
                       std::vector<Scalar>& scratch) {
    const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
    for (Index n = 2; n <= len; n *= 2) {
        const Index half = n / 2;
        for (Index i = 0; i < half; ++i) {
            const Scalar avg = data[base + i * stride];
            const Scalar diff = data[base + (half + i) * stride];
            scratch[static_cast<std::size_t>(2 * i)] = (avg + diff) * inv_sqrt2;
            scratch[static_cast<std::size_t>(2 * i + 1)] = (avg - diff) * inv_sqrt2;
        }
        for (Index i = 0; i < n; ++i) data[base + i * stride] = scratch[static_cast<std::size_t>(i)];
    }
}

}  // namespace detail

// Full tensor-product Haar analysis: the complete 1D transform applied along
// every axis in index order. O(n) per axis pass.
template <typename Scalar>
HaarPyramidT<Scalar> analysis(const DyadicTensorT<Scalar>& f) {
    HaarPyramidT<Scalar> p;
    p.dims = f.dims();
    p.coeffs = f.array();
    Index max_len = 0;
    for (int a = 0; a < f.rank(); ++a) max_len = std::max(max_len, f.dim(a));
    std::vector<Scalar> scratch(static_cast<std::size_t>(max_len));
    for (int a = 0; a < f.rank(); ++a) {
        detail::for_each_line(f, a, [&](Index base, Index stride) {
            detail::haar_line_forward(p.coeffs, base, stride, f.dim(a), scratch);
        });
    }
    return p;
}

// Exact inverse of analysis.
template <typename Scalar>
DyadicTensorT<Scalar> synthesis(const HaarPyramidT<Scalar>& p) {
    DyadicTensorT<Scalar> out(p.dims, p.coeffs);
    Index max_len = 0;
    for (int a = 0; a < out.rank(); ++a) max_len = std::max(max_len, out.dim(a));
    std::vector<Scalar> scratch(static_cast<std::size_t>(max_len));
    for (int a = out.rank() - 1; a >= 0; --a) {
        detail::for_each_line(out, a, [&](Index base, Index stride) {
            detail::haar_line_inverse(out.array(), base, stride, out.dim(a), scratch);
        });
    }
    return out;
}

// Mixed wavelet/characteristic coefficient in the box-mean convention:
// the mean over box b of f times the product over mask axes of the Haar sign
// (+1 on the left half of I^{j_i}_{k_i}, -1 on the right). For mask axes this
// is the kernel of Q^{j_i}; for unmasked axes it is the plain box mean.
//
// For the all-mask case (wavelet in every direction) the bridge to the
// orthonormal coefficients of `analysis` is
//   c_orth(j,k) = c_box(j,k) * 2^{sum_i (N_i - j_i) / 2},
// one factor 2^{(N_i - j_i)/2} per axis. The decay estimates quote the
// box-mean convention; the compression paths use the orthonormal one.
template <typename Scalar>
Scalar box_coefficient(const DyadicTensorT<Scalar>& f, const BoxIndex& b,
                       const std::vector<bool>& mask) {
    validate_box(f, b);
    if (static_cast<int>(mask.size()) != f.rank())
        throw std::out_of_range("box_coefficient: mask rank mismatch");
    std::vector<Index> half(static_cast<std::size_t>(f.rank()), 0);
    for (int a = 0; a < f.rank(); ++a) {
        if (!mask[static_cast<std::size_t>(a)]) continue;
        if (b.j[a] >= f.levels(a))
            throw std::out_of_range("box_coefficient: wavelet axis needs scale below depth");
        auto [begin, end] = box_axis_range(f, b, a);
        half[static_cast<std::size_t>(a)] = begin + (end - begin) / 2;
    }
    Scalar sum = 0;
    Index count = 0;
    detail::for_each_box_sample(f, b, [&](Index flat, std::span<const Index> idx) {
        Scalar sign = 1;
        for (int a = 0; a < f.rank(); ++a)
            if (mask[static_cast<std::size_t>(a)] && idx[static_cast<std::size_t>(a)] >= half[static_cast<std::size_t>(a)])
                sign = -sign;
        sum += sign * f.array()[flat];
        ++count;
    });
    return sum / static_cast<Scalar>(count);
}

}  // namespace paratensor
