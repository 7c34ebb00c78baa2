#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace paratensor {

using Index = Eigen::Index;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

inline constexpr int kMaxRank = 4;

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Index n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("log2_exact: not a power of two");
    int l = 0;
    while ((Index{1} << l) < n) ++l;
    return l;
}

// d-dimensional sample grid on [0,1]^d. dims_i = 2^{N_i}; sample m_i sits at
// the cell center (m_i + 0.5) / 2^{N_i}. Storage is flat row-major (axis 0
// slowest). Immutable by convention once filled.
template <typename Scalar>
class DyadicTensorT {
public:
    DyadicTensorT() = default;

    explicit DyadicTensorT(std::vector<Index> dims)
        : dims_(std::move(dims)), data_(ArrayX<Scalar>::Zero(check_dims(dims_))) {}

    DyadicTensorT(std::vector<Index> dims, ArrayX<Scalar> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        if (check_dims(dims_) != data_.size())
            throw std::invalid_argument("DyadicTensor: dims/data size mismatch");
    }

    int rank() const { return static_cast<int>(dims_.size()); }
    const std::vector<Index>& dims() const { return dims_; }
    Index dim(int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
    Index size() const { return data_.size(); }

    // Number of dyadic scales along an axis: dim(axis) == 2^levels(axis).
    int levels(int axis) const { return log2_exact(dim(axis)); }

    Index stride(int axis) const {
        Index s = 1;
        for (int a = rank() - 1; a > axis; --a) s *= dims_[static_cast<std::size_t>(a)];
        return s;
    }

    Index flat_index(std::span<const Index> idx) const {
        if (static_cast<int>(idx.size()) != rank())
            throw std::out_of_range("DyadicTensor: index rank mismatch");
        Index flat = 0;
        for (int a = 0; a < rank(); ++a) {
            if (idx[static_cast<std::size_t>(a)] < 0 || idx[static_cast<std::size_t>(a)] >= dims_[static_cast<std::size_t>(a)])
                throw std::out_of_range("DyadicTensor: index out of range");
            flat = flat * dims_[static_cast<std::size_t>(a)] + idx[static_cast<std::size_t>(a)];
        }
        return flat;
    }

    Scalar operator()(std::initializer_list<Index> idx) const {
        return data_[flat_index(std::span<const Index>(idx.begin(), idx.size()))];
    }
    Scalar& operator()(std::initializer_list<Index> idx) {
        return data_[flat_index(std::span<const Index>(idx.begin(), idx.size()))];
    }

    const ArrayX<Scalar>& array() const { return data_; }
    ArrayX<Scalar>& array() { return data_; }

    static DyadicTensorT constant(std::vector<Index> dims, Scalar value) {
        DyadicTensorT t(std::move(dims));
        t.array().setConstant(value);
        return t;
    }

    bool same_shape(const DyadicTensorT& other) const { return dims_ == other.dims_; }

private:
    static Index check_dims(const std::vector<Index>& dims) {
        if (dims.empty() || dims.size() > kMaxRank)
            throw std::invalid_argument("DyadicTensor: rank must be in 1..4");
        Index total = 1;
        for (Index d : dims) {
            if (!is_power_of_two(d))
                throw std::invalid_argument("DyadicTensor: every dim must be a power of two");
            total *= d;
        }
        return total;
    }

    std::vector<Index> dims_;
    ArrayX<Scalar> data_;
};

using DyadicTensor = DyadicTensorT<double>;

// Per-axis dyadic scales (j_1, ..., j_d), 0 = coarsest.
struct ScaleTuple {
    std::vector<int> j;

    ScaleTuple() = default;
    ScaleTuple(std::initializer_list<int> init) : j(init) {}
    explicit ScaleTuple(std::vector<int> init) : j(std::move(init)) {}

    int rank() const { return static_cast<int>(j.size()); }
    int operator[](int axis) const { return j.at(static_cast<std::size_t>(axis)); }
    int sum() const {
        int s = 0;
        for (int v : j) s += v;
        return s;
    }
    static ScaleTuple uniform(int rank, int scale) {
        return ScaleTuple(std::vector<int>(static_cast<std::size_t>(rank), scale));
    }
    bool operator==(const ScaleTuple&) const = default;
};

// Dyadic box B^j_k = prod_i I^{j_i}_{k_i} with I^j_k = (2^{-j}(k-1), 2^{-j} k].
// Location indices k are 1-based: k_i in 1..2^{j_i}.
struct BoxIndex {
    ScaleTuple j;
    std::vector<Index> k;

    int rank() const { return j.rank(); }
    bool operator==(const BoxIndex&) const = default;
};

template <typename Scalar>
void validate_scale(const DyadicTensorT<Scalar>& f, const ScaleTuple& j) {
    if (j.rank() != f.rank()) throw std::out_of_range("ScaleTuple: rank mismatch");
    for (int a = 0; a < f.rank(); ++a)
        if (j[a] < 0 || j[a] > f.levels(a))
            throw std::out_of_range("ScaleTuple: scale out of range for axis " + std::to_string(a));
}

template <typename Scalar>
void validate_box(const DyadicTensorT<Scalar>& f, const BoxIndex& b) {
    validate_scale(f, b.j);
    if (static_cast<int>(b.k.size()) != f.rank()) throw std::out_of_range("BoxIndex: rank mismatch");
    for (int a = 0; a < f.rank(); ++a)
        if (b.k[static_cast<std::size_t>(a)] < 1 || b.k[static_cast<std::size_t>(a)] > (Index{1} << b.j[a]))
            throw std::out_of_range("BoxIndex: location out of range for axis " + std::to_string(a));
}

// Lebesgue measure of B^j_k, exactly 2^{-(j_1+...+j_d)}.
inline double box_measure(const BoxIndex& b) { return std::ldexp(1.0, -b.j.sum()); }

// Half-open sample range [begin, end) covered by the box along one axis.
template <typename Scalar>
std::pair<Index, Index> box_axis_range(const DyadicTensorT<Scalar>& f, const BoxIndex& b, int axis) {
    const Index block = f.dim(axis) >> b.j[axis];
    const Index begin = (b.k[static_cast<std::size_t>(axis)] - 1) * block;
    return {begin, begin + block};
}

namespace detail {

template <typename Scalar, typename Fn>
void for_each_box_sample(const DyadicTensorT<Scalar>& f, const BoxIndex& b, Fn&& fn) {
    const int r = f.rank();
    std::vector<Index> lo(static_cast<std::size_t>(r)), hi(static_cast<std::size_t>(r)),
        idx(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a) {
        auto [begin, end] = box_axis_range(f, b, a);
        lo[static_cast<std::size_t>(a)] = begin;
        hi[static_cast<std::size_t>(a)] = end;
        idx[static_cast<std::size_t>(a)] = begin;
    }
    while (true) {
        Index flat = 0;
        for (int a = 0; a < r; ++a) flat = flat * f.dim(a) + idx[static_cast<std::size_t>(a)];
        fn(flat, std::span<const Index>(idx));
        int a = r - 1;
        for (; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < hi[static_cast<std::size_t>(a)]) break;
            idx[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)];
        }
        if (a < 0) break;
    }
}

}  // namespace detail

// Flat indices of the samples whose cell centers lie in box b, row-major order.
template <typename Scalar>
std::vector<Index> box_sample_indices(const DyadicTensorT<Scalar>& f, const BoxIndex& b) {
    validate_box(f, b);
    std::vector<Index> out;
    Index count = 1;
    for (int a = 0; a < f.rank(); ++a) count *= f.dim(a) >> b.j[a];
    out.reserve(static_cast<std::size_t>(count));
    detail::for_each_box_sample(f, b, [&](Index flat, std::span<const Index>) { out.push_back(flat); });
    return out;
}

// Gathered copy of the samples inside box b (row-major within the box).
template <typename Scalar>
ArrayX<Scalar> box_slice(const DyadicTensorT<Scalar>& f, const BoxIndex& b) {
    validate_box(f, b);
    Index count = 1;
    for (int a = 0; a < f.rank(); ++a) count *= f.dim(a) >> b.j[a];
    ArrayX<Scalar> out(count);
    Index pos = 0;
    detail::for_each_box_sample(f, b, [&](Index flat, std::span<const Index>) { out[pos++] = f.array()[flat]; });
    return out;
}

// Coordinate of sample center m on a 2^levels grid.
inline double cell_center(Index m, int levels) {
    return (static_cast<double>(m) + 0.5) * std::ldexp(1.0, -levels);
}

// Dyadic distance: inf over dyadic intervals containing both points of the
// interval length. Equal points give 0 (continuum limit); points that only
// share [0,1] give 1. Intervals follow the (lo, hi] convention; the closure
// at 0 is harmless because sample centers are never dyadic rationals.
inline double dyadic_distance(double x, double y) {
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
        throw std::domain_error("dyadic_distance: inputs must lie in [0,1]");
    if (x == y) return 0.0;
    double lo = 0.0, hi = 1.0;
    constexpr int kMaxDepth = 60;
    for (int depth = 0; depth < kMaxDepth; ++depth) {
        const double mid = 0.5 * (lo + hi);
        const bool x_left = x <= mid;
        const bool y_left = y <= mid;
        if (x_left != y_left) return hi - lo;
        if (x_left)
            hi = mid;
        else
            lo = mid;
    }
    return hi - lo;
}

// Dyadic distance between two sample cells of a 2^levels grid. Two equal
// indices share their own cell, so the distance is the cell width 2^{-levels}.
inline double dyadic_distance_cells(Index a, Index b, int levels) {
    const Index n = Index{1} << levels;
    if (a < 0 || a >= n || b < 0 || b >= n)
        throw std::domain_error("dyadic_distance_cells: cell index out of range");
    if (a == b) return std::ldexp(1.0, -levels);
    std::uint64_t x = static_cast<std::uint64_t>(a ^ b);
    int high = 63;
    while (((x >> high) & 1ULL) == 0) --high;
    // Deepest common ancestor depth; its interval length is the distance.
    return std::ldexp(1.0, -(levels - high - 1));
}

}  // namespace paratensor
