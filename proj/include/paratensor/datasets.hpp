#pragma once

#include "paratensor/grid.hpp"
#include "paratensor/haar.hpp"
#include "paratensor/rng.hpp"
#include "paratensor/smoothmap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace paratensor {

struct PointCloud {
    Eigen::Matrix<double, Eigen::Dynamic, 3> points;
    std::uint64_t seed = 0;
    std::string role;

    Index size() const { return points.rows(); }
};

// n i.i.d. uniform points in [-1,1]^3 from the counter PRNG; coordinate c of
// point p consumes counter 3p + c.
inline PointCloud gen_points(Index n, std::uint64_t seed, std::string role = "source") {
    PointCloud cloud;
    cloud.seed = seed;
    cloud.role = std::move(role);
    cloud.points.resize(n, 3);
    const CounterRng rng(seed);
    for (Index p = 0; p < n; ++p)
        for (Index c = 0; c < 3; ++c)
            cloud.points(p, c) = rng.symmetric(static_cast<std::uint64_t>(3 * p + c));
    return cloud;
}

enum class Ordering { none, pca1, hilbert };

inline Ordering parse_ordering(const std::string& name) {
    if (name == "none") return Ordering::none;
    if (name == "pca1") return Ordering::pca1;
    if (name == "hilbert") return Ordering::hilbert;
    throw std::invalid_argument("unknown ordering '" + name + "'");
}

inline std::string ordering_name(Ordering o) {
    switch (o) {
        case Ordering::none: return "none";
        case Ordering::pca1: return "pca1";
        case Ordering::hilbert: return "hilbert";
    }
    return "?";
}

namespace detail {

// Skilling's transpose algorithm: Gray-decoded per-axis bit planes of the
// Hilbert index. bits per axis = b, n axes.
inline void axes_to_transpose(std::uint32_t* x, int b, int n) {
    std::uint32_t m = 1u << (b - 1);
    for (std::uint32_t q = m; q > 1; q >>= 1) {
        const std::uint32_t p = q - 1;
        for (int i = 0; i < n; ++i) {
            if (x[i] & q) {
                x[0] ^= p;
            } else {
                const std::uint32_t t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
    }
    for (int i = 1; i < n; ++i) x[i] ^= x[i - 1];
    std::uint32_t t = 0;
    for (std::uint32_t q = m; q > 1; q >>= 1)
        if (x[n - 1] & q) t ^= q - 1;
    for (int i = 0; i < n; ++i) x[i] ^= t;
}

inline std::uint64_t hilbert_key_3d(double px, double py, double pz, int bits = 10) {
    auto quantize = [bits](double v) {
        const double unit = (v + 1.0) * 0.5;
        const double scaled = unit * static_cast<double>(1u << bits);
        const auto q = static_cast<std::int64_t>(scaled);
        return static_cast<std::uint32_t>(std::clamp<std::int64_t>(q, 0, (1 << bits) - 1));
    };
    std::uint32_t x[3] = {quantize(px), quantize(py), quantize(pz)};
    axes_to_transpose(x, bits, 3);
    std::uint64_t key = 0;
    for (int bit = bits - 1; bit >= 0; --bit)
        for (int axis = 0; axis < 3; ++axis)
            key = (key << 1) | ((x[axis] >> bit) & 1u);
    return key;
}

}  // namespace detail

// Point order induced by the strategy. pca1 sorts along the first principal
// component (the documented substitute for the external questionnaire
// organizer); hilbert sorts by 3D Hilbert-curve index; none keeps generation
// order. Ties resolve by original index, and the principal axis sign is pinned
// by making its largest-magnitude component positive, so the permutation is
// deterministic.
inline std::vector<Index> ordering_permutation(const PointCloud& cloud, Ordering ordering) {
    const Index n = cloud.size();
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    if (ordering == Ordering::none) return perm;

    std::vector<double> key(static_cast<std::size_t>(n));
    if (ordering == Ordering::pca1) {
        const Eigen::RowVector3d mean = cloud.points.colwise().mean();
        const Eigen::Matrix<double, Eigen::Dynamic, 3> centered = cloud.points.rowwise() - mean;
        const Eigen::Matrix3d cov =
            centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(n - 1));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
        Eigen::Vector3d axis = solver.eigenvectors().col(2);  // largest eigenvalue last
        int imax = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(axis[i]) > std::abs(axis[imax])) imax = i;
        if (axis[imax] < 0) axis = -axis;
        for (Index p = 0; p < n; ++p) key[static_cast<std::size_t>(p)] = centered.row(p).dot(axis);
    } else {
        for (Index p = 0; p < n; ++p)
            key[static_cast<std::size_t>(p)] = static_cast<double>(
                detail::hilbert_key_3d(cloud.points(p, 0), cloud.points(p, 1), cloud.points(p, 2)));
    }
    std::stable_sort(perm.begin(), perm.end(),
                     [&](Index a, Index b) { return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)]; });
    return perm;
}

inline constexpr double kDefaultDistFloor = 1e-3;

// Pairwise Euclidean distance matrix with rows/columns permuted by the
// ordering strategy and clamped below at dist_floor so that 1/x maps stay in
// domain. Cloud sizes must be powers of two.
inline DyadicTensor distance_matrix(const PointCloud& src, const PointCloud& tgt,
                                    Ordering ordering, double dist_floor = kDefaultDistFloor) {
    if (!is_power_of_two(src.size()) || !is_power_of_two(tgt.size()))
        throw std::invalid_argument("distance_matrix: cloud sizes must be powers of two");
    const auto row_perm = ordering_permutation(src, ordering);
    const auto col_perm = ordering_permutation(tgt, ordering);
    DyadicTensor m({src.size(), tgt.size()});
    for (Index a = 0; a < src.size(); ++a) {
        const Eigen::RowVector3d x = src.points.row(row_perm[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < tgt.size(); ++b) {
            const double dist = (x - tgt.points.row(col_perm[static_cast<std::size_t>(b)])).norm();
            m.array()[a * tgt.size() + b] = std::max(dist, dist_floor);
        }
    }
    return m;
}

// Pointwise application of the map to a sample tensor.
inline DyadicTensor kernel_matrix(const DyadicTensor& m, const SmoothMap& map) {
    DyadicTensor out = m;
    out.array() = map.eval(m.array());
    return out;
}

// Time-varying cone singularity on x,y in [-1,1], t in [0,1]:
//   f = (1 - |z|)^alpha inside |z| < 1, (1 - 1/|z|)^alpha outside, 0 on the ring,
// with |z| = sqrt(x^2 + y^2 + t^2). The zero ring in the (x,y) slice at time t
// has radius sqrt(1 - t^2) and vanishes at t = 1.
struct ConeVolume {
    DyadicTensor samples;  // dims [Nx, Ny, Nt]
    double alpha = 0.3;
};

inline double cone_ring_radius(double t) { return t < 1.0 ? std::sqrt(1.0 - t * t) : 0.0; }

inline ConeVolume cone_volume(const std::vector<Index>& dims, double alpha) {
    if (dims.size() != 3) throw std::invalid_argument("cone_volume: dims must have rank 3");
    ConeVolume v;
    v.alpha = alpha;
    v.samples = DyadicTensor(dims);
    const Index nx = dims[0], ny = dims[1], nt = dims[2];
    Index flat = 0;
    for (Index ix = 0; ix < nx; ++ix) {
        const double x = -1.0 + 2.0 * (static_cast<double>(ix) + 0.5) / static_cast<double>(nx);
        for (Index iy = 0; iy < ny; ++iy) {
            const double y = -1.0 + 2.0 * (static_cast<double>(iy) + 0.5) / static_cast<double>(ny);
            for (Index it = 0; it < nt; ++it, ++flat) {
                const double t = (static_cast<double>(it) + 0.5) / static_cast<double>(nt);
                const double r = std::sqrt(x * x + y * y + t * t);
                double value = 0.0;
                if (r < 1.0)
                    value = std::pow(1.0 - r, alpha);
                else if (r > 1.0)
                    value = std::pow(1.0 - 1.0 / r, alpha);
                v.samples.array()[flat] = value;
            }
        }
    }
    return v;
}

namespace detail {

inline DyadicTensor time_slice(const DyadicTensor& volume, Index it) {
    const Index nx = volume.dim(0), ny = volume.dim(1), nt = volume.dim(2);
    DyadicTensor slice({nx, ny});
    for (Index ix = 0; ix < nx; ++ix)
        for (Index iy = 0; iy < ny; ++iy)
            slice.array()[ix * ny + iy] = volume.array()[(ix * ny + iy) * nt + it];
    return slice;
}

inline void set_time_slice(DyadicTensor& volume, Index it, const DyadicTensor& slice) {
    const Index ny = volume.dim(1), nt = volume.dim(2);
    for (Index ix = 0; ix < volume.dim(0); ++ix)
        for (Index iy = 0; iy < ny; ++iy)
            volume.array()[(ix * ny + iy) * nt + it] = slice.array()[ix * ny + iy];
}

}  // namespace detail

// Band-wise amplitude modulation: per time slice, 2D Haar analysis in (x,y)
// and every coefficient at scales (j_x, j_y) multiplied by (j_x + j_y)/2,
// scaling slots counting as scale 0. The coarsest band is annihilated.
// This is the pre-distortion field h; the distorted volume is sin(h).
inline DyadicTensor modulate_bands(const ConeVolume& v) {
    const DyadicTensor& vol = v.samples;
    DyadicTensor out(vol.dims());
    const Index nx = vol.dim(0), ny = vol.dim(1);
    std::vector<double> weight_x(static_cast<std::size_t>(nx)), weight_y(static_cast<std::size_t>(ny));
    for (Index p = 0; p < nx; ++p)
        weight_x[static_cast<std::size_t>(p)] = p == 0 ? 0.0 : HaarPyramid::scale_of_position(p);
    for (Index p = 0; p < ny; ++p)
        weight_y[static_cast<std::size_t>(p)] = p == 0 ? 0.0 : HaarPyramid::scale_of_position(p);
    for (Index it = 0; it < vol.dim(2); ++it) {
        HaarPyramid pyramid = analysis(detail::time_slice(vol, it));
        for (Index px = 0; px < nx; ++px)
            for (Index py = 0; py < ny; ++py)
                pyramid.coeffs[px * ny + py] *=
                    0.5 * (weight_x[static_cast<std::size_t>(px)] + weight_y[static_cast<std::size_t>(py)]);
        detail::set_time_slice(out, it, synthesis(pyramid));
    }
    return out;
}

// The graphic-equalizer distortion of the cone volume: pointwise sine of the
// band-modulated field.
inline DyadicTensor equalize(const ConeVolume& v) {
    DyadicTensor h = modulate_bands(v);
    h.array() = h.array().sin();
    return h;
}

}  // namespace paratensor
