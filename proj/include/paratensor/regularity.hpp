#pragma once

#include "paratensor/grid.hpp"
#include "paratensor/haar.hpp"
#include "paratensor/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace paratensor {

struct ShellStat {
    int shell = 0;
    Index count = 0;
    double max_abs = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
};

// Per-shell statistics of the all-direction wavelet coefficients in the
// box-mean convention, with the fitted decay slope. For a mixed-Hoelder
// function with exponent alpha, max-per-shell decays like 2^{-s alpha}, so
// alpha_hat = -slope of log2(max) against the shell index s = j_1+...+j_d.
struct DecayReport {
    std::vector<ShellStat> shells;
    int excluded_finest = 0;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double alpha_hat = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;  // too little nonzero data to fit (e.g. constant input)
};

struct DecayOptions {
    int exclude_finest = 2;  // finest shells truncated by sampling, dropped from the fit
    Index min_dim = 16;
};

inline DecayReport decay_report(const DyadicTensor& f, const DecayOptions& options = {}) {
    const int d = f.rank();
    for (int a = 0; a < d; ++a)
        if (f.dim(a) < options.min_dim)
            throw std::invalid_argument("decay_report: dims must be >= 16 per axis");

    int shell_max = 0;
    for (int a = 0; a < d; ++a) shell_max += f.levels(a) - 1;
    const int fit_shells = shell_max + 1 - options.exclude_finest;
    if (fit_shells < 4) throw std::invalid_argument("decay_report: fewer than 4 shells to fit");

    const HaarPyramid pyramid = analysis(f);

    // Per-axis lookup: wavelet scale of an axis position, -1 for scaling.
    std::vector<std::vector<int>> scale_of(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        scale_of[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(f.dim(a)));
        for (Index p = 0; p < f.dim(a); ++p)
            scale_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] =
                p == 0 ? -1 : HaarPyramid::scale_of_position(p);
    }

    std::vector<std::vector<double>> per_shell(static_cast<std::size_t>(shell_max) + 1);
    std::vector<Index> idx(static_cast<std::size_t>(d), 0);
    for (Index flat = 0; flat < pyramid.size(); ++flat) {
        int shell = 0;
        double to_box = 1.0;
        bool all_wavelet = true;
        for (int a = 0; a < d && all_wavelet; ++a) {
            const int s = scale_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
            if (s < 0) {
                all_wavelet = false;
            } else {
                shell += s;
                to_box *= std::exp2(-0.5 * (f.levels(a) - s));
            }
        }
        if (all_wavelet)
            per_shell[static_cast<std::size_t>(shell)].push_back(std::abs(pyramid.coeffs[flat]) * to_box);
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < f.dim(a)) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }

    DecayReport report;
    report.excluded_finest = options.exclude_finest;
    for (int s = 0; s <= shell_max; ++s) {
        auto& values = per_shell[static_cast<std::size_t>(s)];
        ShellStat stat;
        stat.shell = s;
        stat.count = static_cast<Index>(values.size());
        if (!values.empty()) {
            std::sort(values.begin(), values.end());
            stat.max_abs = values.back();
            stat.q50 = values[(values.size() - 1) / 2];
            stat.q90 = values[(values.size() - 1) * 9 / 10];
        }
        report.shells.push_back(stat);
    }

    std::vector<std::pair<double, double>> points;
    for (int s = 0; s <= shell_max - options.exclude_finest; ++s) {
        const double m = report.shells[static_cast<std::size_t>(s)].max_abs;
        if (m > 0.0) points.emplace_back(static_cast<double>(s), std::log2(m));
    }
    if (points.size() < 4) {
        report.degenerate = true;
        return report;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (auto [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    report.slope = (n * sxy - sx * sy) / denom;
    report.alpha_hat = -report.slope;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    const double intercept = (sy - report.slope * sx) / n;
    for (auto [x, y] : points) {
        const double e = y - (intercept + report.slope * x);
        ss_res += e * e;
    }
    report.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return report;
}

// Random member of the mixed-Hoelder class with prescribed exponent: tensor
// Haar synthesis with all-direction wavelet coefficients drawn uniformly in
// [-1,1] and scaled by 2^{-(j_1+...+j_d)(alpha + 1/2)} in the orthonormal
// convention, so box-mean coefficients scale as 2^{-(sum j) alpha}.
// Coefficients with a scaling component in any axis are zero, which also makes
// every directional mean vanish. Deterministic per seed via the counter PRNG
// with the pyramid position as the counter.
inline DyadicTensor synth_field(std::vector<Index> dims, double alpha, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("synth_field: alpha must lie in (0,1); asserted range is (0,1/2)");
    HaarPyramid pyramid;
    pyramid.dims = std::move(dims);
    const int d = static_cast<int>(pyramid.dims.size());
    Index total = 1;
    for (Index v : pyramid.dims) total *= v;
    pyramid.coeffs = ArrayX<double>::Zero(total);

    std::vector<std::vector<int>> scale_of(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        scale_of[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(pyramid.dims[static_cast<std::size_t>(a)]));
        for (Index p = 0; p < pyramid.dims[static_cast<std::size_t>(a)]; ++p)
            scale_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] =
                p == 0 ? -1 : HaarPyramid::scale_of_position(p);
    }

    const CounterRng rng(seed);
    std::vector<Index> idx(static_cast<std::size_t>(d), 0);
    for (Index flat = 0; flat < total; ++flat) {
        int shell = 0;
        bool all_wavelet = true;
        for (int a = 0; a < d && all_wavelet; ++a) {
            const int s = scale_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
            if (s < 0)
                all_wavelet = false;
            else
                shell += s;
        }
        if (all_wavelet)
            pyramid.coeffs[flat] = rng.symmetric(static_cast<std::uint64_t>(flat)) *
                                   std::exp2(-(alpha + 0.5) * shell);
        int a = d - 1;
        for (; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < pyramid.dims[static_cast<std::size_t>(a)]) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return synthesis(pyramid);
}

using IndexPair = std::pair<std::vector<Index>, std::vector<Index>>;

// Random sample-index pairs for the mixed-difference probe.
inline std::vector<IndexPair> random_index_pairs(const std::vector<Index>& dims, Index count,
                                                 std::uint64_t seed) {
    const int d = static_cast<int>(dims.size());
    const CounterRng rng(seed);
    std::vector<IndexPair> pairs;
    pairs.reserve(static_cast<std::size_t>(count));
    std::uint64_t ctr = 0;
    for (Index p = 0; p < count; ++p) {
        IndexPair pair;
        pair.first.resize(static_cast<std::size_t>(d));
        pair.second.resize(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) {
            pair.first[static_cast<std::size_t>(a)] =
                static_cast<Index>(rng.bits(ctr++) % static_cast<std::uint64_t>(dims[static_cast<std::size_t>(a)]));
            pair.second[static_cast<std::size_t>(a)] =
                static_cast<Index>(rng.bits(ctr++) % static_cast<std::uint64_t>(dims[static_cast<std::size_t>(a)]));
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

// Direct (non-wavelet) regularity probe: evaluates the d-fold mixed difference
// over the given corner pairs and returns
//   max |Delta_mixed| / prod_i d_i(x_i, x'_i)^alpha
// with d_i the dyadic distance at grid resolution.
inline double mixed_difference_check(const DyadicTensor& f, const std::vector<IndexPair>& pairs,
                                     double alpha) {
    const int d = f.rank();
    double worst = 0.0;
    std::vector<Index> point(static_cast<std::size_t>(d));
    for (const auto& [a, b] : pairs) {
        if (static_cast<int>(a.size()) != d || static_cast<int>(b.size()) != d)
            throw std::invalid_argument("mixed_difference_check: pair rank mismatch");
        double diff = 0.0;
        for (unsigned pick = 0; pick < (1u << d); ++pick) {
            int bits = 0;
            for (int axis = 0; axis < d; ++axis) {
                const bool second = (pick & (1u << axis)) != 0;
                bits += second ? 1 : 0;
                point[static_cast<std::size_t>(axis)] =
                    second ? b[static_cast<std::size_t>(axis)] : a[static_cast<std::size_t>(axis)];
            }
            const double value = f.array()[f.flat_index(point)];
            diff += ((d - bits) % 2 == 0) ? value : -value;
        }
        double denom = 1.0;
        for (int axis = 0; axis < d; ++axis)
            denom *= std::pow(dyadic_distance_cells(a[static_cast<std::size_t>(axis)],
                                                    b[static_cast<std::size_t>(axis)], f.levels(axis)),
                              alpha);
        worst = std::max(worst, std::abs(diff) / denom);
    }
    return worst;
}

}  // namespace paratensor
