#pragma once

#include "paratensor/grid.hpp"
#include "paratensor/haar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace paratensor {

// Cumulative l1-mass capture of the ranked coefficient magnitudes:
// fraction(k) = sum of the k largest |c| over the total sum of |c|.
struct EntropyCurve {
    std::vector<double> sorted_abs;   // descending, ties broken by coefficient index
    std::vector<double> cumulative;   // cumulative fraction at rank r+1
    std::vector<Index> ks;
    std::vector<double> fractions_at_ks;
    double total_l1 = 0.0;
    bool degenerate = false;  // all-zero input; fractions defined as 1.0

    double fraction(Index k) const {
        if (degenerate) return 1.0;
        if (k < 1 || k > static_cast<Index>(cumulative.size()))
            throw std::out_of_range("EntropyCurve: rank out of range");
        return cumulative[static_cast<std::size_t>(k - 1)];
    }
};

inline EntropyCurve entropy_curve(const HaarPyramid& pyramid, const std::vector<Index>& ks) {
    const Index n = pyramid.size();
    for (Index k : ks)
        if (k < 1 || k > n) throw std::invalid_argument("entropy_curve: k outside coefficient count");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const double va = std::abs(pyramid.coeffs[a]);
        const double vb = std::abs(pyramid.coeffs[b]);
        if (va != vb) return va > vb;
        return a < b;  // canonical index order on ties
    });

    EntropyCurve curve;
    curve.ks = ks;
    curve.sorted_abs.resize(static_cast<std::size_t>(n));
    curve.cumulative.resize(static_cast<std::size_t>(n));
    double running = 0.0;
    for (Index r = 0; r < n; ++r) {
        const double v = std::abs(pyramid.coeffs[order[static_cast<std::size_t>(r)]]);
        curve.sorted_abs[static_cast<std::size_t>(r)] = v;
        running += v;
        curve.cumulative[static_cast<std::size_t>(r)] = running;
    }
    curve.total_l1 = running;
    if (curve.total_l1 == 0.0) {
        curve.degenerate = true;
        for (auto& c : curve.cumulative) c = 1.0;
    } else {
        for (auto& c : curve.cumulative) c /= curve.total_l1;
        curve.cumulative.back() = 1.0;  // guard the tail against rounding drift
    }
    for (Index k : ks) curve.fractions_at_ks.push_back(curve.fraction(k));
    return curve;
}

struct CompareRow {
    std::string name;
    std::vector<double> fractions;
};

struct CompareReport {
    std::vector<Index> ks;
    std::vector<CompareRow> rows;        // original, approx, residual
    std::vector<EntropyCurve> curves;    // same order as rows

    // Capture-fraction table, one row per tensor.
    std::string table_csv() const {
        std::ostringstream out;
        out << "tensor";
        for (Index k : ks) out << ",k=" << k;
        out << "\n";
        for (const auto& row : rows) {
            out << row.name;
            for (double f : row.fractions) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f", f);
                out << ',' << buf;
            }
            out << "\n";
        }
        return out.str();
    }

    // Ranked-coefficient decay data. Every rank up to 4096, then every 64th
    // and the final rank, to keep plot files small without losing the shape.
    std::string decay_csv() const {
        std::ostringstream out;
        out << "rank";
        for (const auto& row : rows) out << ',' << row.name << "_abs," << row.name << "_cum";
        out << "\n";
        const Index n = curves.empty() ? 0 : static_cast<Index>(curves.front().sorted_abs.size());
        for (Index r = 0; r < n; ++r) {
            if (r >= 4096 && (r + 1) % 64 != 0 && r != n - 1) continue;
            out << (r + 1);
            for (const auto& curve : curves) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), ",%.12e,%.12f", curve.sorted_abs[static_cast<std::size_t>(r)],
                              curve.cumulative[static_cast<std::size_t>(r)]);
                out << buf;
            }
            out << "\n";
        }
        return out.str();
    }
};

// Analysis + entropy curve for each of the three pipeline tensors.
inline CompareReport compare_report(const DyadicTensor& original, const DyadicTensor& approx,
                                    const DyadicTensor& residual, const std::vector<Index>& ks) {
    CompareReport report;
    report.ks = ks;
    const std::vector<std::pair<std::string, const DyadicTensor*>> inputs = {
        {"original", &original}, {"approx", &approx}, {"residual", &residual}};
    for (const auto& [name, tensor] : inputs) {
        EntropyCurve curve = entropy_curve(analysis(*tensor), ks);
        CompareRow row;
        row.name = name;
        row.fractions = curve.fractions_at_ks;
        report.rows.push_back(std::move(row));
        report.curves.push_back(std::move(curve));
    }
    return report;
}

}  // namespace paratensor
