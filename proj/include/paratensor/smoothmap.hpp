#pragma once

#include "paratensor/grid.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace paratensor {

// Scalar map A with evaluable derivatives A', A'', ..., up to order dmax.
// Maps are stateless and safe to share across threads.
class SmoothMap {
public:
    using Eval = std::function<double(double)>;
    using Deriv = std::function<double(int, double)>;

    SmoothMap(std::string name, int dmax, Eval eval, Deriv deriv, double singular_below = 0.0)
        : name_(std::move(name)),
          dmax_(dmax),
          eval_(std::move(eval)),
          deriv_(std::move(deriv)),
          singular_below_(singular_below) {
        if (dmax_ < 1) throw std::invalid_argument("SmoothMap: dmax must be >= 1");
    }

    const std::string& name() const { return name_; }
    int dmax() const { return dmax_; }

    // Smallest admissible |x|; 0 means the whole line is fine.
    double singular_below() const { return singular_below_; }
    bool near_singularity(double x) const {
        return singular_below_ > 0.0 && std::abs(x) <= singular_below_;
    }

    double eval(double x) const {
        guard(x);
        return eval_(x);
    }

    // m-th derivative, m in 0..dmax (0 = the map itself).
    double deriv(int m, double x) const {
        if (m < 0 || m > dmax_) throw std::invalid_argument("SmoothMap: derivative order out of range");
        if (m == 0) return eval(x);
        guard(x);
        return deriv_(m, x);
    }

    template <typename Scalar>
    ArrayX<Scalar> eval(const ArrayX<Scalar>& x) const {
        ArrayX<Scalar> out(x.size());
        for (Index i = 0; i < x.size(); ++i) out[i] = eval(x[i]);
        return out;
    }

    template <typename Scalar>
    ArrayX<Scalar> deriv(int m, const ArrayX<Scalar>& x) const {
        ArrayX<Scalar> out(x.size());
        for (Index i = 0; i < x.size(); ++i) out[i] = deriv(m, x[i]);
        return out;
    }

private:
    void guard(double x) const {
        if (near_singularity(x))
            throw std::domain_error("SmoothMap '" + name_ + "': argument " + std::to_string(x) +
                                    " within singular guard " + std::to_string(singular_below_));
    }

    std::string name_;
    int dmax_;
    Eval eval_;
    Deriv deriv_;
    double singular_below_;
};

inline constexpr double kDefaultSingularTol = 1e-6;
inline constexpr int kBuiltinDmax = 8;

// A(x) = 1/x with A^(m)(x) = (-1)^m m! x^{-m-1}. Guarded near 0.
inline SmoothMap builtin_potential(double singular_tol = kDefaultSingularTol) {
    return SmoothMap(
        "potential", kBuiltinDmax, [](double x) { return 1.0 / x; },
        [](int m, double x) {
            double factorial = 1.0;
            for (int i = 2; i <= m; ++i) factorial *= i;
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            return sign * factorial * std::pow(x, -(m + 1));
        },
        singular_tol);
}

// A(x) = exp(-x/eps) with A^(m)(x) = (-1/eps)^m exp(-x/eps).
inline SmoothMap builtin_heat(double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("builtin_heat: epsilon must be positive");
    return SmoothMap(
        "heat", kBuiltinDmax, [epsilon](double x) { return std::exp(-x / epsilon); },
        [epsilon](int m, double x) {
            return std::pow(-1.0 / epsilon, m) * std::exp(-x / epsilon);
        });
}

// A(x) = sin(beta x) with the cyclic derivatives beta^m sin(beta x + m pi/2).
inline SmoothMap builtin_sin(double beta) {
    return SmoothMap(
        "sin", kBuiltinDmax, [beta](double x) { return std::sin(beta * x); },
        [beta](int m, double x) {
            constexpr double half_pi = 1.5707963267948966;
            return std::pow(beta, m) * std::sin(beta * x + m * half_pi);
        });
}

// A(x) = a x + b. The linear map that collapses every multi-block term.
inline SmoothMap builtin_linear(double a, double b) {
    return SmoothMap(
        "linear", kBuiltinDmax, [a, b](double x) { return a * x + b; },
        [a](int m, double) { return m == 1 ? a : 0.0; });
}

inline SmoothMap builtin_identity() { return builtin_linear(1.0, 0.0); }

// User map from an eval closure only; derivatives by iterated central
// differences. Lower accuracy than analytic closures, flagged in the name.
inline SmoothMap finite_difference_map(std::string name, SmoothMap::Eval eval, int dmax,
                                       double h = 1e-5) {
    auto base = std::make_shared<SmoothMap::Eval>(std::move(eval));
    auto rec = std::make_shared<std::function<double(int, double)>>();
    *rec = [base, h, rec = std::weak_ptr(rec)](int m, double x) -> double {
        if (m == 0) return (*base)(x);
        auto self = rec.lock();
        return ((*self)(m - 1, x + h) - (*self)(m - 1, x - h)) / (2.0 * h);
    };
    return SmoothMap(
        std::move(name) + "[fd]", dmax, [base](double x) { return (*base)(x); },
        [rec](int m, double x) { return (*rec)(m, x); });
}

struct DerivativeCheck {
    int order = 0;
    double max_rel_deviation = 0.0;
    bool ok = true;
};

struct DerivativeReport {
    std::vector<DerivativeCheck> per_order;
    std::vector<double> skipped_probes;  // probes inside the singular guard
    bool all_ok = true;
};

// Compares deriv(m, .) against the central difference of deriv(m-1, .) on the
// probe set; deviations above 1e-4 relative are flagged. Probes within the
// singular guard (including the stencil endpoints) are reported, not checked.
inline DerivativeReport check_derivatives(const SmoothMap& map, const std::vector<double>& probes,
                                          double h) {
    constexpr double kFlagThreshold = 1e-4;
    DerivativeReport report;
    for (int m = 1; m <= map.dmax(); ++m) {
        DerivativeCheck check;
        check.order = m;
        for (double x : probes) {
            if (map.near_singularity(x) || map.near_singularity(x - h) || map.near_singularity(x + h)) {
                if (m == 1) report.skipped_probes.push_back(x);
                continue;
            }
            const double fd = (map.deriv(m - 1, x + h) - map.deriv(m - 1, x - h)) / (2.0 * h);
            const double an = map.deriv(m, x);
            const double scale = std::max({std::abs(fd), std::abs(an), 1.0});
            check.max_rel_deviation = std::max(check.max_rel_deviation, std::abs(fd - an) / scale);
        }
        check.ok = check.max_rel_deviation <= kFlagThreshold;
        report.all_ok = report.all_ok && check.ok;
        report.per_order.push_back(check);
    }
    return report;
}

// Parses CLI map specs: "heat:eps=1", "potential", "potential:tol=1e-6",
// "sin:beta=2", "linear:a=1,b=0", "identity".
inline SmoothMap parse_map_spec(const std::string& spec) {
    std::string name = spec;
    std::string args;
    if (auto colon = spec.find(':'); colon != std::string::npos) {
        name = spec.substr(0, colon);
        args = spec.substr(colon + 1);
    }
    auto get = [&args](const std::string& key, double fallback, bool* found = nullptr) {
        std::string token = key + "=";
        std::size_t pos = 0;
        while (pos < args.size()) {
            std::size_t end = args.find(',', pos);
            if (end == std::string::npos) end = args.size();
            const std::string piece = args.substr(pos, end - pos);
            if (piece.rfind(token, 0) == 0) {
                if (found) *found = true;
                return std::stod(piece.substr(token.size()));
            }
            pos = end + 1;
        }
        if (found) *found = false;
        return fallback;
    };
    if (name == "heat") return builtin_heat(get("eps", 1.0));
    if (name == "potential") return builtin_potential(get("tol", kDefaultSingularTol));
    if (name == "sin") return builtin_sin(get("beta", 1.0));
    if (name == "linear") return builtin_linear(get("a", 1.0), get("b", 0.0));
    if (name == "identity") return builtin_identity();
    throw std::invalid_argument("unknown map spec '" + spec + "'");
}

}  // namespace paratensor
