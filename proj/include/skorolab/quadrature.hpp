#pragma once

// Adaptive Gauss-Kronrod (G7, K15) quadrature on an interval stack.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace skorolab {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
    int intervals = 0;
};

/// Raised when an integral or root bracket cannot be resolved; carries a
/// short diagnostic trace.
struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
// 15-point Kronrod abscissae with embedded 7-point Gauss weights.
// Entries: {node, gauss weight, kronrod weight}; nonzero nodes are mirrored.
inline constexpr double kG7K15[8][3] = {
    {0.0000000000000000, 0.4179591836734694, 0.2094821410847278},
    {0.4058451513773972, 0.3818300505051189, 0.1903505780647854},
    {0.7415311855993944, 0.2797053914892767, 0.1406532597155259},
    {0.9491079123427585, 0.1294849661688697, 0.0630920926299785},
    {0.2077849550078985, 0.0, 0.2044329400752989},
    {0.5860872354676911, 0.0, 0.1690047266392679},
    {0.8648644233597691, 0.0, 0.1047900103222502},
    {0.9914553711208126, 0.0, 0.0229353220105292},
};
}  // namespace detail

template <typename Fn>
double gauss_kronrod_15(const Fn& f, double a, double b, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double g7 = detail::kG7K15[0][1] * f0;
    double k15 = detail::kG7K15[0][2] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * detail::kG7K15[i][0];
        const double fsum = f(mid + dx) + f(mid - dx);
        g7 += detail::kG7K15[i][1] * fsum;
        k15 += detail::kG7K15[i][2] * fsum;
    }
    g7 *= half;
    k15 *= half;
    const double d = std::abs(k15 - g7);
    err = std::min(d, std::pow(200.0 * d, 1.5));
    return k15;
}

template <typename Fn>
QuadResult integrate(const Fn& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-10,
                     int max_intervals = 4000) {
    QuadResult out;
    if (a == b) return out;
    struct Seg {
        double a, b, value, error;
    };
    std::vector<Seg> heap;
    double err0 = 0.0;
    const double v0 = gauss_kronrod_15(f, a, b, err0);
    heap.push_back({a, b, v0, err0});
    out.value = v0;
    out.error = err0;
    out.intervals = 1;
    while (out.error > std::max(abs_tol, rel_tol * std::abs(out.value))) {
        if (static_cast<int>(heap.size()) >= max_intervals) {
            out.converged = false;
            return out;
        }
        // Split the interval with the largest error estimate.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < heap.size(); ++i)
            if (heap[i].error > heap[worst].error) worst = i;
        const Seg seg = heap[worst];
        const double mid = 0.5 * (seg.a + seg.b);
        double el = 0.0, er = 0.0;
        const double vl = gauss_kronrod_15(f, seg.a, mid, el);
        const double vr = gauss_kronrod_15(f, mid, seg.b, er);
        heap[worst] = {seg.a, mid, vl, el};
        heap.push_back({mid, seg.b, vr, er});
        out.value += vl + vr - seg.value;
        out.error += el + er - seg.error;
        out.intervals = static_cast<int>(heap.size());
        if (!(mid > seg.a && mid < seg.b)) {
            out.converged = false;
            return out;
        }
    }
    return out;
}

/// Adaptive integration over consecutive segments [x_0,x_1], [x_1,x_2], ...
template <typename Fn>
QuadResult integrate_segments(const Fn& f, const std::vector<double>& breakpoints, double abs_tol = 1e-12,
                              double rel_tol = 1e-10, int max_intervals = 4000) {
    QuadResult total;
    if (breakpoints.size() < 2) return total;
    const double seg_abs = abs_tol / static_cast<double>(breakpoints.size() - 1);
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        QuadResult part = integrate(f, breakpoints[i], breakpoints[i + 1], seg_abs, rel_tol, max_intervals);
        total.value += part.value;
        total.error += part.error;
        total.intervals += part.intervals;
        total.converged = total.converged && part.converged;
    }
    return total;
}

/// Geometric breakpoints a, 10a, 100a, ..., then b (for endpoint singularities).
std::vector<double> log_breakpoints(double a, double b, double factor = 10.0);

}  // namespace skorolab
