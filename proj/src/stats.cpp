#include "skorolab/stats.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skorolab {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt2Pi = 2.50662827463100050242;
}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_ccdf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double normal_logccdf(double x) {
    if (x < 8.0) {
        return std::log(normal_ccdf(x));
    }
    // Asymptotic expansion: P(Z>x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...).
    const double x2 = x * x;
    double series = 1.0, term = 1.0;
    for (int k = 1; k <= 6; ++k) {
        term *= -(2.0 * k - 1.0) / x2;
        series += term;
    }
    return -0.5 * x2 - std::log(x * kSqrt2Pi) + std::log(series);
}

double normal_interval_mass(double a, double b) {
    if (b <= a) return 0.0;
    if (a >= 0.0) {
        if (b <= 0.5) return 0.5 * (std::erf(b * kInvSqrt2) - std::erf(a * kInvSqrt2));
        if (a >= 0.5) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
        return normal_interval_mass(a, 0.5) + normal_interval_mass(0.5, b);
    }
    if (b <= 0.0) return normal_interval_mass(-b, -a);
    return normal_interval_mass(0.0, -a) + normal_interval_mass(0.0, b);
}

double odd_double_factorial(int p) {
    if (p < 2 || p % 2 != 0) throw std::invalid_argument("odd_double_factorial: p must be even and >= 2");
    double acc = 1.0;
    for (int k = p - 1; k >= 3; k -= 2) acc *= k;
    return acc;
}

MeanStderr mean_and_stderr(std::span<const double> xs) {
    MeanStderr ms;
    ms.n = xs.size();
    if (ms.n == 0) return ms;
    double sum = 0.0;
    for (double x : xs) sum += x;
    ms.mean = sum / static_cast<double>(ms.n);
    if (ms.n < 2) return ms;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - ms.mean;
        ss += d * d;
    }
    ms.stderr_ = std::sqrt(ss / (static_cast<double>(ms.n) * (static_cast<double>(ms.n) - 1.0)));
    return ms;
}

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_normal(std::span<const double> xs, double sigma2) {
    KsResult res;
    res.n = xs.size();
    if (res.n == 0) return res;
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = std::sqrt(sigma2);
    double d = 0.0;
    const double n = static_cast<double>(res.n);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = normal_cdf(sorted[i] / sd);
        d = std::max(d, std::max(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
    }
    res.statistic = d;
    res.p_value = kolmogorov_sf(std::sqrt(n) * d);
    return res;
}

BinomialInterval clopper_pearson(std::uint64_t hits, std::uint64_t n, double level) {
    if (n == 0) throw std::invalid_argument("clopper_pearson: n must be positive");
    BinomialInterval ci;
    const double alpha = 1.0 - level;
    const double k = static_cast<double>(hits);
    const double nn = static_cast<double>(n);
    if (hits == 0) {
        ci.zero_hits = true;
        ci.lower = 0.0;
        ci.upper = 1.0 - std::pow(alpha, 1.0 / nn);
        return ci;
    }
    if (hits >= n) {
        ci.lower = std::pow(alpha, 1.0 / nn);
        ci.upper = 1.0;
        return ci;
    }
    ci.lower = boost::math::ibeta_inv(k, nn - k + 1.0, 0.5 * alpha);
    ci.upper = boost::math::ibeta_inv(k + 1.0, nn - k, 1.0 - 0.5 * alpha);
    return ci;
}

double hill_tail_index(std::span<const double> xs, std::size_t k) {
    std::vector<double> pos;
    pos.reserve(xs.size());
    for (double x : xs)
        if (x > 0.0) pos.push_back(x);
    if (pos.size() < k + 1 || k < 2) return 0.0;
    std::nth_element(pos.begin(), pos.end() - static_cast<std::ptrdiff_t>(k + 1), pos.end());
    const double pivot = pos[pos.size() - k - 1];
    if (pivot <= 0.0) return 0.0;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = pos.size() - k; i < pos.size(); ++i) {
        acc += std::log(pos[i] / pivot);
        ++count;
    }
    if (acc <= 0.0) return 0.0;
    return static_cast<double>(count) / acc;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double rss = 0.0, tss = 0.0;
    const double ybar = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - fit.intercept - fit.slope * x[i];
        rss += e * e;
        const double d = y[i] - ybar;
        tss += d * d;
    }
    fit.r2 = tss > 0.0 ? std::max(0.0, 1.0 - rss / tss) : 1.0;
    return fit;
}

}  // namespace skorolab
