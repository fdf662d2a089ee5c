#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace skorolab {

double normal_pdf(double x);
double normal_cdf(double x);
double normal_ccdf(double x);
/// log P(Z > x), finite for arguments far beyond erfc underflow.
double normal_logccdf(double x);
/// P(a < Z <= b), evaluated without cancellation for tiny or huge intervals.
double normal_interval_mass(double a, double b);

/// (p-1)!! for even p >= 2: the absolute moments E|Z|^p of a standard normal.
double odd_double_factorial(int p);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

MeanStderr mean_and_stderr(std::span<const double> xs);

/// Standard error of a nonlinear statistic by batch means: the samples are
/// split into `n_batches` contiguous blocks and the statistic recomputed per
/// block. Returns sd(block statistics)/sqrt(n_batches).
template <typename Fn>
double batch_stderr(std::size_t n, std::size_t n_batches, Fn&& statistic) {
    if (n_batches < 2 || n < n_batches) return 0.0;
    std::vector<double> vals;
    vals.reserve(n_batches);
    const std::size_t base = n / n_batches;
    std::size_t start = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        std::size_t len = base + (b < n % n_batches ? 1 : 0);
        vals.push_back(statistic(start, start + len));
        start += len;
    }
    MeanStderr ms = mean_and_stderr(vals);
    return ms.stderr_;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov test against N(0, sigma2). Sorts a copy.
KsResult ks_test_normal(std::span<const double> xs, double sigma2);

/// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_sf(double lambda);

struct BinomialInterval {
    double lower = 0.0;
    double upper = 1.0;
    bool zero_hits = false;
};

/// Exact Clopper-Pearson interval at confidence `level` (two-sided). With
/// zero hits the upper bound is the one-sided 1 - (1-level) bound
/// 1 - (1-level)^(1/n) and `zero_hits` is set.
BinomialInterval clopper_pearson(std::uint64_t hits, std::uint64_t n, double level = 0.95);

/// Hill estimator of the tail index from the top `k` order statistics of a
/// positive sample: P(X > t) ~ t^{-alpha}. Returns 0 when undefined
/// (fewer than k positive distinct values). Moments of order >= alpha diverge.
double hill_tail_index(std::span<const double> xs, std::size_t k);

/// Ordinary least squares fit y ~ a + b x. Returns {a, b, r2}.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 1.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace skorolab
