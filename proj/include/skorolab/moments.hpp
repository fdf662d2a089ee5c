#pragma once

// Norm estimators for step integrands, moment-growth exponent fits, the
// Gaussian quadrature moment table with cutoff-sweep divergence detection,
// Meyer-ratio diagnostics, and tightness-speed calculators.

#include "skorolab/skorohod.hpp"
#include "skorolab/stats.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skorolab {

enum class NormId {
    Lp_Omega_H,      // (E ||u||_H^p)^{1/p}
    Lp_Omega_HxH,    // (E ||Du||_{HxH}^p)^{1/p}
    Lp_OmegaxH2,     // (int int E|D_s u(r)|^p dr ds)^{1/p}
    Lp_OmegaxH3,     // (int int int E|D_t D_s u(r)|^p dr dt ds)^{1/p}
    Lp_Omega_semiH,  // (int (E|u(s)|^p)^{2/p} ds)^{1/2}
};

std::string norm_id_name(NormId id);
NormId parse_norm_id(const std::string& name);

struct NormEstimate {
    NormId norm_id = NormId::Lp_Omega_H;
    double p = 2.0;
    double eps = 1.0;
    double value = 0.0;
    double stderr_ = 0.0;
    std::string method = "mc";
    /// Heavy-tail diagnostic on the sampled pathwise quantities: set when the
    /// estimated tail index of the p-th powers is at or below 1, i.e. the
    /// Monte Carlo mean does not stabilize as the sample grows.
    bool diverging = false;
    double tail_index = 0.0;
};

using IntegrandFamily = std::function<StepIntegrand(double eps)>;

/// Monte Carlo estimate of the named norm; inner H-integrals are exact cell
/// sums, only the expectation is sampled. Standard errors by batch means.
NormEstimate estimate_norm(const IntegrandFamily& family, double eps, NormId norm_id, double p, std::size_t n_samples,
                           const RngStream& rng);

struct GrowthFit {
    double kappa_eps = 0.0;
    double kappa_p = 0.0;
    double intercept = 0.0;  // log c
    double r2 = 1.0;
    std::vector<double> eps_grid;
    std::vector<double> p_grid;
};

/// Least squares fit log(value) ~ log c + kappa_eps log(eps) + kappa_p log(p).
/// Requires >= 3 distinct eps and >= 3 distinct p values, all estimates finite.
GrowthFit fit_growth(std::span<const NormEstimate> estimates);

struct MomentRow {
    double p = 2.0;
    double value = 0.0;  // integral over {cutoff_min <= |x| <= B}
    bool divergent = false;
    std::vector<double> cutoffs;
    std::vector<double> sweep_values;
    double slope_per_decade = 0.0;  // affine growth of the sweep in -log10(cutoff)
    double slope_r2 = 0.0;
};

struct MomentTable {
    std::vector<MomentRow> rows;
    double tail_bound = 10.0;
};

/// E|g(Z)|^p by adaptive quadrature of |g(x)|^p phi(x) over {c <= |x| <= B},
/// swept over the cutoffs c. Divergence is flagged when the sweep increments
/// fail to decay geometrically as c -> 0.
MomentTable moment_table_quadrature(const SmoothMap& g, std::span<const double> p_grid,
                                    std::vector<double> cutoffs = {});

/// Closed-form lower bound for E|cp_a'(Z)|^p, valid for (a-1)p > -1:
/// a^p / (sqrt(2 e pi) (1 + (a-1) p)).
double cp_grad_moment_lower_bound(double a, double p);

struct MeyerRatioPoint {
    double p = 2.0;
    double ratio = 0.0;  // (E|d(u)|^p)^{1/p} / [p^m (||u||_{L^p(O,H)} + ||Du||_{L^p(O,HxH)})]
    double stderr_ = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    bool excluded = false;  // divergent input norm
};

struct MeyerRatioReport {
    std::vector<MeyerRatioPoint> points;
    double max_ratio = 0.0;
    double meyer_exponent = 5.0;
};

MeyerRatioReport meyer_ratio(const StepIntegrand& u, std::span<const double> p_grid, std::size_t n_samples,
                             const RngStream& rng, double meyer_exponent = 5.0);

struct RatePrediction {
    std::string theorem_id;
    std::vector<double> kappas;
    double alpha_sup = 0.0;
    std::optional<double> kappa_hat1;  // thm3 only
    std::optional<double> kappa_hat2;  // thm3 only
};

/// Supremum of admissible tightness-speed exponents:
///   thm2  (k1 > -1/2, k2 >= 0):          (0.5 + k1) / (m + k2)
///   thm3  (k1,k3 > -1/2; k2,k4 >= 0):    (0.5 + kh1) / kh2 with
///         2 kh1 = min(k1 + k3, 2 k3), 2 kh2 = max(1 + m + k2 + k4, 1 + 2 k4)
///   thm41 (k1 > 1/2, k2 >= 0):           (k1 - 0.5) / (m + k2)
///   thm42 (k1 > -1/2, k2 >= 0):          (k1 + 0.5) / (m + k2)
/// m is the Meyer-constant growth exponent (default 5). Hypothesis
/// violations throw std::invalid_argument naming the violated bound.
RatePrediction predict_rate(const std::string& theorem_id, std::span<const double> kappas,
                            double meyer_exponent = 5.0);

}  // namespace skorolab
