#pragma once

// Random-variable families F_eps = sqrt(eps) d(u_eps), tail-probability
// estimation (Monte Carlo and a 1-D quadrature oracle), exponential-tightness
// speed scans, the Schilder-type bound check for bounded adapted integrands,
// and the damped-oscillator (Langevin) application family.

#include "skorolab/moments.hpp"
#include "skorolab/skorohod.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace skorolab {

/// F_eps = sqrt(eps) (f(z) z - f'(z)) with z = W(1) and f = cp_{3/4}: the
/// closed form of sqrt(eps) d(f(W(1)) 1_{[0,1]}).
struct CounterexampleFamily {
    int n_cells = 1;
};

/// Adapted integrand bounded pathwise by K:
/// u^k(t_i) = (K/sqrt(d)) cos(W^k(t_i)).
struct BoundedAdaptedFamily {
    double bound = 1.0;
    int n_cells = 16;
    int dim = 1;
};

/// F_eps = sqrt(eps) W(h) for a deterministic kernel h (Schilder base case).
struct DeterministicGaussianFamily {
    Kernel h;
};

/// Diffusion part of a strongly damped oscillator in the random environment
/// xi(t) = x0 + sigma W(t), with friction lambda(x) = kappa0 + a (1 + cos x)
/// and noise loading g(x) = cos x:
///   F_eps = sqrt(eps) e^{-(1/eps^2) int_0^1 lambda(xi)}
///           int_0^1 e^{(1/eps^2) int_0^s lambda(xi)} g(xi(s)) dW(s).
struct LangevinParams {
    double kappa0 = 1.0;
    double a = 0.5;
    double sigma = 1.0;
    double x0 = 0.0;
    int n_cells = 256;
};

using FamilySpec =
    std::variant<CounterexampleFamily, BoundedAdaptedFamily, DeterministicGaussianFamily, LangevinParams>;

std::string family_name(const FamilySpec& family);
GridPtr family_grid(const FamilySpec& family);
int family_dim(const FamilySpec& family);

/// One draw of F_eps on a sampled path. Throws std::invalid_argument for
/// eps <= 0 and, for the Langevin family, for grids coarser than 2^8 cells
/// or kappa0 <= 0.
double sample_F(const FamilySpec& family, double eps, const BrownianPath& path);

struct TailPoint {
    std::string family;
    std::string method;  // mc | quadrature
    double eps = 0.0;
    double L = 0.0;
    double p_est = 0.0;
    double log_p = 0.0;  // finite surrogate; for zero-hit mc cells the log of the upper bound
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    std::uint64_t hits = 0;
    std::uint64_t n = 0;
    bool zero_hits = false;
};

/// Hit-count estimate of P(|F_eps| > L) with an exact binomial interval;
/// zero hits carry the one-sided 95% bound 1 - 0.05^{1/N}.
TailPoint tail_mc(const FamilySpec& family, double eps, double L, std::size_t n_samples, const RngStream& rng);

/// Exact tail for the scalar families (counterexample, deterministic
/// Gaussian): Gaussian measure of {z : |psi_eps(z)| > L} via monotone
/// root-bracketing and stable interval masses.
TailPoint tail_quadrature(const FamilySpec& family, double eps, double L);

struct SpeedScan {
    std::string family;
    std::string method;
    double alpha = 1.0;
    double L = 1.0;
    std::vector<double> eps_grid;  // descending (scan toward eps -> 0)
    std::vector<double> values;    // eps^alpha * log P(|F_eps| > L)
    std::vector<bool> bound_only;  // mc cells estimated only through the zero-hit bound
    double first_value = 0.0;
    double last_value = 0.0;
    int monotonicity_violations = 0;
};

/// Requires >= 5 eps points spanning >= 2 decades.
SpeedScan speed_scan(const FamilySpec& family, double alpha, double L, std::vector<double> eps_grid,
                     const std::string& method, std::size_t n_samples, const RngStream& rng);

struct SchilderReport {
    double K = 1.0;
    int dim = 1;
    double eps = 1.0;
    double L = 1.0;
    double bound = 0.0;      // 4 d exp(-L^2 / (2 d eps K^2))
    double log_bound = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t n = 0;
    double p_upper = 1.0;
    bool pass = false;
    /// Zero observed exceedances with the bound below Monte Carlo resolution:
    /// consistent with the bound but not certifiable at this sample size.
    bool vacuous = false;
};

SchilderReport schilder_bound_check(double K, int dim, double eps, double L, std::size_t n_samples,
                                    const RngStream& rng, int n_cells = 16);

/// Pathwise split F_eps = F1 + F2 (Skorohod part + trace part) together with
/// the a-priori bound on the deterministic prefactor integral.
struct AppDecomposition {
    double f1 = 0.0;
    double f2 = 0.0;
    double direct = 0.0;  // left-point discretization of the defining stochastic integral
    double premultiplier_integral = 0.0;
    double premultiplier_bound = 0.0;
    bool premultiplier_ok = false;
};

AppDecomposition app_decompose(const LangevinParams& params, double eps, const BrownianPath& path);

/// Low-level Langevin evaluation on any grid (no resolution precondition):
/// suffix-sum closed forms for the Ito part, the trace and the environment.
struct LangevinPathEval {
    double ito = 0.0;    // sum_i X_i DW_i
    double trace = 0.0;  // sum_i dt_i int-cell D_s X_i
    double prefactor_integral = 0.0;  // sum_i E_i g_i dt_i
};
LangevinPathEval langevin_path_eval(const LangevinParams& params, double eps, const BrownianPath& path);

/// The same coefficients as expression-tree cylindrical functionals (exact,
/// O(n^3) to build; the cross-check oracle for the closed forms above).
StepIntegrand langevin_integrand_symbolic(const LangevinParams& params, double eps, GridPtr grid);

/// Norm moments of the Langevin integrand from the closed-form derivative
/// matrix, one sampling pass shared by every (norm, p) pair. Supports
/// Lp_Omega_H, Lp_Omega_HxH, Lp_OmegaxH2 and Lp_Omega_semiH.
std::vector<NormEstimate> langevin_norm_scan(const LangevinParams& params, double eps, std::span<const NormId> norms,
                                             std::span<const double> p_grid, std::size_t n_samples,
                                             const RngStream& rng);

/// Quadrature check of int_0^1 e^{-kappa0 s / eps^2} (s / eps^2) ds <= eps^2 / kappa0^2.
struct ExpKernelBound {
    double integral = 0.0;
    double bound = 0.0;
    bool holds = false;
};
ExpKernelBound exp_kernel_bound_check(double kappa0, double eps);

}  // namespace skorolab
