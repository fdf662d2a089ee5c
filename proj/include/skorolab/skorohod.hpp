#pragma once

// Skorohod integral of step integrands with cylindrical coefficients via
// cell-wise integration by parts, adapted Ito sums, and the duality identity
// E[F d(u)] = E<DF, u>_H as a common-random-number Monte Carlo test.

#include "skorolab/malliavin.hpp"
#include "skorolab/path_core.hpp"

#include <memory>
#include <vector>

namespace skorolab {

using FunctionalPtr = std::shared_ptr<const CylindricalFunctional>;

/// u(t) = sum_i X_i 1_{cell_i}(t) with one cylindrical coefficient per
/// (cell, dimension) slot. `adapted` is derived at construction: true iff
/// every X_i^k depends only on kernels supported in [0, t_i].
struct StepIntegrand {
    GridPtr grid;
    int dim = 1;
    std::vector<FunctionalPtr> coefficients;  // n_cells * dim slots
    bool adapted = false;

    // Deduplicated coefficient table (many slots typically share one functional).
    std::vector<FunctionalPtr> unique_coeffs;
    std::vector<int> slot_owner;

    const CylindricalFunctional& coeff(int cell, int k) const {
        return *coefficients[static_cast<std::size_t>(cell) * dim + k];
    }
};

StepIntegrand make_step_integrand(GridPtr grid, int dim, std::vector<FunctionalPtr> coefficients);

/// Deterministic u: coefficient (i,k) is the constant kernel value.
StepIntegrand deterministic_integrand(const Kernel& values);

/// u = X * 1_{[a,b]}, with partial cells scaled by overlap fraction.
StepIntegrand functional_times_indicator(GridPtr grid, int dim, const CylindricalFunctional& X, double a = 0.0,
                                         double b = 1.0);

/// Adapted family X_i^k = scale * f(W^k(t_i)) (left-endpoint path values).
StepIntegrand adapted_integrand(GridPtr grid, int dim, const SmoothMap& f, double scale = 1.0);

/// Slotwise a*u + b*v on a shared grid.
StepIntegrand linear_combination(double a, const StepIntegrand& u, double b, const StepIntegrand& v);

/// Scale every coefficient by c.
StepIntegrand scale_integrand(double c, const StepIntegrand& u);

struct SkorohodResult {
    double value = 0.0;      // ito_part - trace_part
    double ito_part = 0.0;   // sum_i X_i . DW_i
    double trace_part = 0.0; // sum_i int_{cell_i} (D_s X_i)_i ds
};

/// d(u) by integration by parts per cell:
///   d(u) = sum_{i,k} [ X_i^k DW_i^k - dt_i (D X_i^k)(cell_i, k) ].
/// The trace integral is exact because D X is piecewise constant on the grid.
SkorohodResult skorohod_integral(const StepIntegrand& u, const BrownianPath& path);

/// Left-point Ito sum; requires the adapted flag.
double ito_integral(const StepIntegrand& u, const BrownianPath& path);

/// Evaluate all coefficients on one path (slot order).
std::vector<double> integrand_values(const StepIntegrand& u, const BrownianPath& path);

struct DualityReport {
    double lhs = 0.0;  // E[F d(u)]
    double rhs = 0.0;  // E<DF, u>_H
    double residual = 0.0;
    double se_lhs = 0.0;
    double se_rhs = 0.0;
    double se_residual = 0.0;
    std::size_t n = 0;
};

/// Both sides estimated on the same sampled paths (common random numbers),
/// so the residual's standard error reflects the coupled difference.
DualityReport duality_residual(const CylindricalFunctional& F, const StepIntegrand& u, std::size_t n_samples,
                               const RngStream& rng);

}  // namespace skorolab
