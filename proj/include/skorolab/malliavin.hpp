#pragma once

// Cylindrical smooth functionals F = f(W(h_1), ..., W(h_n)) with exact first
// and second derivatives in the direction of H, computed by forward
// propagation of (value, gradient, Hessian) through an expression tree.

#include "skorolab/path_core.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace skorolab {

struct MapNode;
using MapExpr = std::shared_ptr<const MapNode>;

/// cp_a(x) = (max(0, min(x, 1)))^a.
double clamp_pow(double x, double a);
/// d/dx cp_a: a x^{a-1} on (0,1), 0 outside; exactly at the kinks {0,1} the
/// one-sided-zero convention applies and the kink-hit counter is bumped.
double clamp_pow_grad(double x, double a);

/// First-order evaluation of a map at a point.
struct MapEval1 {
    double value = 0.0;
    std::vector<double> grad;
};

/// Second-order evaluation; hess is dense row-major arity x arity, symmetric.
struct MapEval2 {
    double value = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;
};

/// Smooth map R^n -> R built from constants, inputs, +, -, *, real powers,
/// exp, sin, cos, tanh and the clamped power cp_a(x) = (0 v x ^ 1)^a.
/// Gradient and Hessian are defined almost everywhere; at the cp_a kinks the
/// one-sided-zero convention applies and a diagnostics counter is bumped.
struct SmoothMap {
    MapExpr root;
    int arity = 0;

    double value(std::span<const double> x) const;
    MapEval1 value_grad(std::span<const double> x) const;
    MapEval2 value_grad_hess(std::span<const double> x) const;
};

// Expression builders.
MapExpr mx_const(double c);
MapExpr mx_input(int index);
MapExpr mx_add(MapExpr a, MapExpr b);
MapExpr mx_sub(MapExpr a, MapExpr b);
MapExpr mx_mul(MapExpr a, MapExpr b);
MapExpr mx_scale(double c, MapExpr a);
MapExpr mx_pow(MapExpr a, double exponent);
MapExpr mx_exp(MapExpr a);
MapExpr mx_sin(MapExpr a);
MapExpr mx_cos(MapExpr a);
MapExpr mx_tanh(MapExpr a);
/// cp_a(x) = (max(0, min(x, 1)))^a.
MapExpr mx_clamp_pow(MapExpr a, double exponent);
/// d/dx cp_a(x): a x^{a-1} on (0,1), 0 outside [0,1], 0 at the kinks.
MapExpr mx_clamp_pow_grad(MapExpr a, double exponent);

/// Clone of the expression with every Input(i) replaced by Input(i + offset).
MapExpr mx_shift_inputs(const MapExpr& e, int offset);

SmoothMap make_smooth_map(MapExpr root, int arity);

/// String-addressable registry used by run configurations:
///   identity | square | sin | cos | exp | tanh | thm1_f | thm1_fprime |
///   cp:<a> | cpgrad:<a> | poly:c0,c1,... | const:<c>
/// Throws std::invalid_argument for unknown identifiers.
SmoothMap parse_smooth_map(const std::string& id);
/// Identifiers with well-defined classical derivatives everywhere they are
/// tested (used by gradient-check property tests).
std::vector<std::string> smooth_map_registry();

/// F = f(W(h_1), ..., W(h_n)); n = 0 is a deterministic constant.
struct CylindricalFunctional {
    SmoothMap map;
    std::vector<Kernel> kernels;

    int dim() const { return kernels.empty() ? 1 : kernels.front().dim; }
    const GridPtr& grid() const;
    /// True when every kernel is supported in [0, t_cell], i.e. the value is
    /// measurable with respect to the path up to the cell's left endpoint.
    bool measurable_before(int cell) const;
};

CylindricalFunctional make_functional(SmoothMap map, std::vector<Kernel> kernels);
CylindricalFunctional constant_functional(double c);

/// D_s D_t F sample: dense symmetric matrix over (cell, dim) pairs.
struct H2Sample {
    GridPtr grid;
    int dim = 1;
    std::vector<double> values;  // (n_cells*dim) x (n_cells*dim), row-major

    double entry(int cell_s, int k_s, int cell_t, int k_t) const {
        const std::size_t m = static_cast<std::size_t>(grid->n_cells()) * dim;
        return values[(static_cast<std::size_t>(cell_s) * dim + k_s) * m + static_cast<std::size_t>(cell_t) * dim + k_t];
    }
};

double eval_functional(const CylindricalFunctional& F, const BrownianPath& path);

/// DF = sum_i d_i f(...) h_i as an element of H.
Kernel derivative(const CylindricalFunctional& F, const BrownianPath& path);

/// D^2 F = sum_{ij} d^2_{ij} f(...) h_i (x) h_j.
H2Sample second_derivative(const CylindricalFunctional& F, const BrownianPath& path);

/// Value and map gradient in one pass (the building block for integrators:
/// DF(cell,k) = sum_j grad[j] * h_j(cell,k)).
struct FunctionalEval {
    double value = 0.0;
    std::vector<double> grad;
};
FunctionalEval eval_with_gradient(const CylindricalFunctional& F, const BrownianPath& path);

double derivative_component(const CylindricalFunctional& F, std::span<const double> grad, int cell, int k);

}  // namespace skorolab
