#pragma once

// Time discretization of [0,1], d-dimensional Brownian increments with
// counter-based (reproducible, order-independent) Gaussian draws, and the
// Hilbert-space primitives for piecewise-constant kernels h in
// H = L^2([0,1], R^d).

#include <cstdint>
#include <memory>
#include <vector>

namespace skorolab {

/// Partition 0 = t_0 < t_1 < ... < t_n = 1. Cells are [t_i, t_{i+1}).
struct TimeGrid {
    std::vector<double> knots;
    bool uniform = false;

    int n_cells() const { return static_cast<int>(knots.size()) - 1; }
    double left(int cell) const { return knots[cell]; }
    double right(int cell) const { return knots[cell + 1]; }
    double dt(int cell) const { return knots[cell + 1] - knots[cell]; }
};

using GridPtr = std::shared_ptr<const TimeGrid>;

/// Uniform grid with knots i/n_cells. Throws std::invalid_argument for n_cells == 0.
GridPtr make_uniform_grid(int n_cells);

bool same_grid(const TimeGrid& a, const TimeGrid& b);

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream, counter words), so parallel Monte Carlo is reproducible
/// regardless of worker count or evaluation order.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    /// Derived stream for sample index i (statistically independent draws).
    RngStream substream(std::uint64_t i) const;
    /// Derived stream for a named sub-component of a computation.
    RngStream fork(std::uint64_t tag) const;

    /// Standard normal keyed by (seed, stream, ctr_a, ctr_b).
    double gaussian(std::uint64_t ctr_a, std::uint64_t ctr_b) const;
    /// Uniform in (0,1), same keying.
    double uniform(std::uint64_t ctr_a, std::uint64_t ctr_b) const;
};

/// Brownian increments DW_i^k over the cells of a grid, one column per dimension.
/// Entry layout: increments[cell * dim + k].
struct BrownianPath {
    GridPtr grid;
    int dim = 1;
    std::vector<double> increments;

    double increment(int cell, int k) const { return increments[static_cast<std::size_t>(cell) * dim + k]; }
    /// W^k(t_j): cumulative sum of the first j increments. W(0) = 0.
    double value_at_knot(int knot, int k) const;
    /// Terminal value W^k(1).
    double terminal(int k = 0) const { return value_at_knot(grid->n_cells(), k); }
};

/// Each DW_i^k independent N(0, dt_i), keyed by (rng, cell, dim).
BrownianPath sample_path(GridPtr grid, int dim, const RngStream& rng);

/// Brownian-bridge midpoint insertion: doubles the cell count while keeping
/// the sum of the two child increments of every original cell exactly equal
/// to the parent increment.
BrownianPath refine_midpoint(const BrownianPath& path, const RngStream& rng);

/// Coarsen a refined path back onto a grid whose knots are every `factor`-th
/// knot of the fine grid (exact increment aggregation).
BrownianPath coarsen(const BrownianPath& path, int factor);

/// Piecewise-constant element of H = L^2([0,1], R^d); values[cell * dim + k].
struct Kernel {
    GridPtr grid;
    int dim = 1;
    std::vector<double> values;

    double value(int cell, int k) const { return values[static_cast<std::size_t>(cell) * dim + k]; }
    double& value(int cell, int k) { return values[static_cast<std::size_t>(cell) * dim + k]; }
    bool is_zero() const;
    /// True when every value on cells >= cell_index vanishes, i.e. the kernel
    /// is supported in [0, t_cell_index].
    bool supported_before(int cell_index) const;
};

Kernel zero_kernel(GridPtr grid, int dim);
Kernel constant_kernel(GridPtr grid, int dim, double value);
/// Indicator of [a, b) (per-cell overlap fraction), dimension component k.
Kernel indicator_kernel(GridPtr grid, int dim, double a, double b, int k = 0);
/// Kernel sampled from a scalar function at cell left endpoints, component k.
Kernel sampled_kernel(GridPtr grid, int dim, double (*f)(double), int k = 0);

/// <h,g>_H = sum_{i,k} h_i^k g_i^k dt_i. Throws on grid/dim mismatch.
double kernel_inner(const Kernel& h, const Kernel& g);
double kernel_norm2(const Kernel& h);
double kernel_norm(const Kernel& h);
Kernel kernel_axpy(double a, const Kernel& h, double b, const Kernel& g);

/// W(h) = int_0^1 h dW = sum_{i,k} h_i^k DW_i^k. Throws on grid/dim mismatch.
double wiener_integral(const BrownianPath& path, const Kernel& h);

/// Count of derivative evaluations that landed exactly on a clamped-power
/// kink (a measure-zero event under the Wiener law).
std::uint64_t kink_hit_count();
void reset_kink_hit_count();
void record_kink_hit();

}  // namespace skorolab
