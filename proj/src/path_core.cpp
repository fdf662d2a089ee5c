#include "skorolab/path_core.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace skorolab {

namespace {

std::atomic<std::uint64_t> g_kink_hits{0};

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t counter_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    std::uint64_t h = mix64(a ^ 0x6A09E667F3BCC908ull);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    h = mix64(h ^ d);
    return h;
}

// 53-bit mantissa mapped into the open interval (0,1).
inline double to_unit_open(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

GridPtr make_uniform_grid(int n_cells) {
    if (n_cells < 1) throw std::invalid_argument("make_uniform_grid: n_cells must be >= 1");
    auto grid = std::make_shared<TimeGrid>();
    grid->knots.resize(static_cast<std::size_t>(n_cells) + 1);
    for (int i = 0; i <= n_cells; ++i) grid->knots[i] = static_cast<double>(i) / n_cells;
    grid->knots.front() = 0.0;
    grid->knots.back() = 1.0;
    grid->uniform = true;
    return grid;
}

bool same_grid(const TimeGrid& a, const TimeGrid& b) {
    return &a == &b || a.knots == b.knots;
}

RngStream RngStream::substream(std::uint64_t i) const {
    return RngStream{seed, mix64(stream ^ mix64(i ^ 0xA5A5A5A5A5A5A5A5ull))};
}

RngStream RngStream::fork(std::uint64_t tag) const {
    return RngStream{seed, mix64(stream ^ mix64(~tag))};
}

double RngStream::uniform(std::uint64_t ctr_a, std::uint64_t ctr_b) const {
    return to_unit_open(counter_mix(seed, stream, ctr_a, ctr_b));
}

double RngStream::gaussian(std::uint64_t ctr_a, std::uint64_t ctr_b) const {
    const double u1 = to_unit_open(counter_mix(seed, stream, ctr_a, 2 * ctr_b));
    const double u2 = to_unit_open(counter_mix(seed, stream, ctr_a, 2 * ctr_b + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double BrownianPath::value_at_knot(int knot, int k) const {
    double w = 0.0;
    for (int i = 0; i < knot; ++i) w += increment(i, k);
    return w;
}

BrownianPath sample_path(GridPtr grid, int dim, const RngStream& rng) {
    if (dim < 1) throw std::invalid_argument("sample_path: dim must be >= 1");
    BrownianPath path;
    path.grid = std::move(grid);
    path.dim = dim;
    const int n = path.grid->n_cells();
    path.increments.resize(static_cast<std::size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        const double sd = std::sqrt(path.grid->dt(i));
        for (int k = 0; k < dim; ++k)
            path.increments[static_cast<std::size_t>(i) * dim + k] =
                sd * rng.gaussian(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k));
    }
    return path;
}

BrownianPath refine_midpoint(const BrownianPath& path, const RngStream& rng) {
    const TimeGrid& g = *path.grid;
    const int n = g.n_cells();
    auto fine = std::make_shared<TimeGrid>();
    fine->knots.resize(2 * static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
        fine->knots[2 * i] = g.knots[i];
        fine->knots[2 * i + 1] = 0.5 * (g.knots[i] + g.knots[i + 1]);
    }
    fine->knots.back() = 1.0;
    fine->uniform = g.uniform;

    BrownianPath out;
    out.grid = fine;
    out.dim = path.dim;
    out.increments.resize(2 * path.increments.size());
    for (int i = 0; i < n; ++i) {
        // Conditional law of the left half-increment given the parent is
        // N(parent/2, dt/4).
        const double half_sd = 0.5 * std::sqrt(g.dt(i));
        for (int k = 0; k < path.dim; ++k) {
            const double parent = path.increment(i, k);
            const double bridge = half_sd * rng.gaussian(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k));
            const double left = 0.5 * parent + bridge;
            double right = parent - left;
            // Error feedback so the child increments re-aggregate bit-exactly.
            for (int it = 0; it < 4 && left + right != parent; ++it) right += parent - (left + right);
            out.increments[static_cast<std::size_t>(2 * i) * path.dim + k] = left;
            out.increments[static_cast<std::size_t>(2 * i + 1) * path.dim + k] = right;
        }
    }
    return out;
}

BrownianPath coarsen(const BrownianPath& path, int factor) {
    const TimeGrid& g = *path.grid;
    const int n = g.n_cells();
    if (factor < 1 || n % factor != 0) throw std::invalid_argument("coarsen: factor must divide n_cells");
    auto coarse = std::make_shared<TimeGrid>();
    const int m = n / factor;
    coarse->knots.resize(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) coarse->knots[i] = g.knots[static_cast<std::size_t>(i) * factor];
    coarse->uniform = g.uniform;

    BrownianPath out;
    out.grid = coarse;
    out.dim = path.dim;
    out.increments.assign(static_cast<std::size_t>(m) * path.dim, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < path.dim; ++k)
            out.increments[static_cast<std::size_t>(i / factor) * path.dim + k] += path.increment(i, k);
    return out;
}

bool Kernel::is_zero() const {
    for (double v : values)
        if (v != 0.0) return false;
    return true;
}

bool Kernel::supported_before(int cell_index) const {
    for (int i = cell_index; i < grid->n_cells(); ++i)
        for (int k = 0; k < dim; ++k)
            if (value(i, k) != 0.0) return false;
    return true;
}

Kernel zero_kernel(GridPtr grid, int dim) {
    Kernel h;
    h.dim = dim;
    h.values.assign(static_cast<std::size_t>(grid->n_cells()) * dim, 0.0);
    h.grid = std::move(grid);
    return h;
}

Kernel constant_kernel(GridPtr grid, int dim, double value) {
    Kernel h = zero_kernel(std::move(grid), dim);
    for (double& v : h.values) v = value;
    return h;
}

Kernel indicator_kernel(GridPtr grid, int dim, double a, double b, int k) {
    Kernel h = zero_kernel(grid, dim);
    for (int i = 0; i < grid->n_cells(); ++i) {
        const double lo = std::max(a, grid->left(i));
        const double hi = std::min(b, grid->right(i));
        if (hi > lo) h.value(i, k) = (hi - lo) / grid->dt(i);
    }
    return h;
}

Kernel sampled_kernel(GridPtr grid, int dim, double (*f)(double), int k) {
    Kernel h = zero_kernel(grid, dim);
    for (int i = 0; i < grid->n_cells(); ++i) h.value(i, k) = f(grid->left(i));
    return h;
}

namespace {
void check_compatible(const Kernel& h, const Kernel& g) {
    if (h.dim != g.dim || !same_grid(*h.grid, *g.grid))
        throw std::invalid_argument("kernel operation: grid/dim mismatch");
}
}  // namespace

double kernel_inner(const Kernel& h, const Kernel& g) {
    check_compatible(h, g);
    double acc = 0.0;
    for (int i = 0; i < h.grid->n_cells(); ++i) {
        double cell = 0.0;
        for (int k = 0; k < h.dim; ++k) cell += h.value(i, k) * g.value(i, k);
        acc += cell * h.grid->dt(i);
    }
    return acc;
}

double kernel_norm2(const Kernel& h) {
    double acc = 0.0;
    for (int i = 0; i < h.grid->n_cells(); ++i) {
        double cell = 0.0;
        for (int k = 0; k < h.dim; ++k) cell += h.value(i, k) * h.value(i, k);
        acc += cell * h.grid->dt(i);
    }
    return acc;
}

double kernel_norm(const Kernel& h) { return std::sqrt(kernel_norm2(h)); }

Kernel kernel_axpy(double a, const Kernel& h, double b, const Kernel& g) {
    check_compatible(h, g);
    Kernel out = h;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a * h.values[i] + b * g.values[i];
    return out;
}

double wiener_integral(const BrownianPath& path, const Kernel& h) {
    if (path.dim != h.dim || !same_grid(*path.grid, *h.grid))
        throw std::invalid_argument("wiener_integral: grid/dim mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < h.values.size(); ++i) acc += h.values[i] * path.increments[i];
    return acc;
}

std::uint64_t kink_hit_count() { return g_kink_hits.load(); }
void reset_kink_hit_count() { g_kink_hits.store(0); }
void record_kink_hit() { g_kink_hits.fetch_add(1, std::memory_order_relaxed); }

}  // namespace skorolab
