#include "skorolab/skorohod.hpp"

#include "skorolab/parallel.hpp"
#include "skorolab/stats.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace skorolab {

namespace {

void index_unique(StepIntegrand& u) {
    std::map<const CylindricalFunctional*, int> seen;
    u.slot_owner.resize(u.coefficients.size());
    for (std::size_t s = 0; s < u.coefficients.size(); ++s) {
        const CylindricalFunctional* ptr = u.coefficients[s].get();
        auto [it, inserted] = seen.emplace(ptr, static_cast<int>(u.unique_coeffs.size()));
        if (inserted) u.unique_coeffs.push_back(u.coefficients[s]);
        u.slot_owner[s] = it->second;
    }
}

bool compute_adapted(const StepIntegrand& u) {
    for (int i = 0; i < u.grid->n_cells(); ++i)
        for (int k = 0; k < u.dim; ++k)
            if (!u.coeff(i, k).measurable_before(i)) return false;
    return true;
}

void check_coeff_grids(const StepIntegrand& u) {
    for (const auto& c : u.coefficients) {
        if (!c) throw std::invalid_argument("step integrand: null coefficient");
        if (!c->kernels.empty() && (c->dim() != u.dim || !same_grid(*c->grid(), *u.grid)))
            throw std::invalid_argument("step integrand: coefficient kernels on a different grid/dim");
    }
}

}  // namespace

StepIntegrand make_step_integrand(GridPtr grid, int dim, std::vector<FunctionalPtr> coefficients) {
    if (dim < 1) throw std::invalid_argument("step integrand: dim must be >= 1");
    StepIntegrand u;
    u.grid = std::move(grid);
    u.dim = dim;
    if (coefficients.size() != static_cast<std::size_t>(u.grid->n_cells()) * dim)
        throw std::invalid_argument("step integrand: need one coefficient per (cell, dim) slot");
    u.coefficients = std::move(coefficients);
    check_coeff_grids(u);
    index_unique(u);
    u.adapted = compute_adapted(u);
    return u;
}

StepIntegrand deterministic_integrand(const Kernel& values) {
    std::vector<FunctionalPtr> coeffs;
    coeffs.reserve(values.values.size());
    for (double v : values.values) coeffs.push_back(std::make_shared<CylindricalFunctional>(constant_functional(v)));
    return make_step_integrand(values.grid, values.dim, std::move(coeffs));
}

StepIntegrand functional_times_indicator(GridPtr grid, int dim, const CylindricalFunctional& X, double a, double b) {
    auto zero = std::make_shared<CylindricalFunctional>(constant_functional(0.0));
    auto full = std::make_shared<CylindricalFunctional>(X);
    std::vector<FunctionalPtr> coeffs(static_cast<std::size_t>(grid->n_cells()) * dim, zero);
    std::map<double, FunctionalPtr> scaled;
    for (int i = 0; i < grid->n_cells(); ++i) {
        const double lo = std::max(a, grid->left(i));
        const double hi = std::min(b, grid->right(i));
        if (hi <= lo) continue;
        const double frac = (hi - lo) / grid->dt(i);
        FunctionalPtr c;
        if (frac == 1.0) {
            c = full;
        } else {
            auto [it, inserted] = scaled.emplace(frac, nullptr);
            if (inserted)
                it->second = std::make_shared<CylindricalFunctional>(make_functional(
                    make_smooth_map(mx_scale(frac, X.map.root), X.map.arity), X.kernels));
            c = it->second;
        }
        for (int k = 0; k < dim; ++k) coeffs[static_cast<std::size_t>(i) * dim + k] = c;
    }
    return make_step_integrand(std::move(grid), dim, std::move(coeffs));
}

StepIntegrand adapted_integrand(GridPtr grid, int dim, const SmoothMap& f, double scale) {
    if (f.arity != 1) throw std::invalid_argument("adapted_integrand: map must have arity 1");
    const MapExpr scaled = mx_scale(scale, f.root);
    std::vector<FunctionalPtr> coeffs(static_cast<std::size_t>(grid->n_cells()) * dim);
    for (int i = 0; i < grid->n_cells(); ++i) {
        for (int k = 0; k < dim; ++k) {
            Kernel h = indicator_kernel(grid, dim, 0.0, grid->left(i), k);
            coeffs[static_cast<std::size_t>(i) * dim + k] = std::make_shared<CylindricalFunctional>(
                make_functional(make_smooth_map(scaled, 1), std::vector<Kernel>{std::move(h)}));
        }
    }
    return make_step_integrand(std::move(grid), dim, std::move(coeffs));
}

StepIntegrand linear_combination(double a, const StepIntegrand& u, double b, const StepIntegrand& v) {
    if (u.dim != v.dim || !same_grid(*u.grid, *v.grid))
        throw std::invalid_argument("linear_combination: grid/dim mismatch");
    std::vector<FunctionalPtr> coeffs(u.coefficients.size());
    std::map<std::pair<const CylindricalFunctional*, const CylindricalFunctional*>, FunctionalPtr> cache;
    for (std::size_t s = 0; s < coeffs.size(); ++s) {
        const auto key = std::make_pair(u.coefficients[s].get(), v.coefficients[s].get());
        auto [it, inserted] = cache.emplace(key, nullptr);
        if (inserted) {
            const CylindricalFunctional& cu = *u.coefficients[s];
            const CylindricalFunctional& cv = *v.coefficients[s];
            const int nu = cu.map.arity;
            MapExpr expr = mx_add(mx_scale(a, cu.map.root), mx_scale(b, mx_shift_inputs(cv.map.root, nu)));
            std::vector<Kernel> kernels = cu.kernels;
            kernels.insert(kernels.end(), cv.kernels.begin(), cv.kernels.end());
            it->second = std::make_shared<CylindricalFunctional>(
                make_functional(make_smooth_map(std::move(expr), nu + cv.map.arity), std::move(kernels)));
        }
        coeffs[s] = it->second;
    }
    return make_step_integrand(u.grid, u.dim, std::move(coeffs));
}

StepIntegrand scale_integrand(double c, const StepIntegrand& u) {
    std::vector<FunctionalPtr> coeffs(u.coefficients.size());
    std::map<const CylindricalFunctional*, FunctionalPtr> cache;
    for (std::size_t s = 0; s < coeffs.size(); ++s) {
        auto [it, inserted] = cache.emplace(u.coefficients[s].get(), nullptr);
        if (inserted) {
            const CylindricalFunctional& cu = *u.coefficients[s];
            it->second = std::make_shared<CylindricalFunctional>(
                make_functional(make_smooth_map(mx_scale(c, cu.map.root), cu.map.arity), cu.kernels));
        }
        coeffs[s] = it->second;
    }
    return make_step_integrand(u.grid, u.dim, std::move(coeffs));
}

namespace {
void check_path(const StepIntegrand& u, const BrownianPath& path) {
    if (path.dim != u.dim || !same_grid(*path.grid, *u.grid))
        throw std::invalid_argument("skorohod/ito integral: grid/dim mismatch");
}
}  // namespace

std::vector<double> integrand_values(const StepIntegrand& u, const BrownianPath& path) {
    check_path(u, path);
    std::vector<double> vals(u.unique_coeffs.size());
    for (std::size_t j = 0; j < u.unique_coeffs.size(); ++j) vals[j] = eval_functional(*u.unique_coeffs[j], path);
    std::vector<double> out(u.coefficients.size());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = vals[u.slot_owner[s]];
    return out;
}

SkorohodResult skorohod_integral(const StepIntegrand& u, const BrownianPath& path) {
    check_path(u, path);
    std::vector<FunctionalEval> evals(u.unique_coeffs.size());
    for (std::size_t j = 0; j < u.unique_coeffs.size(); ++j)
        evals[j] = eval_with_gradient(*u.unique_coeffs[j], path);

    SkorohodResult res;
    const int n = u.grid->n_cells();
    for (int i = 0; i < n; ++i) {
        const double dt = u.grid->dt(i);
        for (int k = 0; k < u.dim; ++k) {
            const std::size_t slot = static_cast<std::size_t>(i) * u.dim + k;
            const FunctionalEval& e = evals[u.slot_owner[slot]];
            res.ito_part += e.value * path.increment(i, k);
            res.trace_part += derivative_component(*u.coefficients[slot], e.grad, i, k) * dt;
        }
    }
    res.value = res.ito_part - res.trace_part;
    return res;
}

double ito_integral(const StepIntegrand& u, const BrownianPath& path) {
    if (!u.adapted) throw std::invalid_argument("ito_integral: integrand is not adapted");
    check_path(u, path);
    std::vector<double> vals(u.unique_coeffs.size());
    for (std::size_t j = 0; j < u.unique_coeffs.size(); ++j) vals[j] = eval_functional(*u.unique_coeffs[j], path);
    double acc = 0.0;
    for (int i = 0; i < u.grid->n_cells(); ++i)
        for (int k = 0; k < u.dim; ++k) {
            const std::size_t slot = static_cast<std::size_t>(i) * u.dim + k;
            acc += vals[u.slot_owner[slot]] * path.increment(i, k);
        }
    return acc;
}

DualityReport duality_residual(const CylindricalFunctional& F, const StepIntegrand& u, std::size_t n_samples,
                               const RngStream& rng) {
    if (n_samples < 100) throw std::invalid_argument("duality_residual: need at least 100 samples");
    if (!F.kernels.empty() && (F.dim() != u.dim || !same_grid(*F.grid(), *u.grid)))
        throw std::invalid_argument("duality_residual: F and u on different grids");

    std::vector<double> lhs(n_samples), rhs(n_samples);
    parallel_for(n_samples, 0, [&](std::size_t s) {
        const BrownianPath path = sample_path(u.grid, u.dim, rng.substream(s));
        const SkorohodResult d = skorohod_integral(u, path);
        const FunctionalEval ef = eval_with_gradient(F, path);
        lhs[s] = ef.value * d.value;
        const std::vector<double> uv = integrand_values(u, path);
        double inner = 0.0;
        for (int i = 0; i < u.grid->n_cells(); ++i) {
            const double dt = u.grid->dt(i);
            for (int k = 0; k < u.dim; ++k)
                inner += derivative_component(F, ef.grad, i, k) * uv[static_cast<std::size_t>(i) * u.dim + k] * dt;
        }
        rhs[s] = inner;
    });

    DualityReport rep;
    rep.n = n_samples;
    const MeanStderr ml = mean_and_stderr(lhs);
    const MeanStderr mr = mean_and_stderr(rhs);
    rep.lhs = ml.mean;
    rep.se_lhs = ml.stderr_;
    rep.rhs = mr.mean;
    rep.se_rhs = mr.stderr_;
    std::vector<double> diff(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) diff[s] = lhs[s] - rhs[s];
    const MeanStderr md = mean_and_stderr(diff);
    rep.residual = md.mean;
    rep.se_residual = md.stderr_;
    return rep;
}

}  // namespace skorolab
