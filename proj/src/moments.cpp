#include "skorolab/moments.hpp"

#include "skorolab/parallel.hpp"
#include "skorolab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

namespace skorolab {

std::string norm_id_name(NormId id) {
    switch (id) {
        case NormId::Lp_Omega_H: return "Lp_Omega_H";
        case NormId::Lp_Omega_HxH: return "Lp_Omega_HxH";
        case NormId::Lp_OmegaxH2: return "Lp_OmegaxH2";
        case NormId::Lp_OmegaxH3: return "Lp_OmegaxH3";
        case NormId::Lp_Omega_semiH: return "Lp_Omega_semiH";
    }
    throw std::invalid_argument("norm_id_name: bad id");
}

NormId parse_norm_id(const std::string& name) {
    if (name == "Lp_Omega_H") return NormId::Lp_Omega_H;
    if (name == "Lp_Omega_HxH") return NormId::Lp_Omega_HxH;
    if (name == "Lp_OmegaxH2") return NormId::Lp_OmegaxH2;
    if (name == "Lp_OmegaxH3") return NormId::Lp_OmegaxH3;
    if (name == "Lp_Omega_semiH") return NormId::Lp_Omega_semiH;
    throw std::invalid_argument("parse_norm_id: unknown norm id '" + name + "'");
}

namespace {

// Pathwise reduction feeding each norm estimator. For the three power-mean
// norms the estimator is (mean y)^{1/p}; Lp_Omega_semiH needs per-cell means.
struct PathReduction {
    double scalar = 0.0;
    std::vector<double> per_cell;  // |u(t_i)|^p (semiH only)
};

PathReduction reduce_path(const StepIntegrand& u, const BrownianPath& path, NormId id, double p) {
    const int n = u.grid->n_cells();
    const int d = u.dim;
    PathReduction out;
    switch (id) {
        case NormId::Lp_Omega_H: {
            const std::vector<double> vals = integrand_values(u, path);
            double norm2 = 0.0;
            for (int i = 0; i < n; ++i) {
                double cell = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double x = vals[static_cast<std::size_t>(i) * d + k];
                    cell += x * x;
                }
                norm2 += cell * u.grid->dt(i);
            }
            out.scalar = std::pow(norm2, 0.5 * p);
            return out;
        }
        case NormId::Lp_Omega_semiH: {
            const std::vector<double> vals = integrand_values(u, path);
            out.per_cell.resize(n);
            for (int i = 0; i < n; ++i) {
                double cell = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double x = vals[static_cast<std::size_t>(i) * d + k];
                    cell += x * x;
                }
                out.per_cell[i] = std::pow(cell, 0.5 * p);
            }
            return out;
        }
        case NormId::Lp_Omega_HxH:
        case NormId::Lp_OmegaxH2: {
            std::vector<FunctionalEval> evals(u.unique_coeffs.size());
            for (std::size_t j = 0; j < evals.size(); ++j) evals[j] = eval_with_gradient(*u.unique_coeffs[j], path);
            if (id == NormId::Lp_Omega_HxH) {
                // ||Du||^2_{HxH} = sum_r dt_r sum_s dt_s sum_{k,kap} (D_{s,kap} X_r^k)^2
                double norm2 = 0.0;
                for (int r = 0; r < n; ++r) {
                    double row = 0.0;
                    for (int k = 0; k < d; ++k) {
                        const std::size_t slot = static_cast<std::size_t>(r) * d + k;
                        const CylindricalFunctional& X = *u.coefficients[slot];
                        const std::vector<double>& g = evals[u.slot_owner[slot]].grad;
                        for (int s = 0; s < n; ++s) {
                            double cell = 0.0;
                            for (int kap = 0; kap < d; ++kap) {
                                const double v = derivative_component(X, g, s, kap);
                                cell += v * v;
                            }
                            row += cell * u.grid->dt(s);
                        }
                    }
                    norm2 += row * u.grid->dt(r);
                }
                out.scalar = std::pow(norm2, 0.5 * p);
            } else {
                // int int |D_s u(r)|^p dr ds with |.| euclidean over (k, kap).
                double acc = 0.0;
                for (int r = 0; r < n; ++r) {
                    double row = 0.0;
                    for (int s = 0; s < n; ++s) {
                        double cell = 0.0;
                        for (int k = 0; k < d; ++k) {
                            const std::size_t slot = static_cast<std::size_t>(r) * d + k;
                            const CylindricalFunctional& X = *u.coefficients[slot];
                            const std::vector<double>& g = evals[u.slot_owner[slot]].grad;
                            for (int kap = 0; kap < d; ++kap) {
                                const double v = derivative_component(X, g, s, kap);
                                cell += v * v;
                            }
                        }
                        row += std::pow(cell, 0.5 * p) * u.grid->dt(s);
                    }
                    acc += row * u.grid->dt(r);
                }
                out.scalar = acc;
            }
            return out;
        }
        case NormId::Lp_OmegaxH3: {
            // int^3 |D_t D_s u(r)|^p over cells; Hessians per unique coefficient.
            std::vector<H2Sample> hsamples(u.unique_coeffs.size());
            for (std::size_t j = 0; j < hsamples.size(); ++j)
                hsamples[j] = second_derivative(*u.unique_coeffs[j], path);
            const std::size_t m = static_cast<std::size_t>(n) * d;
            double acc = 0.0;
            std::vector<double> pair2(static_cast<std::size_t>(n) * n);
            for (int r = 0; r < n; ++r) {
                std::fill(pair2.begin(), pair2.end(), 0.0);
                for (int k = 0; k < d; ++k) {
                    const std::size_t slot = static_cast<std::size_t>(r) * d + k;
                    const H2Sample& H = hsamples[u.slot_owner[slot]];
                    for (int s = 0; s < n; ++s)
                        for (int t = 0; t < n; ++t) {
                            double cell = 0.0;
                            for (int k1 = 0; k1 < d; ++k1)
                                for (int k2 = 0; k2 < d; ++k2) {
                                    const double v =
                                        H.values[(static_cast<std::size_t>(s) * d + k1) * m +
                                                 static_cast<std::size_t>(t) * d + k2];
                                    cell += v * v;
                                }
                            pair2[static_cast<std::size_t>(s) * n + t] += cell;
                        }
                }
                double row = 0.0;
                for (int s = 0; s < n; ++s)
                    for (int t = 0; t < n; ++t)
                        row += std::pow(pair2[static_cast<std::size_t>(s) * n + t], 0.5 * p) * u.grid->dt(s) *
                               u.grid->dt(t);
                acc += row * u.grid->dt(r);
            }
            out.scalar = acc;
            return out;
        }
    }
    throw std::invalid_argument("estimate_norm: unknown norm id");
}

}  // namespace

NormEstimate estimate_norm(const IntegrandFamily& family, double eps, NormId norm_id, double p,
                           std::size_t n_samples, const RngStream& rng) {
    if (p < 1.0) throw std::invalid_argument("estimate_norm: p must be >= 1");
    if (n_samples < 100) throw std::invalid_argument("estimate_norm: need at least 100 samples");
    if (!(eps > 0.0)) throw std::invalid_argument("estimate_norm: eps must be positive");

    const StepIntegrand u = family(eps);
    const int n = u.grid->n_cells();

    NormEstimate est;
    est.norm_id = norm_id;
    est.p = p;
    est.eps = eps;
    est.method = "mc";

    if (norm_id == NormId::Lp_Omega_semiH) {
        std::vector<double> cell_rows(n_samples * static_cast<std::size_t>(n));
        parallel_for(n_samples, 0, [&](std::size_t s) {
            const BrownianPath path = sample_path(u.grid, u.dim, rng.substream(s));
            const PathReduction red = reduce_path(u, path, norm_id, p);
            for (int i = 0; i < n; ++i) cell_rows[s * static_cast<std::size_t>(n) + i] = red.per_cell[i];
        });
        auto statistic = [&](std::size_t lo, std::size_t hi) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                double mean = 0.0;
                for (std::size_t s = lo; s < hi; ++s) mean += cell_rows[s * static_cast<std::size_t>(n) + i];
                mean /= static_cast<double>(hi - lo);
                total += std::pow(mean, 2.0 / p) * u.grid->dt(i);
            }
            return std::sqrt(total);
        };
        est.value = statistic(0, n_samples);
        est.stderr_ = batch_stderr(n_samples, 10, statistic);
        return est;
    }

    std::vector<double> ys(n_samples);
    parallel_for(n_samples, 0, [&](std::size_t s) {
        const BrownianPath path = sample_path(u.grid, u.dim, rng.substream(s));
        ys[s] = reduce_path(u, path, norm_id, p).scalar;
    });
    auto statistic = [&](std::size_t lo, std::size_t hi) {
        double mean = 0.0;
        for (std::size_t s = lo; s < hi; ++s) mean += ys[s];
        mean /= static_cast<double>(hi - lo);
        return std::pow(mean, 1.0 / p);
    };
    est.value = statistic(0, n_samples);
    est.stderr_ = batch_stderr(n_samples, 10, statistic);
    const std::size_t k = std::min<std::size_t>(1000, n_samples / 20);
    est.tail_index = hill_tail_index(ys, k);
    est.diverging = est.tail_index > 0.0 && est.tail_index <= 1.15;
    return est;
}

GrowthFit fit_growth(std::span<const NormEstimate> estimates) {
    std::set<double> eps_set, p_set;
    for (const NormEstimate& e : estimates) {
        if (!std::isfinite(e.value) || e.value <= 0.0 || e.diverging)
            throw std::invalid_argument("fit_growth: estimates must be finite and positive");
        eps_set.insert(e.eps);
        p_set.insert(e.p);
    }
    if (eps_set.size() < 3 || p_set.size() < 3)
        throw std::invalid_argument("fit_growth: need >= 3 distinct eps and >= 3 distinct p values");

    // Normal equations for y ~ b0 + b1 x1 + b2 x2 with x1 = log eps, x2 = log p.
    double a[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double b[3] = {0, 0, 0};
    for (const NormEstimate& e : estimates) {
        const double x[3] = {1.0, std::log(e.eps), std::log(e.p)};
        const double y = std::log(e.value);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a[i][j] += x[i] * x[j];
            b[i] += x[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting.
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[piv[r]][col]) > std::abs(a[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double diag = a[piv[col]][col];
        if (std::abs(diag) < 1e-12) throw std::invalid_argument("fit_growth: degenerate (eps, p) design");
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[piv[r]][col] / diag;
            for (int c = col; c < 3; ++c) a[piv[r]][c] -= f * a[piv[col]][c];
            b[piv[r]] -= f * b[piv[col]];
        }
    }
    double beta[3];
    for (int row = 2; row >= 0; --row) {
        double acc = b[piv[row]];
        for (int c = row + 1; c < 3; ++c) acc -= a[piv[row]][c] * beta[c];
        beta[row] = acc / a[piv[row]][row];
    }

    GrowthFit fit;
    fit.intercept = beta[0];
    fit.kappa_eps = beta[1];
    fit.kappa_p = beta[2];
    fit.eps_grid.assign(eps_set.begin(), eps_set.end());
    fit.p_grid.assign(p_set.begin(), p_set.end());
    double rss = 0.0, tss = 0.0, ybar = 0.0;
    for (const NormEstimate& e : estimates) ybar += std::log(e.value);
    ybar /= static_cast<double>(estimates.size());
    for (const NormEstimate& e : estimates) {
        const double y = std::log(e.value);
        const double yhat = beta[0] + beta[1] * std::log(e.eps) + beta[2] * std::log(e.p);
        rss += (y - yhat) * (y - yhat);
        tss += (y - ybar) * (y - ybar);
    }
    fit.r2 = tss > 1e-24 ? std::max(0.0, 1.0 - rss / tss) : 1.0;
    return fit;
}

MomentTable moment_table_quadrature(const SmoothMap& g, std::span<const double> p_grid, std::vector<double> cutoffs) {
    if (g.arity != 1) throw std::invalid_argument("moment_table_quadrature: map must have arity 1");
    if (cutoffs.empty()) cutoffs = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
    std::sort(cutoffs.rbegin(), cutoffs.rend());
    MomentTable table;
    const double B = table.tail_bound;

    for (double p : p_grid) {
        MomentRow row;
        row.p = p;
        row.cutoffs = cutoffs;
        auto integrand_pos = [&](double x) {
            const double v = std::abs(g.value(std::span<const double>(&x, 1)));
            return std::pow(v, p) * normal_pdf(x);
        };
        auto integrand_neg = [&](double x) {
            const double mx = -x;
            const double v = std::abs(g.value(std::span<const double>(&mx, 1)));
            return std::pow(v, p) * normal_pdf(x);
        };
        for (double c : cutoffs) {
            std::vector<double> pts = log_breakpoints(c, 1.0);
            pts.push_back(B);
            QuadResult pos = integrate_segments(integrand_pos, pts, 1e-12, 1e-10);
            QuadResult neg = integrate_segments(integrand_neg, pts, 1e-12, 1e-10);
            const double v = pos.value + neg.value;
            if (!std::isfinite(v))
                throw NumericalFailure("moment_table_quadrature: non-finite integral at p=" + std::to_string(p) +
                                       ", cutoff=" + std::to_string(c));
            row.sweep_values.push_back(v);
        }
        row.value = row.sweep_values.back();

        // Affine fit of the sweep against decades of cutoff shrinkage.
        std::vector<double> decades(cutoffs.size());
        for (std::size_t i = 0; i < cutoffs.size(); ++i) decades[i] = -std::log10(cutoffs[i]);
        const LineFit lf = fit_line(decades, row.sweep_values);
        row.slope_per_decade = lf.slope;
        row.slope_r2 = lf.r2;

        // Divergence: the last sweep increment neither negligible nor decaying
        // geometrically. Exponents within ~0.15 of the boundary are reported
        // divergent as well; they are numerically indistinguishable here.
        const std::size_t m = row.sweep_values.size();
        if (m >= 3) {
            const double s_last = row.sweep_values[m - 1] - row.sweep_values[m - 2];
            const double s_prev = row.sweep_values[m - 2] - row.sweep_values[m - 3];
            const double floor = 1e-9 + 1e-8 * std::abs(row.value);
            row.divergent = s_last > floor && s_last >= 0.7 * s_prev;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

double cp_grad_moment_lower_bound(double a, double p) {
    const double denom = 1.0 + (a - 1.0) * p;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(a, p) / (std::sqrt(2.0 * std::exp(1.0) * std::numbers::pi) * denom);
}

MeyerRatioReport meyer_ratio(const StepIntegrand& u, std::span<const double> p_grid, std::size_t n_samples,
                             const RngStream& rng, double meyer_exponent) {
    if (n_samples < 100) throw std::invalid_argument("meyer_ratio: need at least 100 samples");
    // One pass of base samples shared by every p on the grid.
    std::vector<double> abs_delta(n_samples), norm_h(n_samples), norm_hh(n_samples);
    parallel_for(n_samples, 0, [&](std::size_t s) {
        const BrownianPath path = sample_path(u.grid, u.dim, rng.substream(s));
        abs_delta[s] = std::abs(skorohod_integral(u, path).value);
        std::vector<FunctionalEval> evals(u.unique_coeffs.size());
        for (std::size_t j = 0; j < evals.size(); ++j) evals[j] = eval_with_gradient(*u.unique_coeffs[j], path);
        const int n = u.grid->n_cells();
        double nh2 = 0.0, nhh2 = 0.0;
        for (int r = 0; r < n; ++r) {
            double cell = 0.0, dcell = 0.0;
            for (int k = 0; k < u.dim; ++k) {
                const std::size_t slot = static_cast<std::size_t>(r) * u.dim + k;
                const FunctionalEval& e = evals[u.slot_owner[slot]];
                cell += e.value * e.value;
                const CylindricalFunctional& X = *u.coefficients[slot];
                for (int t = 0; t < n; ++t) {
                    double c2 = 0.0;
                    for (int kap = 0; kap < u.dim; ++kap) {
                        const double v = derivative_component(X, e.grad, t, kap);
                        c2 += v * v;
                    }
                    dcell += c2 * u.grid->dt(t);
                }
            }
            nh2 += cell * u.grid->dt(r);
            nhh2 += dcell * u.grid->dt(r);
        }
        norm_h[s] = std::sqrt(nh2);
        norm_hh[s] = std::sqrt(nhh2);
    });

    MeyerRatioReport report;
    report.meyer_exponent = meyer_exponent;
    const std::size_t hill_k = std::min<std::size_t>(1000, n_samples / 20);
    for (double p : p_grid) {
        MeyerRatioPoint pt;
        pt.p = p;
        std::vector<double> dpow(n_samples), hpow(n_samples), hhpow(n_samples);
        for (std::size_t s = 0; s < n_samples; ++s) {
            dpow[s] = std::pow(abs_delta[s], p);
            hpow[s] = std::pow(norm_h[s], p);
            hhpow[s] = std::pow(norm_hh[s], p);
        }
        const double ti_h = hill_tail_index(hpow, hill_k);
        const double ti_hh = hill_tail_index(hhpow, hill_k);
        if ((ti_h > 0.0 && ti_h <= 1.15) || (ti_hh > 0.0 && ti_hh <= 1.15)) {
            pt.excluded = true;
            report.points.push_back(pt);
            continue;
        }
        auto statistic = [&](std::size_t lo, std::size_t hi) {
            double md = 0.0, mh = 0.0, mhh = 0.0;
            for (std::size_t s = lo; s < hi; ++s) {
                md += dpow[s];
                mh += hpow[s];
                mhh += hhpow[s];
            }
            const double inv = 1.0 / static_cast<double>(hi - lo);
            const double numer = std::pow(md * inv, 1.0 / p);
            const double denom = std::pow(p, meyer_exponent) * (std::pow(mh * inv, 1.0 / p) + std::pow(mhh * inv, 1.0 / p));
            return numer / denom;
        };
        pt.ratio = statistic(0, n_samples);
        pt.stderr_ = batch_stderr(n_samples, 10, statistic);
        {
            double md = 0.0, mh = 0.0, mhh = 0.0;
            for (std::size_t s = 0; s < n_samples; ++s) {
                md += dpow[s];
                mh += hpow[s];
                mhh += hhpow[s];
            }
            const double inv = 1.0 / static_cast<double>(n_samples);
            pt.numerator = std::pow(md * inv, 1.0 / p);
            pt.denominator = std::pow(p, meyer_exponent) * (std::pow(mh * inv, 1.0 / p) + std::pow(mhh * inv, 1.0 / p));
        }
        report.max_ratio = std::max(report.max_ratio, pt.ratio);
        report.points.push_back(pt);
    }
    return report;
}

namespace {
void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}
}  // namespace

RatePrediction predict_rate(const std::string& theorem_id, std::span<const double> kappas, double meyer_exponent) {
    RatePrediction pred;
    pred.theorem_id = theorem_id;
    pred.kappas.assign(kappas.begin(), kappas.end());
    const double m = meyer_exponent;
    if (theorem_id == "thm2") {
        require(kappas.size() == 2, "thm2 takes (kappa1, kappa2)");
        require(kappas[0] > -0.5, "thm2 requires kappa1 > -0.5");
        require(kappas[1] >= 0.0, "thm2 requires kappa2 >= 0");
        pred.alpha_sup = (0.5 + kappas[0]) / (m + kappas[1]);
        return pred;
    }
    if (theorem_id == "thm3") {
        require(kappas.size() == 4, "thm3 takes (kappa1, kappa2, kappa3, kappa4)");
        require(kappas[0] > -0.5, "thm3 requires kappa1 > -0.5");
        require(kappas[2] > -0.5, "thm3 requires kappa3 > -0.5");
        require(kappas[1] >= 0.0, "thm3 requires kappa2 >= 0");
        require(kappas[3] >= 0.0, "thm3 requires kappa4 >= 0");
        const double kh1 = 0.5 * std::min(kappas[0] + kappas[2], 2.0 * kappas[2]);
        const double kh2 = 0.5 * std::max(1.0 + m + kappas[1] + kappas[3], 1.0 + 2.0 * kappas[3]);
        pred.kappa_hat1 = kh1;
        pred.kappa_hat2 = kh2;
        pred.alpha_sup = (0.5 + kh1) / kh2;
        return pred;
    }
    if (theorem_id == "thm41") {
        require(kappas.size() == 2, "thm41 takes (kappa1, kappa2)");
        require(kappas[0] > 0.5, "thm41 requires kappa1 > 0.5");
        require(kappas[1] >= 0.0, "thm41 requires kappa2 >= 0");
        pred.alpha_sup = (kappas[0] - 0.5) / (m + kappas[1]);
        return pred;
    }
    if (theorem_id == "thm42") {
        require(kappas.size() == 2, "thm42 takes (kappa1, kappa2)");
        require(kappas[0] > -0.5, "thm42 requires kappa1 > -0.5");
        require(kappas[1] >= 0.0, "thm42 requires kappa2 >= 0");
        pred.alpha_sup = (kappas[0] + 0.5) / (m + kappas[1]);
        return pred;
    }
    throw std::invalid_argument("predict_rate: unknown theorem id '" + theorem_id +
                                "' (expected thm2, thm3, thm41 or thm42)");
}

}  // namespace skorolab
