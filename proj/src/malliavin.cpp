#include "skorolab/malliavin.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace skorolab {

double clamp_pow(double x, double a) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return std::pow(x, a);
}

double clamp_pow_grad(double x, double a) {
    if (x == 0.0 || x == 1.0) {
        record_kink_hit();
        return 0.0;
    }
    if (x < 0.0 || x > 1.0) return 0.0;
    return a * std::pow(x, a - 1.0);
}

struct MapNode {
    virtual ~MapNode() = default;
    virtual double value(std::span<const double> x) const = 0;
    virtual void grad(std::span<const double> x, double& v, std::vector<double>& g) const = 0;
    virtual void hess(std::span<const double> x, double& v, std::vector<double>& g, std::vector<double>& h) const = 0;
    virtual MapExpr shifted(int offset) const = 0;
    virtual int max_input() const = 0;
};

namespace {

std::size_t sq(std::size_t n) { return n * n; }

struct ConstNode final : MapNode {
    double c;
    explicit ConstNode(double c) : c(c) {}
    double value(std::span<const double>) const override { return c; }
    void grad(std::span<const double> x, double& v, std::vector<double>& g) const override {
        v = c;
        g.assign(x.size(), 0.0);
    }
    void hess(std::span<const double> x, double& v, std::vector<double>& g, std::vector<double>& h) const override {
        v = c;
        g.assign(x.size(), 0.0);
        h.assign(sq(x.size()), 0.0);
    }
    MapExpr shifted(int) const override { return std::make_shared<ConstNode>(c); }
    int max_input() const override { return -1; }
};

struct InputNode final : MapNode {
    int idx;
    explicit InputNode(int i) : idx(i) {}
    double value(std::span<const double> x) const override { return x[idx]; }
    void grad(std::span<const double> x, double& v, std::vector<double>& g) const override {
        v = x[idx];
        g.assign(x.size(), 0.0);
        g[idx] = 1.0;
    }
    void hess(std::span<const double> x, double& v, std::vector<double>& g, std::vector<double>& h) const override {
        grad(x, v, g);
        h.assign(sq(x.size()), 0.0);
    }
    MapExpr shifted(int offset) const override { return std::make_shared<InputNode>(idx + offset); }
    int max_input() const override { return idx; }
};

struct BinaryNode : MapNode {
    MapExpr lhs, rhs;
    BinaryNode(MapExpr a, MapExpr b) : lhs(std::move(a)), rhs(std::move(b)) {}
    int max_input() const override { return std::max(lhs->max_input(), rhs->max_input()); }
};

struct AddNode final : BinaryNode {
    using BinaryNode::BinaryNode;
    double value(std::span<const double> x) const override { return lhs->value(x) + rhs->value(x); }
    void grad(std::span<const double> x, double& v, std::vector<double>& g) const override {
        double vb;
        std::vector<double> gb;
        lhs->grad(x, v, g);
        rhs->grad(x, vb, gb);
        v += vb;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gb[i];
    }
    void hess(std::span<const double> x, double& v, std::vector<double>& g, std::vector<double>& h) const override {
        double vb;
        std::vector<double> gb, hb;
        lhs->hess(x, v, g, h);
        rhs->hess(x, vb, gb, hb);
        v += vb;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gb[i];
        for (std::size_t i = 0; i < h.size(); ++i) h[i] += hb[i];
    }
    MapExpr shifted(int offset) const override {
        return std::make_shared<AddNode>(lhs->shifted(offset), rhs->shifted(offset));
    }
};

struct SubNode final : BinaryNode {
    using BinaryNode::BinaryNode;
    double value(std::span<const double> x) const override { return lhs->value(x) - rhs->value(x); }
    void grad(std::span<const double> x, double& v, std::vector<double>& g) const override {
        double vb;
        std::vector<double> gb;
        lhs->grad(x, v, g);
        rhs->grad(x, vb, gb);
        v -= vb;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gb[i];
    }
    void hess(std::span<const double> x, double& v, std::vector<double>& g, std::vector<double>& h) const override {
        double vb;
        std::vector<double> gb, hb;
        lhs->hess(x, v, g, h);
        rhs->hess(x, vb, gb, hb);
        v -= vb;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gb[i];
        for (std::size_t i = 0; i < h.size(); ++i) h[i] -= hb[i];
    }
    MapExpr shifted(int offset) const override {
        return std::make_shared<SubNode>(lhs->shifted(offset), rhs->shifted(offset));
    }
};

struct MulNode final : BinaryNode {
    using BinaryNode::BinaryNode;
    double value(std::span<const double> x) const override { return lhs->value(x) * rhs->value(x); }
    void grad(std::span<const double> x, double& v, std::vector<double>& g) const override {
        double va, vb;
        std::vector<double> ga, gb;
        lhs->grad(x, va, ga);
        rhs->grad(x, vb, gb);
        v = va * vb;
        g.resize(x.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = va * gb[i] + vb * ga[i];
    }
    void hess(std::span<const double> x, double& v, std::vector<double>& g, std::vector<double>& h) const override {
        double va, vb;
        std::vector<double> ga, gb, ha, hb;
        lhs->hess(x, va, ga, ha);
        rhs->hess(x, vb, gb, hb);
        const std::size_t n = x.size();
        v = va * vb;
        g.resize(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = va * gb[i] + vb * ga[i];
        h.resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                h[i * n + j] = va * hb[i * n + j] + vb * ha[i * n + j] + ga[i] * gb[j] + ga[j] * gb[i];
    }
    MapExpr shifted(int offset) const override {
        return std::make_shared<MulNode>(lhs->shifted(offset), rhs->shifted(offset));
    }
};

// phi(u) with the chain rule g = phi' gu, H = phi' Hu + phi'' gu (x) gu.
struct UnaryNode : MapNode {
    MapExpr arg;
    explicit UnaryNode(MapExpr a) : arg(std::move(a)) {}
    virtual double phi(double u) const = 0;
    virtual double dphi(double u) const = 0;
    virtual double d2phi(double u) const = 0;

    double value(std::span<const double> x) const override { return phi(arg->value(x)); }
    void grad(std::span<const double> x, double& v, std::vector<double>& g) const override {
        double u;
        arg->grad(x, u, g);
        v = phi(u);
        const double d = dphi(u);
        for (double& gi : g) gi *= d;
    }
    void hess(std::span<const double> x, double& v, std::vector<double>& g, std::vector<double>& h) const override {
        double u;
        arg->hess(x, u, g, h);
        v = phi(u);
        const double d1 = dphi(u);
        const double d2 = d2phi(u);
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) h[i * n + j] = d1 * h[i * n + j] + d2 * g[i] * g[j];
        for (double& gi : g) gi *= d1;
    }
    int max_input() const override { return arg->max_input(); }
};

struct ExpNode final : UnaryNode {
    using UnaryNode::UnaryNode;
    double phi(double u) const override { return std::exp(u); }
    double dphi(double u) const override { return std::exp(u); }
    double d2phi(double u) const override { return std::exp(u); }
    MapExpr shifted(int offset) const override { return std::make_shared<ExpNode>(arg->shifted(offset)); }
};

struct SinNode final : UnaryNode {
    using UnaryNode::UnaryNode;
    double phi(double u) const override { return std::sin(u); }
    double dphi(double u) const override { return std::cos(u); }
    double d2phi(double u) const override { return -std::sin(u); }
    MapExpr shifted(int offset) const override { return std::make_shared<SinNode>(arg->shifted(offset)); }
};

struct CosNode final : UnaryNode {
    using UnaryNode::UnaryNode;
    double phi(double u) const override { return std::cos(u); }
    double dphi(double u) const override { return -std::sin(u); }
    double d2phi(double u) const override { return -std::cos(u); }
    MapExpr shifted(int offset) const override { return std::make_shared<CosNode>(arg->shifted(offset)); }
};

struct TanhNode final : UnaryNode {
    using UnaryNode::UnaryNode;
    double phi(double u) const override { return std::tanh(u); }
    double dphi(double u) const override {
        const double t = std::tanh(u);
        return 1.0 - t * t;
    }
    double d2phi(double u) const override {
        const double t = std::tanh(u);
        return -2.0 * t * (1.0 - t * t);
    }
    MapExpr shifted(int offset) const override { return std::make_shared<TanhNode>(arg->shifted(offset)); }
};

struct PowNode final : UnaryNode {
    double a;
    PowNode(MapExpr e, double a) : UnaryNode(std::move(e)), a(a) {}
    double phi(double u) const override { return std::pow(u, a); }
    double dphi(double u) const override { return a * std::pow(u, a - 1.0); }
    double d2phi(double u) const override { return a * (a - 1.0) * std::pow(u, a - 2.0); }
    MapExpr shifted(int offset) const override { return std::make_shared<PowNode>(arg->shifted(offset), a); }
};

struct ClampPowNode final : UnaryNode {
    double a;
    ClampPowNode(MapExpr e, double a) : UnaryNode(std::move(e)), a(a) {}
    double phi(double u) const override { return clamp_pow(u, a); }
    double dphi(double u) const override { return clamp_pow_grad(u, a); }
    double d2phi(double u) const override {
        if (u == 0.0 || u == 1.0) return 0.0;
        if (u < 0.0 || u > 1.0) return 0.0;
        return a * (a - 1.0) * std::pow(u, a - 2.0);
    }
    MapExpr shifted(int offset) const override { return std::make_shared<ClampPowNode>(arg->shifted(offset), a); }
};

struct ClampPowGradNode final : UnaryNode {
    double a;
    ClampPowGradNode(MapExpr e, double a) : UnaryNode(std::move(e)), a(a) {}
    double phi(double u) const override {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return a * std::pow(u, a - 1.0);
    }
    double dphi(double u) const override {
        if (u == 0.0 || u == 1.0) {
            record_kink_hit();
            return 0.0;
        }
        if (u < 0.0 || u > 1.0) return 0.0;
        return a * (a - 1.0) * std::pow(u, a - 2.0);
    }
    double d2phi(double u) const override {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return a * (a - 1.0) * (a - 2.0) * std::pow(u, a - 3.0);
    }
    MapExpr shifted(int offset) const override { return std::make_shared<ClampPowGradNode>(arg->shifted(offset), a); }
};

}  // namespace

MapExpr mx_const(double c) { return std::make_shared<ConstNode>(c); }
MapExpr mx_input(int index) {
    if (index < 0) throw std::invalid_argument("mx_input: negative index");
    return std::make_shared<InputNode>(index);
}
MapExpr mx_add(MapExpr a, MapExpr b) { return std::make_shared<AddNode>(std::move(a), std::move(b)); }
MapExpr mx_sub(MapExpr a, MapExpr b) { return std::make_shared<SubNode>(std::move(a), std::move(b)); }
MapExpr mx_mul(MapExpr a, MapExpr b) { return std::make_shared<MulNode>(std::move(a), std::move(b)); }
MapExpr mx_scale(double c, MapExpr a) { return mx_mul(mx_const(c), std::move(a)); }
MapExpr mx_pow(MapExpr a, double exponent) { return std::make_shared<PowNode>(std::move(a), exponent); }
MapExpr mx_exp(MapExpr a) { return std::make_shared<ExpNode>(std::move(a)); }
MapExpr mx_sin(MapExpr a) { return std::make_shared<SinNode>(std::move(a)); }
MapExpr mx_cos(MapExpr a) { return std::make_shared<CosNode>(std::move(a)); }
MapExpr mx_tanh(MapExpr a) { return std::make_shared<TanhNode>(std::move(a)); }
MapExpr mx_clamp_pow(MapExpr a, double exponent) { return std::make_shared<ClampPowNode>(std::move(a), exponent); }
MapExpr mx_clamp_pow_grad(MapExpr a, double exponent) {
    return std::make_shared<ClampPowGradNode>(std::move(a), exponent);
}

MapExpr mx_shift_inputs(const MapExpr& e, int offset) { return e->shifted(offset); }

double SmoothMap::value(std::span<const double> x) const { return root->value(x); }

MapEval1 SmoothMap::value_grad(std::span<const double> x) const {
    MapEval1 out;
    root->grad(x, out.value, out.grad);
    return out;
}

MapEval2 SmoothMap::value_grad_hess(std::span<const double> x) const {
    MapEval2 out;
    root->hess(x, out.value, out.grad, out.hess);
    return out;
}

SmoothMap make_smooth_map(MapExpr root, int arity) {
    if (!root) throw std::invalid_argument("make_smooth_map: null expression");
    if (root->max_input() >= arity) throw std::invalid_argument("make_smooth_map: input index exceeds arity");
    return SmoothMap{std::move(root), arity};
}

SmoothMap parse_smooth_map(const std::string& id) {
    const MapExpr x = mx_input(0);
    if (id == "identity") return make_smooth_map(x, 1);
    if (id == "square") return make_smooth_map(mx_mul(x, x), 1);
    if (id == "sin") return make_smooth_map(mx_sin(x), 1);
    if (id == "cos") return make_smooth_map(mx_cos(x), 1);
    if (id == "exp") return make_smooth_map(mx_exp(x), 1);
    if (id == "tanh") return make_smooth_map(mx_tanh(x), 1);
    if (id == "thm1_f") return make_smooth_map(mx_clamp_pow(x, 0.75), 1);
    if (id == "thm1_fprime") return make_smooth_map(mx_clamp_pow_grad(x, 0.75), 1);
    const auto colon = id.find(':');
    if (colon != std::string::npos) {
        const std::string head = id.substr(0, colon);
        const std::string args = id.substr(colon + 1);
        if (head == "const") return make_smooth_map(mx_const(std::strtod(args.c_str(), nullptr)), 0);
        if (head == "cp") return make_smooth_map(mx_clamp_pow(x, std::strtod(args.c_str(), nullptr)), 1);
        if (head == "cpgrad") return make_smooth_map(mx_clamp_pow_grad(x, std::strtod(args.c_str(), nullptr)), 1);
        if (head == "poly") {
            std::vector<double> coeffs;
            std::stringstream ss(args);
            std::string tok;
            while (std::getline(ss, tok, ',')) coeffs.push_back(std::strtod(tok.c_str(), nullptr));
            if (coeffs.empty()) throw std::invalid_argument("parse_smooth_map: poly needs coefficients");
            // Horner form.
            MapExpr e = mx_const(coeffs.back());
            for (std::size_t i = coeffs.size() - 1; i-- > 0;) e = mx_add(mx_const(coeffs[i]), mx_mul(x, e));
            return make_smooth_map(e, 1);
        }
    }
    throw std::invalid_argument("parse_smooth_map: unknown map id '" + id + "'");
}

std::vector<std::string> smooth_map_registry() {
    return {"identity", "square", "sin", "cos", "exp", "tanh", "thm1_f", "cp:0.75", "poly:1,-2,0.5,3"};
}

const GridPtr& CylindricalFunctional::grid() const {
    static const GridPtr null_grid;
    return kernels.empty() ? null_grid : kernels.front().grid;
}

bool CylindricalFunctional::measurable_before(int cell) const {
    for (const Kernel& h : kernels)
        if (!h.supported_before(cell)) return false;
    return true;
}

CylindricalFunctional make_functional(SmoothMap map, std::vector<Kernel> kernels) {
    if (static_cast<int>(kernels.size()) != map.arity)
        throw std::invalid_argument("make_functional: kernel count must equal map arity");
    for (std::size_t i = 1; i < kernels.size(); ++i)
        if (kernels[i].dim != kernels[0].dim || !same_grid(*kernels[i].grid, *kernels[0].grid))
            throw std::invalid_argument("make_functional: kernels must share grid and dim");
    return CylindricalFunctional{std::move(map), std::move(kernels)};
}

CylindricalFunctional constant_functional(double c) {
    return CylindricalFunctional{make_smooth_map(mx_const(c), 0), {}};
}

namespace {
std::vector<double> wiener_coordinates(const CylindricalFunctional& F, const BrownianPath& path) {
    std::vector<double> z(F.kernels.size());
    for (std::size_t i = 0; i < F.kernels.size(); ++i) z[i] = wiener_integral(path, F.kernels[i]);
    return z;
}

void check_path(const CylindricalFunctional& F, const BrownianPath& path) {
    if (F.kernels.empty()) return;
    if (path.dim != F.dim() || !same_grid(*path.grid, *F.grid()))
        throw std::invalid_argument("functional evaluation: grid/dim mismatch");
}
}  // namespace

double eval_functional(const CylindricalFunctional& F, const BrownianPath& path) {
    check_path(F, path);
    const std::vector<double> z = wiener_coordinates(F, path);
    return F.map.value(z);
}

FunctionalEval eval_with_gradient(const CylindricalFunctional& F, const BrownianPath& path) {
    check_path(F, path);
    const std::vector<double> z = wiener_coordinates(F, path);
    MapEval1 e = F.map.value_grad(z);
    return FunctionalEval{e.value, std::move(e.grad)};
}

double derivative_component(const CylindricalFunctional& F, std::span<const double> grad, int cell, int k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < F.kernels.size(); ++j) acc += grad[j] * F.kernels[j].value(cell, k);
    return acc;
}

Kernel derivative(const CylindricalFunctional& F, const BrownianPath& path) {
    check_path(F, path);
    Kernel out = zero_kernel(path.grid, path.dim);
    if (F.kernels.empty()) return out;
    const FunctionalEval e = eval_with_gradient(F, path);
    for (std::size_t j = 0; j < F.kernels.size(); ++j)
        for (std::size_t m = 0; m < out.values.size(); ++m) out.values[m] += e.grad[j] * F.kernels[j].values[m];
    return out;
}

H2Sample second_derivative(const CylindricalFunctional& F, const BrownianPath& path) {
    check_path(F, path);
    H2Sample out;
    out.grid = path.grid;
    out.dim = path.dim;
    const std::size_t m = static_cast<std::size_t>(path.grid->n_cells()) * path.dim;
    out.values.assign(m * m, 0.0);
    if (F.kernels.empty()) return out;
    const std::vector<double> z = wiener_coordinates(F, path);
    const MapEval2 e = F.map.value_grad_hess(z);
    const std::size_t n = F.kernels.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double hij = e.hess[i * n + j];
            if (hij == 0.0) continue;
            const std::vector<double>& hi = F.kernels[i].values;
            const std::vector<double>& hj = F.kernels[j].values;
            for (std::size_t s = 0; s < m; ++s) {
                if (hi[s] == 0.0) continue;
                const double w = hij * hi[s];
                for (std::size_t t = 0; t < m; ++t) out.values[s * m + t] += w * hj[t];
            }
        }
    }
    return out;
}

}  // namespace skorolab
