#include "hamesc/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hamesc {

SymbolPart parse_symbol_part(const std::string& tag) {
    if (tag == "full") return SymbolPart::full;
    if (tag == "principal") return SymbolPart::principal;
    if (tag == "free") return SymbolPart::free_part;
    if (tag == "lower") return SymbolPart::lower;
    throw std::invalid_argument("unknown symbol part tag: " + tag);
}

Symbol::Symbol(int dim, int order, double mu, std::vector<SymbolTerm> terms,
               std::string description)
    : dim_(dim), order_(order), mu_(mu), terms_(std::move(terms)),
      description_(std::move(description)) {
    if (dim_ < 1) throw std::invalid_argument("Symbol: dim must be >= 1");
    if (order_ < 1) throw std::invalid_argument("Symbol: order must be >= 1");
    if (mu_ <= 0.0) throw std::invalid_argument("Symbol: mu must be positive");
    for (auto& t : terms_) {
        if (static_cast<int>(t.alpha.size()) != dim_)
            throw std::invalid_argument("Symbol: term multi-index dimension mismatch");
        const int o = order_of(t.alpha);
        if (o > order_)
            throw std::invalid_argument("Symbol: term degree exceeds declared order");
        if (o < order_ && t.free_coeff != 0.0)
            throw std::invalid_argument("Symbol: free coefficient on a lower-order term");
        if (!t.coeff.value)
            throw std::invalid_argument("Symbol: term coefficient missing value callback");
    }
    std::sort(terms_.begin(), terms_.end(), [](const SymbolTerm& a, const SymbolTerm& b) {
        return graded_lex_less(a.alpha, b.alpha);
    });
    for (size_t i = 1; i < terms_.size(); ++i)
        if (terms_[i].alpha == terms_[i - 1].alpha)
            throw std::invalid_argument("Symbol: duplicate multi-index term");
    bool has_top = false;
    for (const auto& t : terms_)
        if (order_of(t.alpha) == order_) has_top = true;
    if (!has_top)
        throw std::invalid_argument("Symbol: no term of the declared top order");
}

void Symbol::check_point(const PhasePoint& pt) const {
    if (pt.x.size() != dim_ || pt.xi.size() != dim_)
        throw std::invalid_argument("Symbol: phase point dimension mismatch");
}

bool Symbol::term_active(const SymbolTerm& t, SymbolPart part) const {
    const bool top = order_of(t.alpha) == order_;
    switch (part) {
        case SymbolPart::full: return true;
        case SymbolPart::principal: return top;
        case SymbolPart::free_part: return top;
        case SymbolPart::lower: return !top;
    }
    throw std::invalid_argument("Symbol: unknown part selector");
}

double Symbol::eval(const PhasePoint& pt, SymbolPart part) const {
    check_point(pt);
    double r = 0.0;
    for (const auto& t : terms_) {
        if (!term_active(t, part)) continue;
        const double c = (part == SymbolPart::free_part) ? t.free_coeff : t.coeff.value(pt.x);
        r += c * monomial(pt.xi, t.alpha);
    }
    return r;
}

Eigen::VectorXd Symbol::xi_grad(const PhasePoint& pt, SymbolPart part) const {
    check_point(pt);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
    for (const auto& t : terms_) {
        if (!term_active(t, part)) continue;
        const double c = (part == SymbolPart::free_part) ? t.free_coeff : t.coeff.value(pt.x);
        if (c == 0.0) continue;
        for (int j = 0; j < dim_; ++j)
            if (t.alpha[j] > 0) g[j] += c * monomial_d(pt.xi, t.alpha, j);
    }
    return g;
}

Eigen::VectorXd Symbol::x_grad(const PhasePoint& pt, SymbolPart part) const {
    check_point(pt);
    if (part == SymbolPart::free_part) return Eigen::VectorXd::Zero(dim_);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
    for (const auto& t : terms_) {
        if (!term_active(t, part)) continue;
        if (!t.coeff.has_gradient())
            throw std::runtime_error("Symbol::x_grad: coefficient lacks analytic gradient");
        g += t.coeff.gradient(pt.x) * monomial(pt.xi, t.alpha);
    }
    return g;
}

Eigen::MatrixXd Symbol::xi_hessian(const PhasePoint& pt, SymbolPart part) const {
    check_point(pt);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& t : terms_) {
        if (!term_active(t, part)) continue;
        const double c = (part == SymbolPart::free_part) ? t.free_coeff : t.coeff.value(pt.x);
        if (c == 0.0) continue;
        for (int j = 0; j < dim_; ++j)
            for (int k = j; k < dim_; ++k) {
                const double v = c * monomial_d2(pt.xi, t.alpha, j, k);
                h(j, k) += v;
                if (k != j) h(k, j) += v;
            }
    }
    return h;
}

Eigen::MatrixXd Symbol::x_xi_mixed(const PhasePoint& pt, SymbolPart part) const {
    check_point(pt);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    if (part == SymbolPart::free_part) return m;
    for (const auto& t : terms_) {
        if (!term_active(t, part)) continue;
        if (!t.coeff.has_gradient())
            throw std::runtime_error("Symbol::x_xi_mixed: coefficient lacks analytic gradient");
        const Eigen::VectorXd g = t.coeff.gradient(pt.x);
        for (int j = 0; j < dim_; ++j) {
            if (t.alpha[j] == 0) continue;
            const double dj = monomial_d(pt.xi, t.alpha, j);
            for (int k = 0; k < dim_; ++k) m(k, j) += g[k] * dj;
        }
    }
    return m;
}

HamiltonField Symbol::hamiltonian_field(const PhasePoint& pt, SymbolPart part) const {
    HamiltonField f;
    f.dx_dt = xi_grad(pt, part);
    f.dxi_dt = -x_grad(pt, part);
    return f;
}

bool Symbol::coefficients_have_gradients() const {
    for (const auto& t : terms_)
        if (!t.coeff.has_gradient()) return false;
    return true;
}

bool Symbol::coefficients_have_hessians() const {
    for (const auto& t : terms_)
        if (!t.coeff.has_hessian()) return false;
    return true;
}

Symbol make_free_laplacian(int dim) {
    std::vector<SymbolTerm> terms;
    for (int j = 0; j < dim; ++j) {
        SymbolTerm t;
        t.alpha = MultiIndex(dim, 0);
        t.alpha[j] = 2;
        t.coeff = CoefficientFunction::constant(1.0, dim);
        t.free_coeff = 1.0;
        terms.push_back(std::move(t));
    }
    return Symbol(dim, 2, 1.0, std::move(terms), "free |xi|^2");
}

MetricSpec MetricSpec::minkowski(int dim) {
    MetricSpec g;
    g.base = Eigen::MatrixXd::Identity(dim, dim) * -1.0;
    g.base(0, 0) = 1.0;
    return g;
}

MetricSpec MetricSpec::minkowski_bump(int dim, double amp, double width) {
    MetricSpec g = minkowski(dim);
    g.perturbation[{0, 0}] = CoefficientFunction::gaussian_bump(amp, width, dim);
    return g;
}

Symbol make_klein_gordon(const MetricSpec& g_inverse,
                         const std::vector<CoefficientFunction>& vector_potential,
                         std::optional<CoefficientFunction> scalar_potential,
                         double mu) {
    const int dim = static_cast<int>(g_inverse.base.rows());
    if (dim < 1 || g_inverse.base.cols() != dim)
        throw std::invalid_argument("make_klein_gordon: base metric must be square");
    if (!g_inverse.base.isApprox(g_inverse.base.transpose(), 1e-14))
        throw std::invalid_argument("make_klein_gordon: inverse metric must be symmetric");
    for (const auto& [jk, cf] : g_inverse.perturbation) {
        if (jk.first < 0 || jk.second < 0 || jk.first >= dim || jk.second >= dim ||
            jk.first > jk.second)
            throw std::invalid_argument("make_klein_gordon: perturbation key out of range");
        if (!cf.value) throw std::invalid_argument("make_klein_gordon: empty perturbation");
    }
    if (!vector_potential.empty() && static_cast<int>(vector_potential.size()) != dim)
        throw std::invalid_argument("make_klein_gordon: vector potential dimension mismatch");

    const Eigen::MatrixXd mink = MetricSpec::minkowski(dim).base;

    // g^{jk} as coefficient functions (symmetric storage j <= k).
    auto metric_entry = [&](int j, int k) -> CoefficientFunction {
        CoefficientFunction c = CoefficientFunction::constant(g_inverse.base(j, k), dim);
        auto it = g_inverse.perturbation.find({std::min(j, k), std::max(j, k)});
        if (it != g_inverse.perturbation.end()) c = cf_sum(c, it->second);
        return c;
    };

    std::vector<SymbolTerm> terms;
    const bool has_a = !vector_potential.empty();

    // Quadratic terms: sum_{j<=k} (2 - delta_jk) g^{jk} xi_j xi_k.
    for (int j = 0; j < dim; ++j)
        for (int k = j; k < dim; ++k) {
            SymbolTerm t;
            t.alpha = MultiIndex(dim, 0);
            t.alpha[j] += 1;
            t.alpha[k] += 1;
            const double mult = (j == k) ? 1.0 : 2.0;
            t.coeff = cf_scale(mult, metric_entry(j, k));
            t.free_coeff = mult * mink(j, k);
            terms.push_back(std::move(t));
        }

    // Linear terms: -2 sum_k g^{jk} A_k per xi_j.
    if (has_a) {
        for (int j = 0; j < dim; ++j) {
            CoefficientFunction acc = CoefficientFunction::constant(0.0, dim);
            for (int k = 0; k < dim; ++k)
                acc = cf_sum(acc, cf_product(metric_entry(std::min(j, k), std::max(j, k)),
                                             vector_potential[k]));
            SymbolTerm t;
            t.alpha = MultiIndex(dim, 0);
            t.alpha[j] = 1;
            t.coeff = cf_scale(-2.0, acc);
            terms.push_back(std::move(t));
        }
    }

    // Constant term: sum g^{jk} A_j A_k + V.
    if (has_a || scalar_potential) {
        CoefficientFunction acc = CoefficientFunction::constant(0.0, dim);
        if (has_a)
            for (int j = 0; j < dim; ++j)
                for (int k = 0; k < dim; ++k)
                    acc = cf_sum(acc, cf_product(cf_product(metric_entry(std::min(j, k),
                                                                         std::max(j, k)),
                                                            vector_potential[j]),
                                                 vector_potential[k]));
        if (scalar_potential) acc = cf_sum(acc, *scalar_potential);
        SymbolTerm t;
        t.alpha = MultiIndex(dim, 0);
        t.coeff = std::move(acc);
        terms.push_back(std::move(t));
    }

    return Symbol(dim, 2, mu, std::move(terms), "klein-gordon");
}

Symbol make_polynomial(int dim, int order, double mu, std::vector<SymbolTerm> terms,
                       std::string description) {
    return Symbol(dim, order, mu, std::move(terms), std::move(description));
}

ValidationLattice ValidationLattice::defaults(int dim) {
    ValidationLattice lat;
    lat.x_radii = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    lat.x_directions = (dim == 1) ? 2 : (dim == 2 ? 16 : 26);
    lat.xi_directions = (dim == 1) ? 2 : (dim == 2 ? 32 : 48);
    return lat;
}

std::vector<Eigen::VectorXd> sphere_directions(int dim, int count) {
    std::vector<Eigen::VectorXd> dirs;
    if (dim == 1) {
        dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
        dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
        return dirs;
    }
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double th = 2.0 * M_PI * i / count;
            Eigen::VectorXd d(2);
            d << std::cos(th), std::sin(th);
            dirs.push_back(d);
        }
        return dirs;
    }
    if (dim == 3) {
        // Fibonacci sphere: near-uniform and fully deterministic.
        const double ga = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = ga * i;
            Eigen::VectorXd d(3);
            d << r * std::cos(th), r * std::sin(th), z;
            dirs.push_back(d);
        }
        return dirs;
    }
    // Higher dimension: deterministic low-discrepancy via a fixed hash mix.
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd d(dim);
        uint64_t s = 0x9e3779b97f4a7c15ULL * (i + 1);
        for (int j = 0; j < dim; ++j) {
            s ^= s >> 30;
            s *= 0xbf58476d1ce4e5b9ULL;
            s ^= s >> 27;
            const double u = static_cast<double>(s >> 11) * 0x1.0p-53;
            d[j] = 2.0 * u - 1.0;
        }
        if (d.norm() < 1e-9) d[0] = 1.0;
        dirs.push_back(d.normalized());
    }
    return dirs;
}

namespace {

// Central-difference hessian row fallback from an analytic gradient.
Eigen::MatrixXd fd_hessian(const CoefficientFunction& c, const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd h(n, n);
    for (int j = 0; j < n; ++j) {
        const double step = 1e-6 * std::sqrt(1.0 + x.squaredNorm());
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        h.col(j) = (c.gradient(xp) - c.gradient(xm)) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

Eigen::VectorXd fd_gradient_value(const CoefficientFunction& c, const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd g(n);
    const double scale = std::sqrt(1.0 + x.squaredNorm());
    for (int j = 0; j < n; ++j) {
        const double h = 1e-5 * scale;
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double d1 = (c.value(xp) - c.value(xm)) / (2.0 * h);
        xp[j] = x[j] + h / 2.0;
        xm[j] = x[j] - h / 2.0;
        const double d2 = (c.value(xp) - c.value(xm)) / h;
        g[j] = (4.0 * d2 - d1) / 3.0;
    }
    return g;
}

}  // namespace

ValidationReport validate(const Symbol& sym, const ValidationLattice& lattice) {
    ValidationReport rep;
    rep.lattice = lattice;
    const int n = sym.dim();
    const int m = sym.order();

    const auto xdirs = sphere_directions(n, lattice.x_directions);
    const auto xidirs = sphere_directions(n, lattice.xi_directions);

    std::vector<Eigen::VectorXd> xs;
    bool origin_done = false;
    for (double r : lattice.x_radii) {
        if (r == 0.0) {
            if (!origin_done) xs.push_back(Eigen::VectorXd::Zero(n));
            origin_done = true;
            continue;
        }
        for (const auto& d : xdirs) xs.push_back(r * d);
    }
    rep.x_samples = static_cast<int>(xs.size());
    rep.xi_samples = static_cast<int>(xidirs.size());

    const bool have_hess = sym.coefficients_have_hessians();
    rep.used_fd_hessian = !have_hess;

    // Decay constants and gradient consistency over the x-lattice.
    for (const auto& x : xs) {
        const double w = std::sqrt(1.0 + x.squaredNorm());
        for (const auto& t : sym.terms()) {
            const double v0 = std::abs(t.coeff.value(x) - t.free_coeff) * std::pow(w, sym.mu());
            rep.C_beta[0] = std::max(rep.C_beta[0], v0);
            if (t.coeff.has_gradient()) {
                const Eigen::VectorXd g = t.coeff.gradient(x);
                rep.C_beta[1] = std::max(rep.C_beta[1],
                                         g.lpNorm<Eigen::Infinity>() * std::pow(w, sym.mu() + 1.0));
                const Eigen::VectorXd gfd = fd_gradient_value(t.coeff, x);
                const double mismatch = (g - gfd).lpNorm<Eigen::Infinity>() /
                                        std::max(1.0, g.lpNorm<Eigen::Infinity>());
                rep.worst_grad_mismatch = std::max(rep.worst_grad_mismatch, mismatch);
                if (mismatch > 1e-6) rep.grad_consistent = false;
                const Eigen::MatrixXd h =
                    t.coeff.has_hessian() ? t.coeff.hessian(x) : fd_hessian(t.coeff, x);
                rep.C_beta[2] = std::max(rep.C_beta[2],
                                         h.cwiseAbs().maxCoeff() * std::pow(w, sym.mu() + 2.0));
            }
        }
    }

    // Non-degeneracy and C0 over the product lattice; xi restricted to the
    // unit sphere (both bounds are homogeneous in xi).
    double worstC = 0.0;
    for (const auto& x : xs) {
        const double xnorm = x.norm();
        for (const auto& d : xidirs) {
            PhasePoint pt{x, d};
            for (SymbolPart part : {SymbolPart::principal, SymbolPart::free_part}) {
                const double gn = sym.xi_grad(pt, part).norm();
                double& c = (part == SymbolPart::principal) ? rep.C_nondeg_principal
                                                            : rep.C_nondeg_free;
                if (gn <= 0.0) {
                    rep.accepted = false;
                    rep.rejection_reason = "vanishing xi-gradient on the unit sphere";
                    rep.witness = pt;
                    return rep;
                }
                c = std::max({c, gn, 1.0 / gn});
                if (c > worstC) {
                    worstC = c;
                    rep.witness = pt;
                }
            }
            if (xnorm > 0.0) {
                const double dx = sym.x_grad(pt, SymbolPart::principal).norm();
                rep.C0 = std::max(rep.C0, dx * std::pow(xnorm, 1.0 + sym.mu()));
            }
        }
    }
    (void)m;

    if (rep.C_nondeg_principal > lattice.nondegeneracy_cap ||
        rep.C_nondeg_free > lattice.nondegeneracy_cap) {
        rep.accepted = false;
        rep.rejection_reason = "non-degeneracy constant exceeds configured cap";
        return rep;
    }
    rep.accepted = rep.grad_consistent;
    if (!rep.grad_consistent) rep.rejection_reason = "coefficient gradient inconsistent with values";
    return rep;
}

}  // namespace hamesc
