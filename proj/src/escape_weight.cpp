#include "hamesc/escape_weight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hamesc/parallel.hpp"
#include "hamesc/rng.hpp"
#include "hamesc/smooth_step.hpp"

namespace hamesc {

double rho_plus(double t, double delta) { return smooth_step(t - delta); }
double rho_minus(double t, double delta) { return 1.0 - smooth_step(t + 1.0 - delta); }
double rho_zero(double t, double delta) {
    return 1.0 - rho_plus(t, delta) - rho_minus(t, delta);
}
double rho_plus_deriv(double t, double delta) { return smooth_step_deriv(t - delta); }
double rho_minus_deriv(double t, double delta) { return -smooth_step_deriv(t + 1.0 - delta); }

double CutoffPair::chi_x(double r) const { return chi_cut(r / M); }
double CutoffPair::chibar_x(double r) const { return chibar_cut(r / M); }
double CutoffPair::chibar_x_deriv(double r) const { return chibar_cut_deriv(r / M) / M; }
double CutoffPair::chibar_xi(double r) const { return chibar_cut(r / nu); }

bool CutoffPair::in_omega1(const PhasePoint& pt) const {
    const double r = pt.x.norm();
    return r >= M && r <= 2.0 * M && pt.xi.norm() >= nu;
}

bool CutoffPair::in_omega2(const PhasePoint& pt) const {
    const double r = pt.xi.norm();
    return pt.x.norm() >= M && r >= nu && r <= 2.0 * nu;
}

void EscapeWeightParams::check(double mu) const {
    if (!(delta > 0.5 && delta < 0.875))
        throw std::domain_error("weight params: delta must lie in (1/2, 7/8)");
    const double cap = std::min(0.25, 0.5 * mu);
    if (!(gamma > 0.0 && gamma < cap))
        throw std::domain_error("weight params: gamma must lie in (0, min(1/4, mu/2))");
    if (!(M >= 1.0)) throw std::domain_error("weight params: M must be at least 1");
    if (!(nu > 0.0)) throw std::domain_error("weight params: nu must be positive");
}

double delta3(double delta) {
    if (!(delta > 0.5 && delta < 0.875))
        throw std::domain_error("delta3: delta must lie in (1/2, 7/8)");
    const double a = 0.875 - delta;
    const double b = delta;
    const double c = 1.0 - (delta - 1.0) * (delta - 1.0);
    const double d = 1.0 - (delta + 0.125) * (delta + 0.125);
    return std::min(std::min(a, b), std::min(c, d));
}

double delta4(const EscapeWeightParams& p) { return delta3(p.delta) * p.gamma; }

double eta_coord(const Symbol& sym, const PhasePoint& pt) {
    const double r = pt.x.norm();
    if (r == 0.0) throw std::domain_error("eta_coord: undefined at x = 0");
    const Eigen::VectorXd v = sym.xi_grad(pt, SymbolPart::free_part);
    const double vn = v.norm();
    if (vn == 0.0) throw std::domain_error("eta_coord: free velocity vanishes");
    return pt.x.dot(v) / (r * vn);
}

double weight_b_plain(const Symbol& sym, const EscapeWeightParams& p, const PhasePoint& pt) {
    const double eta = eta_coord(sym, pt);
    const double s = pt.x.norm();
    const double g =
        rho_minus(eta, p.delta) * std::pow(s, p.gamma) + rho_zero(eta, p.delta) +
        rho_plus(eta, p.delta) * std::pow(s, -p.gamma);
    return g * std::exp(-p.gamma * eta);
}

double weight_b(const Symbol& sym, const EscapeWeightParams& p, const PhasePoint& pt) {
    const CutoffPair cut = p.cutoffs();
    const double cx = cut.chibar_x(pt.x.norm());
    if (cx == 0.0) return 0.0;  // keeps the |x| -> 0 singularity unreachable
    const double cxi = cut.chibar_xi(pt.xi.norm());
    if (cxi == 0.0) return 0.0;
    return weight_b_plain(sym, p, pt) * cx * cxi;
}

WeightBracketTerms bracket_p0_b_closed_form(const Symbol& sym, const EscapeWeightParams& p,
                                            const PhasePoint& pt) {
    const CutoffPair cut = p.cutoffs();
    const double s = pt.x.norm();
    const double cx = cut.chibar_x(s);
    const double cxi = cut.chibar_xi(pt.xi.norm());
    if ((cx == 0.0 && cut.chibar_x_deriv(s) == 0.0) || cxi == 0.0) return {};

    const Eigen::VectorXd v = sym.xi_grad(pt, SymbolPart::free_part);
    const double vn = v.norm();
    const double eta = pt.x.dot(v) / (s * vn);
    const double e = std::exp(-p.gamma * eta);
    const double sg = std::pow(s, p.gamma), smg = std::pow(s, -p.gamma);

    const double rm = rho_minus(eta, p.delta), r0v = rho_zero(eta, p.delta),
                 rp = rho_plus(eta, p.delta);
    const double rmd = rho_minus_deriv(eta, p.delta), rpd = rho_plus_deriv(eta, p.delta);
    const double b_plain = (rm * sg + r0v + rp * smg) * e;

    WeightBracketTerms out;
    out.a_term = (vn / s) * (1.0 - eta * eta) *
                 (rmd * (sg - 1.0) + rpd * (smg - 1.0) - p.gamma * (rm * sg + r0v + rp * smg)) *
                 e * cx * cxi;
    out.b_term = p.gamma * (vn / s) * eta * (rm * sg - rp * smg) * e * cx * cxi;
    out.r0 = vn * eta * b_plain * cut.chibar_x_deriv(s) * cxi;
    return out;
}

namespace {

// <xi>^{2k} b^2, the quantity whose bracket the sign bound controls.
double weighted_square(const Symbol& sym, const EscapeWeightParams& p, const PhasePoint& pt) {
    const double b = weight_b(sym, p, pt);
    if (b == 0.0) return 0.0;
    const double japxi2 = 1.0 + pt.xi.squaredNorm();
    return std::pow(japxi2, p.k) * b * b;
}

}  // namespace

double weight_bound_margin(const Symbol& sym, const EscapeWeightParams& p, const PhasePoint& pt,
                           const FdOptions& fd) {
    PhaseFunction full = symbol_fn(sym, SymbolPart::full);
    PhaseFunction F = [&sym, &p](const PhasePoint& q) { return weighted_square(sym, p, q); };
    const double bracket = poisson_bracket_fd(full, F, pt, fd);
    const double Fv = weighted_square(sym, p, pt);
    double weighted = 0.0;
    if (Fv > 0.0) {
        const double vn = sym.xi_grad(pt, SymbolPart::free_part).norm();
        weighted = delta4(p) * (vn / pt.x.norm()) * Fv;
    }
    return -bracket - weighted;
}

BoundReport verify_weight_bound(const Symbol& sym, const EscapeWeightParams& p,
                                const std::vector<PhasePoint>& sample, double tol) {
    if (sample.empty()) throw std::invalid_argument("verify_weight_bound: empty sample");
    p.check(sym.mu());

    BoundReport rep;
    rep.tol = tol;
    rep.delta3_value = delta3(p.delta);
    rep.delta4_value = delta4(p);
    rep.M_final = p.M;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& pt : sample) {
        const double m = weight_bound_margin(sym, p, pt);
        ++rep.points_checked;
        if (weighted_square(sym, p, pt) == 0.0) ++rep.points_trivial;
        if (m < rep.worst_margin) {
            rep.worst_margin = m;
            rep.witness = pt;
        }
    }
    rep.pass = rep.worst_margin >= -tol;
    return rep;
}

namespace {

double estimate_cprime(const Symbol& sym, const EscapeWeightParams& p, std::uint64_t rng_seed,
                       long samples) {
    CounterRng rng = CounterRng(rng_seed).substream(0x71627261ull);
    PhaseFunction q_fn = [&sym](const PhasePoint& pt) {
        return sym.eval(pt, SymbolPart::full) - sym.eval(pt, SymbolPart::free_part);
    };
    PhaseFunction F = [&sym, &p](const PhasePoint& pt) { return weighted_square(sym, p, pt); };

    double cp = 0.0;
    const double expo = sym.mu() - 2.0 * p.gamma;
    for (long i = 0; i < samples; ++i) {
        const double r = rng.uniform(2.0 * p.M * 1.001, 8.0 * p.M);
        const double rho = rng.uniform(2.0 * p.nu * 1.001, 8.0 * p.nu);
        PhasePoint pt{r * rng.unit_vector(sym.dim()), rho * rng.unit_vector(sym.dim())};
        const double Fv = F(pt);
        if (Fv <= 0.0) continue;
        const double vn = sym.xi_grad(pt, SymbolPart::free_part).norm();
        const double bracket = poisson_bracket_fd(q_fn, F, pt);
        const double ratio = std::abs(bracket) * r / (vn * Fv);
        cp = std::max(cp, ratio * std::pow(r, expo));
    }
    return cp;
}

}  // namespace

BoundReport verify_weight_bound_auto(const Symbol& sym, EscapeWeightParams p,
                                     const WeightBoundOpts& opts) {
    p.check(sym.mu());
    const double d3 = delta3(p.delta);
    const double rhs = d3 * p.gamma;
    const double expo = sym.mu() - 2.0 * p.gamma;
    if (expo <= 0.0)
        throw std::domain_error("verify_weight_bound_auto: mu - 2 gamma must be positive");

    int doublings = 0;
    double cp = estimate_cprime(sym, p, opts.rng_seed, opts.cprime_samples);
    while (2.0 * cp * std::pow(p.M, -expo) > rhs && doublings < opts.max_doublings) {
        p.M *= 2.0;
        ++doublings;
        cp = estimate_cprime(sym, p, opts.rng_seed, opts.cprime_samples);
    }

    // Sample the complement of omega1 and omega2: mostly the live region
    // beyond both cutoffs, with a fraction inside the dead zone where the
    // weight vanishes identically.
    CounterRng base(CounterRng(opts.rng_seed).substream(0x77626f756e64ull).next_u64());
    std::vector<PhasePoint> pts(opts.points);
    std::vector<double> margins(opts.points);
    const CutoffPair cut = p.cutoffs();
    parallel_for(opts.points, opts.jobs, [&](long i) {
        CounterRng rng = base.substream(static_cast<std::uint64_t>(i));
        PhasePoint pt;
        for (int tries = 0; tries < 100; ++tries) {
            double r, rho;
            if (rng.next_double() < 0.8) {
                r = rng.uniform(2.0 * p.M * 1.001, 10.0 * p.M);
                rho = rng.uniform(2.0 * p.nu * 1.001, 8.0 * p.nu);
            } else {
                r = rng.uniform(0.2 * p.M, 0.95 * p.M);
                rho = rng.uniform(0.5 * p.nu, 4.0 * p.nu);
            }
            pt = PhasePoint{r * rng.unit_vector(sym.dim()), rho * rng.unit_vector(sym.dim())};
            if (!cut.in_omega1(pt) && !cut.in_omega2(pt)) break;
        }
        pts[i] = pt;
        margins[i] = weight_bound_margin(sym, p, pt);
    });

    BoundReport rep;
    rep.tol = opts.tol;
    rep.delta3_value = d3;
    rep.delta4_value = rhs;
    rep.c_prime = cp;
    rep.smallness_lhs = 2.0 * cp * std::pow(p.M, -expo);
    rep.smallness_rhs = rhs;
    rep.smallness_ok = rep.smallness_lhs <= rhs;
    rep.doublings = doublings;
    rep.M_final = p.M;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (long i = 0; i < opts.points; ++i) {
        ++rep.points_checked;
        if (weighted_square(sym, p, pts[i]) == 0.0) ++rep.points_trivial;
        if (margins[i] < rep.worst_margin) {
            rep.worst_margin = margins[i];
            rep.witness = pts[i];
        }
    }
    rep.pass = rep.smallness_ok && rep.worst_margin >= -opts.tol;
    if (opts.keep_margins) rep.margins = std::move(margins);
    return rep;
}

}  // namespace hamesc
