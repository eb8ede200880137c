#pragma once

#include <cstdint>
#include <vector>

#include "hamesc/fd.hpp"
#include "hamesc/symbol.hpp"

namespace hamesc {

// Directional splitting of eta = xhat . vhat into incoming / middle /
// outgoing pieces; the three sum to 1 everywhere.
double rho_plus(double t, double delta);   // 1 once t >= delta + 1/8
double rho_minus(double t, double delta);  // 1 once t <= delta - 1
double rho_zero(double t, double delta);
double rho_plus_deriv(double t, double delta);
double rho_minus_deriv(double t, double delta);

// Complementary radial/momentum cutoffs: chi is 1 inside, chibar outside,
// and the two sum to 1 by construction.
struct CutoffPair {
    double M = 4.0;
    double nu = 1.0;
    double chi_x(double r) const;       // 1 for r <= M, 0 for r >= 2M
    double chibar_x(double r) const;    // the complement
    double chibar_x_deriv(double r) const;
    double chibar_xi(double r) const;   // 1 for r >= 2 nu, 0 for r <= nu
    // Membership in the two transition regions the bound check must avoid
    // (f1/f2 live there): omega1 = {M <= |x| <= 2M, |xi| >= nu},
    // omega2 = {|x| >= M, nu <= |xi| <= 2 nu}.
    bool in_omega1(const PhasePoint& pt) const;
    bool in_omega2(const PhasePoint& pt) const;
};

struct EscapeWeightParams {
    double delta = 0.6;   // in (1/2, 7/8)
    double gamma = 0.2;   // in (0, min(1/4, mu/2))
    double k = 0.0;       // momentum weight exponent in <xi>^{2k}
    double M = 4.0;       // radial cutoff scale, at least 1
    double nu = 1.0;      // momentum cutoff scale

    CutoffPair cutoffs() const { return CutoffPair{M, nu}; }
    void check(double mu) const;  // throws std::domain_error on a bad range
};

// min(7/8 - delta, delta, 1 - (delta-1)^2, 1 - (delta+1/8)^2); positive on
// the admissible interval, degenerating at the right endpoint.
double delta3(double delta);
double delta4(const EscapeWeightParams& p);  // delta3 * gamma

// eta(x, xi) = xhat . vhat with v = d_xi p0. Domain error at x = 0 or v = 0.
double eta_coord(const Symbol& sym, const PhasePoint& pt);

// b^delta without cutoffs: (rho_- |x|^g + rho_0 + rho_+ |x|^-g) e^{-g eta}.
double weight_b_plain(const Symbol& sym, const EscapeWeightParams& p, const PhasePoint& pt);

// b^delta_{M,nu}: the cutoffs short-circuit, so the origin is safe.
double weight_b(const Symbol& sym, const EscapeWeightParams& p, const PhasePoint& pt);

// The expanded {p0, b_{M,nu}} = v . d_x b_{M,nu}, term by term:
//   a_term: the (1 - eta^2) directional-derivative piece,
//   b_term: the radial gamma |x|^{+-gamma} piece,
//   r0:     the chibar' cutoff-derivative piece.
// a_term + b_term <= -delta3 gamma (|v|/|x|) b_{M,nu} is the sign property.
struct WeightBracketTerms {
    double a_term = 0.0;
    double b_term = 0.0;
    double r0 = 0.0;
    double total() const { return a_term + b_term + r0; }
};

WeightBracketTerms bracket_p0_b_closed_form(const Symbol& sym, const EscapeWeightParams& p,
                                            const PhasePoint& pt);

struct BoundReport {
    bool pass = false;
    double worst_margin = 0.0;  // min of -{p, F} - delta4 (|v|/|x|) F, F = <xi>^2k b^2
    PhasePoint witness;
    long points_checked = 0;
    long points_trivial = 0;  // sampled where the weight vanishes identically

    double c_prime = 0.0;      // sampled decay constant of the q-bracket
    double smallness_lhs = 0.0;  // 2 c' M^{-(mu - 2 gamma)}
    double smallness_rhs = 0.0;  // delta3 * gamma
    bool smallness_ok = false;
    int doublings = 0;         // times M was doubled to reach smallness
    double M_final = 0.0;

    double delta3_value = 0.0;
    double delta4_value = 0.0;
    double tol = 0.0;

    // Per-point margins in sample order; filled only when requested (plot
    // data), empty otherwise.
    std::vector<double> margins;
};

// Margin of the weighted lower bound at one point, bracket by FD oracle.
double weight_bound_margin(const Symbol& sym, const EscapeWeightParams& p, const PhasePoint& pt,
                           const FdOptions& fd = {});

// Checks the margin on a caller-supplied sample (no resampling, no doubling).
BoundReport verify_weight_bound(const Symbol& sym, const EscapeWeightParams& p,
                                const std::vector<PhasePoint>& sample, double tol = 1e-8);

struct WeightBoundOpts {
    long points = 10'000;
    double tol = 1e-8;
    std::uint64_t rng_seed = 0;
    int max_doublings = 12;
    long cprime_samples = 512;
    int jobs = 0;
    bool keep_margins = false;  // retain per-point margins in the report
};

// Estimates the q-perturbation constant, doubles M until the smallness
// condition 2 c' M^{-(mu-2gamma)} <= delta3 gamma holds, then samples the
// complement of omega1 and omega2 and checks the margin everywhere.
BoundReport verify_weight_bound_auto(const Symbol& sym, EscapeWeightParams p,
                                     const WeightBoundOpts& opts = {});

}  // namespace hamesc
