#pragma once

#include <cstdint>

#include "hamesc/flow.hpp"
#include "hamesc/symbol.hpp"

namespace hamesc {

struct TransportParams {
    double delta1 = 1.0;   // position tube half-width per unit <t>
    double delta2 = 0.1;   // momentum tube half-width cap
    double C1 = 0.0;       // shrink rate of the momentum tube
    double T00 = 1.0;      // checks start here
    double mu = 1.0;       // decay rate entering gamma(t)

    // Recorded, not enforced: the construction wants |eta_plus| > 4 delta1;
    // small reference momenta violate it without breaking any check here.
    bool eta_margin_ok = true;

    double gamma_t(double t) const;
    // delta1 >= 10 delta2, positive widths, gamma positive on [T00, t_hi].
    void check(double t_hi) const;
};

// Moving phase-space bump centered on the trajectory:
//   psi0 = Psi(|x - y(t)| / (delta1 <t>)) Psi(|xi - eta(t)| / gamma(t)).
// Domain error if the trajectory does not cover t or gamma(t) <= 0.
double transport_psi0(const Trajectory& traj, const TransportParams& tp, double t,
                      const PhasePoint& pt);

// d psi0/dt + {p_m, psi0} split into the two product terms:
//   total = a0 Psi'(u) Psi(w) + a1 Psi(u) Psi'(w).
struct TransportSourceTerms {
    double a0 = 0.0, a1 = 0.0;          // advective coefficients
    double psi_u = 0.0, psi_w = 0.0;    // bump factors
    double dpsi_u = 0.0, dpsi_w = 0.0;  // their derivatives at u, w
    double total() const { return a0 * dpsi_u * psi_w + a1 * psi_u * dpsi_w; }
};

TransportSourceTerms transport_source_closed_form(const Symbol& sym, const Trajectory& traj,
                                                  const TransportParams& tp, double t,
                                                  const PhasePoint& pt);

// Same quantity by finite differences only (time derivative through the
// dense output, bracket via the FD oracle); the independent route.
double transport_source_fd(const Symbol& sym, const Trajectory& traj, const TransportParams& tp,
                           double t, const PhasePoint& pt);

struct TransportReport {
    bool pass = false;
    double min_value = 0.0;
    double witness_t = 0.0;
    PhasePoint witness;
    long points = 0;
    double tol = 0.0;
    TransportParams params;
    int tuning_rounds = 0;  // nonzero when auto-tuning had to adjust C1/T00
};

struct TransportCheckOpts {
    long grid_points = 10'000;
    double t_hi = 20.0;
    double tol = 1e-9;
    std::uint64_t rng_seed = 0;
    int jobs = 0;
};

// Sweeps d psi0/dt + {p_m, psi0} (FD route) over a randomized grid that
// concentrates where either bump derivative is active; passes iff the
// minimum stays above -tol.
TransportReport verify_transport_inequality(const Symbol& sym, const Trajectory& traj,
                                            const TransportParams& tp,
                                            const TransportCheckOpts& opts = {});

// Picks T00 and C1 for a perturbed symbol: T00 doubles until the coefficient
// mismatch along the tube is small, C1 from the required shrink rate with a
// doubling fallback driven by coarse sweeps.
TransportParams auto_tune_transport(const Symbol& sym, const Trajectory& traj,
                                    TransportParams base, const TransportCheckOpts& opts,
                                    int* rounds = nullptr);

// psi(0, pt): terminal bump at T00 + 1 pulled back along the characteristic
// through pt, minus the ramped source integral. Equals 1 at the trajectory
// seed by construction.
double backward_transport_value(const Symbol& sym, const Trajectory& traj,
                                const TransportParams& tp, const PhasePoint& pt,
                                const IntegratorOpts& flow_opts = {});

// (t, x, xi) -> psi(t/h, x, h^{1/(m-1)} xi). Wraps any evaluator; h in (0, 1].
class RescaledTransport {
  public:
    RescaledTransport(std::function<double(double, const PhasePoint&)> base, double h, int order);
    double operator()(double t, const PhasePoint& pt) const;
    double h() const { return h_; }
    double xi_scale() const { return xi_scale_; }

  private:
    std::function<double(double, const PhasePoint&)> base_;
    double h_;
    double xi_scale_;
};

}  // namespace hamesc
