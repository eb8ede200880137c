#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamesc/ode.hpp"
#include "hamesc/symbol.hpp"

namespace hamesc {

struct IntegratorOpts {
    double rtol = 1e-10;
    double atol = 1e-12;
    long max_steps = 2'000'000;
    // Positive value: integration halts (flagged, not an error) once |y|
    // reaches it. Zero disables; certification needs the full horizon.
    double escape_stop_radius = 0.0;
    SymbolPart part = SymbolPart::principal;
};

enum class FlowStatus { completed, stopped_at_radius, step_underflow, max_steps_exceeded };

class Trajectory {
  public:
    Trajectory(const Symbol* sym, PhasePoint seed, SymbolPart part, ode::Result result);

    const PhasePoint& seed() const { return seed_; }
    // The symbol must outlive the trajectory; integrate() callers own both.
    const Symbol& symbol() const { return *sym_; }
    SymbolPart part() const { return part_; }
    int dim() const { return dim_; }
    FlowStatus status() const { return status_; }
    bool completed() const { return status_ == FlowStatus::completed; }
    // +1 forward, -1 backward in t.
    int direction() const { return direction_; }
    double t_end() const { return t_end_; }

    const std::vector<double>& times() const { return times_; }
    const std::vector<Eigen::VectorXd>& states() const { return states_; }

    bool covers(double t) const { return dense_.covers(t); }
    PhasePoint at(double t) const;
    Eigen::VectorXd position_at(double t) const;
    Eigen::VectorXd momentum_at(double t) const;

    // Value of p_m at the seed and the worst relative drift over the
    // accepted nodes, |p_m(y,eta) - p_m(seed)| / max(1, |p_m(seed)|).
    double pm_seed() const { return pm_seed_; }
    double drift() const { return drift_; }
    double drift_at_node(std::size_t i) const;

    long accepted() const { return accepted_; }
    long rejected() const { return rejected_; }

  private:
    const Symbol* sym_;
    PhasePoint seed_;
    SymbolPart part_;
    int dim_;
    int direction_;
    FlowStatus status_;
    double t_end_;
    std::vector<double> times_;
    std::vector<Eigen::VectorXd> states_;
    ode::DenseSolution dense_;
    double pm_seed_ = 0.0;
    double drift_ = 0.0;
    std::vector<double> node_drift_;
    long accepted_ = 0;
    long rejected_ = 0;
};

// Hamilton flow dy/dt = d_xi p, d eta/dt = -d_x p of the requested symbol
// part, integrated from t = 0 to t_end (either sign).
Trajectory integrate(const Symbol& sym, const PhasePoint& seed, double t_end,
                     const IntegratorOpts& opts = {});

// max-norm mismatch between the flow of (x, lambda*xi) at time t and the
// lambda-rescaled flow of (x, xi) at time lambda^{m-1} t; both from
// independent integrations. Zero for lambda = 1 by construction.
double scaling_residual(const Symbol& sym, const PhasePoint& seed, double lambda, double t,
                        const IntegratorOpts& opts = {});

struct CharSample {
    std::vector<PhasePoint> points;  // |xi| = 1, |p_m| <= tol_char
    bool elliptic_flag = false;      // no sign change found anywhere
    long discarded = 0;              // probe circles without a sign change
    double tol_char = 1e-10;
};

// Draws x uniformly in [lo, hi], scans random great circles in xi for sign
// changes of p_m, and bisects each bracket down to machine width in the
// circle parameter. Returns up to `count` certified null points.
CharSample sample_characteristic(const Symbol& sym, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi, int count, std::uint64_t rng_seed,
                                 double tol_char = 1e-10);

}  // namespace hamesc
