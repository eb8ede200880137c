#include "hamesc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hamesc/fd.hpp"
#include "hamesc/parallel.hpp"
#include "hamesc/quadrature.hpp"
#include "hamesc/rng.hpp"
#include "hamesc/smooth_step.hpp"

namespace hamesc {

namespace {

double bracket_t(double t) { return std::sqrt(1.0 + t * t); }

}  // namespace

double TransportParams::gamma_t(double t) const {
    return delta2 - C1 * std::pow(1.0 + t * t, -0.5 * mu);
}

void TransportParams::check(double t_hi) const {
    if (!(delta1 > 0.0) || !(delta2 > 0.0)) throw std::domain_error("tube widths must be positive");
    if (!(C1 >= 0.0)) throw std::domain_error("C1 must be nonnegative");
    if (!(mu > 0.0)) throw std::domain_error("mu must be positive");
    if (!(T00 > 0.0)) throw std::domain_error("T00 must be positive");
    if (!(t_hi >= T00)) throw std::domain_error("check horizon ends before T00");
    // The position term must dominate the momentum tube width; see the sign
    // budget in verify_transport_inequality.
    if (delta1 < 10.0 * delta2) throw std::domain_error("delta1 must be at least 10 * delta2");
    // gamma is nondecreasing in t, so positivity at T00 covers [T00, inf).
    if (!(gamma_t(T00) > 0.0)) throw std::domain_error("momentum tube closes: gamma(T00) <= 0");
}

double transport_psi0(const Trajectory& traj, const TransportParams& tp, double t,
                      const PhasePoint& pt) {
    if (!traj.covers(t)) throw std::domain_error("transport_psi0: t outside trajectory range");
    const double gamma = tp.gamma_t(t);
    if (!(gamma > 0.0)) throw std::domain_error("transport_psi0: gamma(t) <= 0");
    const PhasePoint c = traj.at(t);
    const double u = (pt.x - c.x).norm() / (tp.delta1 * bracket_t(t));
    const double w = (pt.xi - c.xi).norm() / gamma;
    return bump_profile(u) * bump_profile(w);
}

TransportSourceTerms transport_source_closed_form(const Symbol& sym, const Trajectory& traj,
                                                  const TransportParams& tp, double t,
                                                  const PhasePoint& pt) {
    if (!traj.covers(t)) throw std::domain_error("transport source: t outside trajectory range");
    const double gamma = tp.gamma_t(t);
    if (!(gamma > 0.0)) throw std::domain_error("transport source: gamma(t) <= 0");

    const PhasePoint c = traj.at(t);
    const double bt = bracket_t(t);
    const double rx = (pt.x - c.x).norm();
    const double rxi = (pt.xi - c.xi).norm();

    TransportSourceTerms out;
    const double u = rx / (tp.delta1 * bt);
    const double w = rxi / gamma;
    out.psi_u = bump_profile(u);
    out.psi_w = bump_profile(w);
    out.dpsi_u = bump_profile_deriv(u);
    out.dpsi_w = bump_profile_deriv(w);

    // a0 multiplies Psi'(u), which vanishes unless 1/2 < u < 1, so the radial
    // direction is well defined whenever the coefficient matters.
    if (rx > 0.0) {
        const Eigen::VectorXd n = (pt.x - c.x) / rx;
        const Eigen::VectorXd L =
            sym.xi_grad(pt, SymbolPart::principal) - sym.xi_grad(c, SymbolPart::principal);
        out.a0 = (L.dot(n) - rx * t / (bt * bt)) / (tp.delta1 * bt);
    }
    if (rxi > 0.0) {
        const Eigen::VectorXd m = (pt.xi - c.xi) / rxi;
        const Eigen::VectorXd D =
            sym.x_grad(c, SymbolPart::principal) - sym.x_grad(pt, SymbolPart::principal);
        const double gamma_dot = tp.C1 * tp.mu * t * std::pow(1.0 + t * t, -0.5 * (tp.mu + 2.0));
        out.a1 = (D.dot(m) - gamma_dot * w) / gamma;
    }
    return out;
}

double transport_source_fd(const Symbol& sym, const Trajectory& traj, const TransportParams& tp,
                           double t, const PhasePoint& pt) {
    const double gamma = tp.gamma_t(t);
    if (!(gamma > 0.0)) throw std::domain_error("transport source: gamma(t) <= 0");

    // Steps tied to the bump feature scales; the absolute coordinates can be
    // large while the bump varies on the tube width.
    FdOptions time_opt;
    time_opt.step = 8e-5 * std::min(1.0, gamma);
    const double dt_part = scalar_derivative_fd(
        [&](double s) { return transport_psi0(traj, tp, s, pt); }, t, time_opt);

    FdOptions space_opt;
    space_opt.step_x = 8e-5 * tp.delta1 * bracket_t(t);
    space_opt.step_xi = 8e-5 * gamma;
    const double bracket = poisson_bracket_fd(
        symbol_fn(sym, SymbolPart::principal),
        [&](const PhasePoint& q) { return transport_psi0(traj, tp, t, q); }, pt, space_opt);

    return dt_part + bracket;
}

TransportReport verify_transport_inequality(const Symbol& sym, const Trajectory& traj,
                                            const TransportParams& tp,
                                            const TransportCheckOpts& opts) {
    tp.check(opts.t_hi);
    if (opts.grid_points <= 0) throw std::domain_error("grid_points must be positive");
    if (!(opts.tol > 0.0)) throw std::domain_error("tolerance must be positive");
    // The time derivative probes slightly past t_hi.
    if (!traj.covers(opts.t_hi + 1e-3))
        throw std::domain_error("trajectory too short for the requested horizon");

    const int n = sym.dim();
    const long count = opts.grid_points;
    std::vector<double> values(static_cast<std::size_t>(count));
    std::vector<double> ts(static_cast<std::size_t>(count));
    std::vector<PhasePoint> pts(static_cast<std::size_t>(count));
    const CounterRng base(opts.rng_seed);

    parallel_for(count, opts.jobs, [&](long i) {
        CounterRng rng = base.substream(0x7472u * 65536u + static_cast<std::uint64_t>(i));
        const double t = rng.uniform(tp.T00, opts.t_hi);
        // Alternate which bump shell the point lands in; the interesting
        // region is where one of the Psi' factors is active.
        double u, w;
        if (i % 2 == 0) {
            u = rng.uniform(0.4, 1.1);
            w = rng.uniform(0.0, 1.1);
        } else {
            u = rng.uniform(0.0, 1.1);
            w = rng.uniform(0.4, 1.1);
        }
        const PhasePoint c = traj.at(t);
        PhasePoint pt;
        pt.x = c.x + u * tp.delta1 * bracket_t(t) * rng.unit_vector(n);
        pt.xi = c.xi + w * tp.gamma_t(t) * rng.unit_vector(n);
        values[static_cast<std::size_t>(i)] = transport_source_fd(sym, traj, tp, t, pt);
        ts[static_cast<std::size_t>(i)] = t;
        pts[static_cast<std::size_t>(i)] = pt;
    });

    TransportReport rep;
    rep.params = tp;
    rep.points = count;
    rep.tol = opts.tol;
    rep.min_value = std::numeric_limits<double>::infinity();
    for (long i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (values[k] < rep.min_value) {
            rep.min_value = values[k];
            rep.witness_t = ts[k];
            rep.witness = pts[k];
        }
    }
    rep.pass = rep.min_value >= -opts.tol;
    return rep;
}

TransportParams auto_tune_transport(const Symbol& sym, const Trajectory& traj,
                                    TransportParams base, const TransportCheckOpts& opts,
                                    int* rounds) {
    TransportParams tp = base;
    const CounterRng seed_rng(opts.rng_seed ^ 0xC1C1C1C1ull);
    constexpr int kMaxRounds = 16;
    constexpr int kTimeProbes = 48;
    constexpr int kTubeProbes = 64;

    for (int round = 0; round < kMaxRounds; ++round) {
        if (!traj.covers(opts.t_hi) || tp.T00 >= opts.t_hi)
            throw std::runtime_error("transport tuning ran past the trajectory horizon");

        // Worst shrink rate the momentum tube needs so that the coefficient
        // mismatch along the tube is absorbed: gamma'(t)/2 >= est(t).
        double c1_req = 0.0;
        for (int k = 0; k < kTimeProbes; ++k) {
            const double t =
                tp.T00 + (opts.t_hi - tp.T00) * static_cast<double>(k) / (kTimeProbes - 1);
            const PhasePoint c = traj.at(t);
            const Eigen::VectorXd g_center = sym.x_grad(c, SymbolPart::principal);
            CounterRng rng = seed_rng.substream(static_cast<std::uint64_t>(round) * 1024u +
                                                static_cast<std::uint64_t>(k));
            double est = 0.0;
            for (int j = 0; j < kTubeProbes; ++j) {
                PhasePoint q;
                q.x = c.x + rng.uniform(0.0, 1.0) * tp.delta1 * bracket_t(t) *
                                rng.unit_vector(sym.dim());
                q.xi = c.xi + rng.uniform(0.0, 1.0) * tp.delta2 * rng.unit_vector(sym.dim());
                est = std::max(est,
                               (g_center - sym.x_grad(q, SymbolPart::principal)).norm());
            }
            c1_req = std::max(c1_req, 2.0 * est * std::pow(1.0 + t * t, 0.5 * (tp.mu + 2.0)) /
                                          (tp.mu * t));
        }

        // Keep gamma >= delta2/2 on [T00, inf): C1 <= delta2 <T00>^mu / 2.
        const double budget = 0.5 * tp.delta2 * std::pow(1.0 + tp.T00 * tp.T00, 0.5 * tp.mu);
        if (2.0 * c1_req <= budget) {
            tp.C1 = 2.0 * c1_req;
            if (rounds) *rounds = round;
            tp.check(opts.t_hi);
            return tp;
        }
        tp.T00 *= 2.0;
    }
    throw std::runtime_error("transport tuning did not converge; coefficients decay too slowly");
}

double backward_transport_value(const Symbol& sym, const Trajectory& traj,
                                const TransportParams& tp, const PhasePoint& pt,
                                const IntegratorOpts& flow_opts) {
    const double t1 = tp.T00 + 1.0;
    tp.check(t1);
    if (!traj.covers(t1)) throw std::domain_error("reference trajectory too short");

    IntegratorOpts io = flow_opts;
    io.part = traj.part();
    io.escape_stop_radius = 0.0;
    const Trajectory q = integrate(sym, pt, t1, io);
    if (!q.completed()) throw std::runtime_error("query characteristic did not complete");

    const double terminal = transport_psi0(traj, tp, t1, q.at(t1));
    // Ramped source integral; the ramp switches the transported terminal bump
    // over to the time-frozen one across [T00, T00 + 1].
    const double integral =
        GaussLegendre64::instance().integrate(tp.T00, t1, [&](double s) {
            const double ramp = smooth_step((s - tp.T00) / 8.0);
            if (ramp == 0.0) return 0.0;
            return ramp * transport_source_closed_form(sym, traj, tp, s, q.at(s)).total();
        });
    return terminal - integral;
}

RescaledTransport::RescaledTransport(std::function<double(double, const PhasePoint&)> base,
                                     double h, int order)
    : base_(std::move(base)), h_(h) {
    if (!(h > 0.0) || h > 1.0) throw std::domain_error("h must lie in (0, 1]");
    if (order < 2) throw std::domain_error("order must be at least 2");
    xi_scale_ = std::pow(h, 1.0 / (order - 1));
}

double RescaledTransport::operator()(double t, const PhasePoint& pt) const {
    PhasePoint q;
    q.x = pt.x;
    q.xi = xi_scale_ * pt.xi;
    return base_(t / h_, q);
}

}  // namespace hamesc
