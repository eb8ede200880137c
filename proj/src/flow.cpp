#include "hamesc/flow.hpp"

#include <cmath>
#include <stdexcept>

#include "hamesc/rng.hpp"

namespace hamesc {

namespace {

FlowStatus map_status(ode::Status s) {
    switch (s) {
        case ode::Status::completed: return FlowStatus::completed;
        case ode::Status::stopped_at_radius: return FlowStatus::stopped_at_radius;
        case ode::Status::step_underflow: return FlowStatus::step_underflow;
        case ode::Status::max_steps_exceeded: return FlowStatus::max_steps_exceeded;
    }
    throw std::logic_error("unreachable");
}

PhasePoint split_state(const Eigen::VectorXd& z, int n) {
    return PhasePoint{z.head(n), z.tail(n)};
}

}  // namespace

Trajectory::Trajectory(const Symbol* sym, PhasePoint seed, SymbolPart part, ode::Result result)
    : sym_(sym),
      seed_(std::move(seed)),
      part_(part),
      dim_(static_cast<int>(seed_.x.size())),
      direction_(result.t_final >= 0.0 ? 1 : -1),
      status_(map_status(result.status)),
      t_end_(result.t_final),
      times_(std::move(result.t_nodes)),
      states_(std::move(result.y_nodes)),
      dense_(std::move(result.dense)),
      accepted_(result.accepted),
      rejected_(result.rejected) {
    pm_seed_ = sym->eval(seed_, part);
    const double scale = std::max(1.0, std::abs(pm_seed_));
    node_drift_.reserve(states_.size());
    for (const auto& z : states_) {
        const double d = std::abs(sym->eval(split_state(z, dim_), part) - pm_seed_) / scale;
        node_drift_.push_back(d);
        drift_ = std::max(drift_, d);
    }
}

PhasePoint Trajectory::at(double t) const {
    if (t == 0.0 && !times_.empty()) return seed_;
    return split_state(dense_.eval(t), dim_);
}

Eigen::VectorXd Trajectory::position_at(double t) const { return at(t).x; }
Eigen::VectorXd Trajectory::momentum_at(double t) const { return at(t).xi; }

double Trajectory::drift_at_node(std::size_t i) const {
    if (i >= node_drift_.size()) throw std::out_of_range("drift_at_node");
    return node_drift_[i];
}

Trajectory integrate(const Symbol& sym, const PhasePoint& seed, double t_end,
                     const IntegratorOpts& opts) {
    if (t_end == 0.0) throw std::invalid_argument("integrate: t_end must be nonzero");
    if (opts.rtol <= 0.0 || opts.atol <= 0.0)
        throw std::invalid_argument("integrate: tolerances must be positive");
    if (!seed.x.allFinite() || !seed.xi.allFinite())
        throw std::invalid_argument("integrate: seed must be finite");
    if (seed.x.size() != sym.dim() || seed.xi.size() != sym.dim())
        throw std::invalid_argument("integrate: seed dimension mismatch");

    const int n = sym.dim();
    auto rhs = [&sym, n, part = opts.part](double, const Eigen::VectorXd& z) {
        const HamiltonField f = sym.hamiltonian_field(split_state(z, n), part);
        Eigen::VectorXd dz(2 * n);
        dz.head(n) = f.dx_dt;
        dz.tail(n) = f.dxi_dt;
        return dz;
    };

    Eigen::VectorXd z0(2 * n);
    z0.head(n) = seed.x;
    z0.tail(n) = seed.xi;

    ode::Options oo;
    oo.rtol = opts.rtol;
    oo.atol = opts.atol;
    oo.max_steps = opts.max_steps;
    if (opts.escape_stop_radius > 0.0) {
        oo.stop_radius = opts.escape_stop_radius;
        oo.radius_dim = n;
    }
    return Trajectory(&sym, seed, opts.part, ode::integrate(rhs, z0, 0.0, t_end, oo));
}

double scaling_residual(const Symbol& sym, const PhasePoint& seed, double lambda, double t,
                        const IntegratorOpts& opts) {
    if (lambda <= 0.0) throw std::invalid_argument("scaling_residual: lambda must be positive");
    if (opts.part != SymbolPart::principal)
        throw std::invalid_argument("scaling_residual: defined for the principal flow only");

    PhasePoint scaled = seed;
    scaled.xi *= lambda;
    const double t_ref = std::pow(lambda, sym.order() - 1) * t;

    const Trajectory a = integrate(sym, scaled, t, opts);
    const Trajectory b = integrate(sym, seed, t_ref, opts);
    if (!a.completed() || !b.completed())
        throw std::runtime_error("scaling_residual: flow integration did not complete");

    const PhasePoint pa = a.at(t);
    const PhasePoint pb = b.at(t_ref);
    const double ry = (pa.x - pb.x).lpNorm<Eigen::Infinity>();
    const double re = (pa.xi - lambda * pb.xi).lpNorm<Eigen::Infinity>();
    return std::max(ry, re);
}

namespace {

// p_m along the great circle cos(theta) u + sin(theta) v at fixed x.
double circle_value(const Symbol& sym, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& v, double theta) {
    PhasePoint pt{x, std::cos(theta) * u + std::sin(theta) * v};
    return sym.eval(pt, SymbolPart::principal);
}

}  // namespace

CharSample sample_characteristic(const Symbol& sym, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi, int count, std::uint64_t rng_seed,
                                 double tol_char) {
    if (count < 1) throw std::invalid_argument("sample_characteristic: count must be >= 1");
    if (lo.size() != sym.dim() || hi.size() != sym.dim())
        throw std::invalid_argument("sample_characteristic: box dimension mismatch");
    for (int i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) throw std::invalid_argument("sample_characteristic: empty box");

    const int n = sym.dim();
    CharSample out;
    out.tol_char = tol_char;
    CounterRng rng = CounterRng(rng_seed).substream(0x636861727331ull);

    const long budget = 64L * count;
    for (long attempt = 0; attempt < budget && static_cast<int>(out.points.size()) < count;
         ++attempt) {
        const Eigen::VectorXd x = rng.uniform_in_box(lo, hi);

        if (n == 1) {
            // The sphere is two points; accept whichever is null.
            bool found = false;
            for (double s : {1.0, -1.0}) {
                PhasePoint pt{x, Eigen::VectorXd::Constant(1, s)};
                if (std::abs(sym.eval(pt, SymbolPart::principal)) <= tol_char) {
                    out.points.push_back(pt);
                    found = true;
                    break;
                }
            }
            if (!found) ++out.discarded;
            continue;
        }

        // Random great circle: orthonormal pair (u, v).
        const Eigen::VectorXd u = rng.unit_vector(n);
        Eigen::VectorXd w = rng.normal_vector(n);
        w -= w.dot(u) * u;
        if (w.norm() < 1e-8) {
            ++out.discarded;
            continue;
        }
        const Eigen::VectorXd v = w / w.norm();

        // Scan for a sign change, then bisect the bracket to machine width.
        constexpr int kScan = 64;
        const double two_pi = 6.283185307179586477;
        double prev_theta = 0.0;
        double prev_val = circle_value(sym, x, u, v, 0.0);
        bool found = false;
        for (int i = 1; i <= kScan && !found; ++i) {
            const double theta = two_pi * i / kScan;
            const double val = circle_value(sym, x, u, v, theta);
            if (prev_val == 0.0 || prev_val * val < 0.0) {
                double a = prev_theta, b = theta;
                double fa = prev_val;
                for (int it = 0; it < 80 && b - a > 1e-15; ++it) {
                    const double mid = 0.5 * (a + b);
                    const double fm = circle_value(sym, x, u, v, mid);
                    if (fa * fm <= 0.0) {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                const double root = 0.5 * (a + b);
                PhasePoint pt{x, std::cos(root) * u + std::sin(root) * v};
                pt.xi /= pt.xi.norm();  // guard against rounding in the combination
                if (std::abs(sym.eval(pt, SymbolPart::principal)) <= tol_char) {
                    out.points.push_back(pt);
                    found = true;
                }
            }
            prev_theta = theta;
            prev_val = val;
        }
        if (!found) ++out.discarded;
    }

    out.elliptic_flag = out.points.empty();
    return out;
}

}  // namespace hamesc
