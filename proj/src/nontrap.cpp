#include "hamesc/nontrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hamesc/parallel.hpp"

namespace hamesc {

double mourre_h2(const Symbol& sym, const PhasePoint& pt) {
    const auto part = SymbolPart::principal;
    const Eigen::VectorXd dxi = sym.xi_grad(pt, part);
    const Eigen::VectorXd dx = sym.x_grad(pt, part);
    const Eigen::MatrixXd mixed = sym.x_xi_mixed(pt, part);  // (k,j) = d_xk d_xij
    const Eigen::MatrixXd hess = sym.xi_hessian(pt, part);
    return 2.0 * dxi.squaredNorm() + 2.0 * pt.x.dot(mixed.transpose() * dxi) -
           2.0 * pt.x.dot(hess * dx);
}

MourreConstants estimate_mourre(const Symbol& sym, const MourreSearch& search) {
    if (search.safety <= 0.0 || search.safety > 1.0)
        throw std::invalid_argument("estimate_mourre: safety factor must be in (0, 1]");
    const int n = sym.dim();
    const ValidationLattice lat = ValidationLattice::defaults(n);
    const int x_dirs = search.x_directions > 0 ? search.x_directions : lat.x_directions;
    const int xi_dirs = search.xi_directions > 0 ? search.xi_directions : lat.xi_directions;
    const auto x_dir_set = sphere_directions(n, x_dirs);
    const auto xi_dir_set = sphere_directions(n, xi_dirs);

    MourreConstants out;
    for (double r0 : search.candidate_radii) {
        std::vector<double> shells;
        for (double s : search.shells)
            if (s > r0) shells.push_back(s);
        if (shells.empty()) continue;

        const long total = static_cast<long>(shells.size()) * x_dirs * xi_dirs;
        std::vector<double> vals(total);
        parallel_for(total, search.jobs, [&](long i) {
            const long xi_i = i % xi_dirs;
            const long x_i = (i / xi_dirs) % x_dirs;
            const long s_i = i / (static_cast<long>(xi_dirs) * x_dirs);
            PhasePoint pt{shells[s_i] * x_dir_set[x_i], xi_dir_set[xi_i]};
            vals[i] = mourre_h2(sym, pt);
        });

        long arg = 0;
        for (long i = 1; i < total; ++i)
            if (vals[i] < vals[arg]) arg = i;

        out.samples += total;
        if (vals[arg] > 0.0) {
            out.ok = true;
            out.R0 = r0;
            out.M = search.safety * vals[arg];
            const long xi_i = arg % xi_dirs;
            const long x_i = (arg / xi_dirs) % x_dirs;
            const long s_i = arg / (static_cast<long>(xi_dirs) * x_dirs);
            out.witness = PhasePoint{shells[s_i] * x_dir_set[x_i], xi_dir_set[xi_i]};
            return out;
        }
    }
    out.ok = false;
    out.failure = "no candidate radius gives a positive sampled minimum";
    return out;
}

double escape_radius(double C0, int m, double mu, double M, double R0, double safety) {
    if (M <= 0.0) throw std::domain_error("escape_radius: M must be positive");
    if (C0 < 0.0) throw std::domain_error("escape_radius: C0 must be nonnegative");
    if (mu <= 0.0) throw std::domain_error("escape_radius: mu must be positive");
    if (m < 1) throw std::domain_error("escape_radius: order must be at least 1");
    if (C0 == 0.0) return R0;
    const double raw =
        std::pow(C0 * std::pow(2.0, (2 * m + 1) / 2.0) / ((1.0 + mu) * std::sqrt(M)), 1.0 / mu);
    return std::max(R0, safety * raw);
}

std::string to_string(PointStatus s) {
    switch (s) {
        case PointStatus::escaped: return "escaped";
        case PointStatus::undecided: return "undecided";
        case PointStatus::suspected_trapped: return "suspected_trapped";
    }
    throw std::logic_error("unreachable");
}

namespace {

// Everything below works in elapsed time s >= 0; the trajectory itself runs
// at t = direction * s.
struct ElapsedView {
    const Trajectory& traj;
    const Symbol& sym;
    int direction;

    PhasePoint at(double s) const { return traj.at(direction * s); }

    // d|y|^2/ds = 2 y . (direction * dy/dt).
    double radial_speed(double s) const {
        const PhasePoint pt = at(s);
        const HamiltonField f = sym.hamiltonian_field(pt, SymbolPart::principal);
        return 2.0 * direction * pt.x.dot(f.dx_dt);
    }

    bool exit_condition(double s, double R1) const {
        return at(s).x.norm() >= R1 && radial_speed(s) >= 0.0;
    }
};

}  // namespace

PointCertificate certify_point(const Symbol& sym, const PhasePoint& seed, double R1,
                               double T_max, int direction, const CertifyPointOpts& opts) {
    if (direction != 1 && direction != -1)
        throw std::invalid_argument("certify_point: direction must be +1 or -1");
    if (R1 <= 0.0 || T_max <= 0.0)
        throw std::invalid_argument("certify_point: R1 and T_max must be positive");
    if (std::abs(sym.eval(seed, SymbolPart::principal)) > 1e-8)
        throw std::invalid_argument("certify_point: seed is not on the characteristic set");

    PointCertificate cert;
    cert.seed = seed;
    cert.direction = direction;
    cert.T_max = T_max;

    IntegratorOpts fopts = opts.flow;
    fopts.escape_stop_radius = 0.0;  // the band is checked all the way to T_max
    Trajectory traj = integrate(sym, seed, direction * T_max, fopts);
    cert.drift = traj.drift();
    if (!traj.completed()) {
        cert.status = PointStatus::undecided;
        cert.diagnostic = "flow integration stopped early";
        return cert;
    }

    const ElapsedView view{traj, sym, direction};

    // Scan grid: accepted nodes plus a uniform fill, in elapsed time.
    std::vector<double> scan;
    scan.reserve(traj.times().size() + opts.band_samples);
    for (double t : traj.times()) scan.push_back(std::abs(t));
    for (int i = 0; i <= opts.band_samples; ++i)
        scan.push_back(T_max * static_cast<double>(i) / opts.band_samples);
    std::sort(scan.begin(), scan.end());
    scan.erase(std::unique(scan.begin(), scan.end()), scan.end());

    // First scan point satisfying the exit condition, refined by bisection
    // against the previous point.
    double s_exit = -1.0;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        if (view.exit_condition(scan[i], R1)) {
            double hi = scan[i];
            if (i > 0) {
                double lo = scan[i - 1];
                for (int it = 0; it < 60 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (view.exit_condition(mid, R1) ? hi : lo) = mid;
                }
            }
            s_exit = hi;
            break;
        }
    }

    // Re-entry bookkeeping over the whole horizon.
    bool was_above = false;
    for (double s : scan) {
        const double r = view.at(s).x.norm();
        if (r >= R1) {
            was_above = true;
        } else if (was_above && r < 0.5 * R1) {
            ++cert.re_entries;
            was_above = false;
        }
    }

    if (s_exit < 0.0) {
        cert.status = cert.re_entries >= opts.rentry_threshold ? PointStatus::suspected_trapped
                                                               : PointStatus::undecided;
        return cert;
    }

    cert.status = PointStatus::escaped;
    cert.t_exit = s_exit;
    cert.eta0 = view.at(s_exit).xi.norm();

    const double band_cap = std::pow(2.0, 1.0 / (sym.order() - 1)) * cert.eta0;
    const double band_floor = 0.5 * cert.eta0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool monotone = true;
    double prev_r = view.at(s_exit).x.norm();
    for (double s : scan) {
        if (s < s_exit) continue;
        const PhasePoint pt = view.at(s);
        const double e = pt.xi.norm();
        lo = std::min(lo, e);
        hi = std::max(hi, e);
        const double r = pt.x.norm();
        if (r < prev_r - 1e-9 * std::max(1.0, prev_r)) monotone = false;
        prev_r = r;
    }
    cert.band_lo = lo;
    cert.band_hi = hi;
    const double slack = opts.band_tol * std::max(1.0, cert.eta0);
    cert.band_ok = (lo >= band_floor - slack) && (hi <= band_cap + slack);
    cert.radius_monotone_ok = monotone;
    if (!cert.band_ok) cert.diagnostic = "momentum band violated";
    if (!monotone) cert.diagnostic += std::string(cert.diagnostic.empty() ? "" : "; ") +
                                      "|y| not monotone past t_exit";

    cert.eta_plus = traj.momentum_at(direction * T_max);
    PhasePoint tail{traj.position_at(direction * T_max), cert.eta_plus};
    cert.v_plus = sym.xi_grad(tail, SymbolPart::free_part);
    try {
        const AsymptoticData ad = asymptotic_data(traj, sym.mu());
        cert.fit_exponent_eta = ad.exponent_eta;
        cert.fit_exponent_y = ad.exponent_y;
    } catch (const std::exception&) {
        // short tails only degrade the diagnostics, not the certificate
    }
    return cert;
}

namespace {

// Least-squares slope of log(d) against log(<t>); returns +infinity when
// fewer than five samples sit above the floor.
double decay_fit(const std::vector<double>& ts, const std::vector<double>& ds, int* used) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ds[i] > 1e-13) {
            lx.push_back(0.5 * std::log1p(ts[i] * ts[i]));
            ly.push_back(std::log(ds[i]));
        }
    }
    *used = static_cast<int>(lx.size());
    if (lx.size() < 5) return std::numeric_limits<double>::infinity();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) return std::numeric_limits<double>::infinity();
    return -(n * sxy - sx * sy) / denom;  // decay exponent, positive when shrinking
}

}  // namespace

AsymptoticData asymptotic_data(const Trajectory& traj, double mu) {
    (void)mu;  // documented normalization of the fit; the exponent itself is the fit output
    const double T = std::abs(traj.t_end());
    AsymptoticData out;
    out.eta_plus = traj.momentum_at(traj.t_end());
    const PhasePoint tail_pt{traj.position_at(traj.t_end()), out.eta_plus};
    out.v_plus = traj.symbol().xi_grad(tail_pt, SymbolPart::free_part);

    // Tail window: away from the start (transient) and the endpoint (where
    // eta_plus is pinned, making the distance artificially zero). Nodes can
    // be sparse when the integrator takes long strides, so a uniform fill
    // through the dense output backs them up.
    const double s_lo = std::max(1.0, 0.1 * T), s_hi = 0.98 * T;
    if (s_hi <= s_lo) throw std::runtime_error("asymptotic_data: trajectory tail too short");
    std::vector<double> samples;
    for (double t : traj.times()) {
        const double s = std::abs(t);
        if (s >= s_lo && s <= s_hi) samples.push_back(s);
    }
    const int dir = traj.t_end() >= 0.0 ? 1 : -1;
    for (int i = 0; i <= 64; ++i) samples.push_back(s_lo + (s_hi - s_lo) * i / 64.0);
    std::sort(samples.begin(), samples.end());
    samples.erase(std::unique(samples.begin(), samples.end()), samples.end());

    std::vector<double> ts, de, dy;
    for (double s : samples) {
        const double t = dir * s;
        const PhasePoint pt = traj.at(t);
        ts.push_back(s);
        de.push_back((pt.xi - out.eta_plus).norm());
        dy.push_back((pt.x / t - out.v_plus).norm());
        out.max_dev_eta = std::max(out.max_dev_eta, de.back());
        out.max_dev_y = std::max(out.max_dev_y, dy.back());
    }
    if (ts.size() < 8) throw std::runtime_error("asymptotic_data: trajectory tail too short");

    out.exponent_eta = decay_fit(ts, de, &out.points_eta);
    out.exponent_y = decay_fit(ts, dy, &out.points_y);
    return out;
}

NonTrappingCertificate certify(const Symbol& sym, const CertifyParams& params) {
    NonTrappingCertificate cert;
    cert.rng_seed = params.rng_seed;

    const ValidationReport vr = validate(sym, ValidationLattice::defaults(sym.dim()));
    if (!vr.accepted) {
        cert.failure = "symbol validation failed: " + vr.rejection_reason;
        return cert;
    }
    cert.C0 = vr.C0;

    cert.mourre = estimate_mourre(sym, params.mourre);
    if (!cert.mourre.ok) {
        cert.failure = "mourre estimation failed: " + cert.mourre.failure;
        return cert;
    }

    cert.R1 = escape_radius(cert.C0, sym.order(), sym.mu(), cert.mourre.M, cert.mourre.R0,
                            params.r1_safety);

    const double C = std::max(1.0, std::max(vr.C_nondeg_principal, vr.C_nondeg_free));
    const double min_v = std::pow(2.0, -(sym.order() - 1)) / C;
    cert.T_max = params.T_max > 0.0 ? params.T_max : 100.0 * cert.R1 / min_v;

    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(sym.dim(), -params.box_halfwidth);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(sym.dim(), params.box_halfwidth);
    cert.sample = sample_characteristic(sym, lo, hi, params.seed_count, params.rng_seed,
                                        params.tol_char);
    if (cert.sample.points.empty()) {
        cert.ok = true;
        cert.certified = true;  // nothing to trap
        cert.vacuous = true;
        return cert;
    }

    const long pairs = static_cast<long>(cert.sample.points.size());
    cert.seeds.resize(2 * pairs);
    parallel_for(2 * pairs, params.jobs, [&](long i) {
        const long si = i / 2;
        const int dir = (i % 2 == 0) ? 1 : -1;
        cert.seeds[i] = certify_point(sym, cert.sample.points[si], cert.R1, cert.T_max, dir,
                                      params.point);
    });

    for (const auto& pc : cert.seeds) {
        switch (pc.status) {
            case PointStatus::escaped: ++cert.escaped; break;
            case PointStatus::undecided: ++cert.undecided; break;
            case PointStatus::suspected_trapped: ++cert.suspected_trapped; break;
        }
    }
    cert.ok = true;
    cert.certified = (cert.escaped == static_cast<int>(cert.seeds.size()));
    return cert;
}

}  // namespace hamesc
