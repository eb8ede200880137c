// Acceptance gate for the toolkit: twelve end-to-end checks, one line each.
// Usage: acceptance <hamesc-binary> <config-dir>. Exits nonzero when any
// criterion fails; every tolerance here is part of the external contract.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hamesc/escape_weight.hpp"
#include "hamesc/fd.hpp"
#include "hamesc/flow.hpp"
#include "hamesc/nontrap.hpp"
#include "hamesc/rng.hpp"
#include "hamesc/symbol.hpp"
#include "hamesc/transport.hpp"
#include "hamesc/weyl.hpp"

namespace fs = std::filesystem;
using namespace hamesc;

namespace {

int g_failed = 0;

void verdict(int idx, bool ok, const std::string& detail) {
    std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", idx, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

Symbol bump_kg(int dim = 2) {
    return make_klein_gordon(MetricSpec::minkowski_bump(dim, 0.1, 1.0), {}, {}, 1.0);
}

PhasePoint phase_point(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    PhasePoint pt;
    pt.x = x;
    pt.xi = xi;
    return pt;
}

// Random phase points with both feet away from the degenerate sets: |x|
// bounded below for the radial coordinate, |xi| bounded below so the flow
// speed stays nonzero.
PhasePoint random_point(CounterRng& rng, int dim, double x_lo, double x_hi, double xi_hi,
                        double xi_floor) {
    Eigen::VectorXd x(dim), xi(dim);
    do {
        for (int i = 0; i < dim; ++i) x[i] = rng.uniform(-x_hi, x_hi);
    } while (x.norm() < x_lo);
    do {
        for (int i = 0; i < dim; ++i) xi[i] = rng.uniform(-xi_hi, xi_hi);
    } while (xi.norm() < xi_floor);
    return phase_point(x, xi);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.good()) return {};
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// --- criterion bodies -------------------------------------------------

void c1_mourre_constant() {
    bool ok = true;
    double worst_dev = 0.0, worst_time = 0.0;
    std::vector<Symbol> syms;
    for (int n : {2, 3}) {
        syms.push_back(make_free_laplacian(n));
        syms.push_back(make_klein_gordon(MetricSpec::minkowski(n), {}, {}, 1.0));
    }
    for (const Symbol& sym : syms) {
        const auto t0 = std::chrono::steady_clock::now();
        const MourreConstants mc = estimate_mourre(sym);
        const double dt = seconds_since(t0);
        worst_dev = std::max(worst_dev, std::abs(mc.M - 8.0));
        worst_time = std::max(worst_time, dt);
        ok = ok && mc.ok && std::abs(mc.M - 8.0) <= 1e-9 && dt < 1.0;
    }
    verdict(1, ok,
            fmt("commutator constant 8 on constant-coefficient flows (n = 2, 3); "
                "worst |M - 8| = %.2e, slowest call %.2fs (budget 1s)",
                worst_dev, worst_time));
}

void c2_escape_radius() {
    const double r = escape_radius(1.0, 2, 1.0, 8.0, 1.0);
    const double r0 = escape_radius(0.0, 2, 1.0, 8.0, 1.0);
    const bool ok = std::abs(r - 2.0) <= 1e-12 && r0 == 1.0;
    verdict(2, ok,
            fmt("escape radius formula: R1(C0=1) = %.15g (want 2), "
                "C0 = 0 returns R0 exactly (%.15g)",
                r, r0));
}

NonTrappingCertificate c3_certified_band() {
    CertifyParams cp;
    cp.seed_count = 64;
    cp.rng_seed = 20240817;

    const auto t0 = std::chrono::steady_clock::now();
    const NonTrappingCertificate cert = certify(bump_kg(), cp);
    const double dt = seconds_since(t0);

    long violations = 0;
    for (const PointCertificate& pc : cert.seeds) {
        const bool banded = pc.status == PointStatus::escaped && pc.band_ok &&
                            pc.band_lo >= 0.5 * pc.eta0 * (1.0 - 1e-9) &&
                            pc.band_hi <= 2.0 * pc.eta0 * (1.0 + 1e-9);
        if (!banded) ++violations;
    }
    const bool ok = cert.ok && cert.certified && !cert.vacuous &&
                    cert.seeds.size() == 2 * 64 && violations == 0 && dt < 30.0;
    verdict(3, ok,
            fmt("bump metric certification: 64 seeds both directions, momentum "
                "band [eta0/2, 2 eta0] violations = %.0f, %.1fs (budget 30s)",
                static_cast<double>(violations), dt));
    return cert;
}

void c4_scaling_covariance() {
    bool ok = true;
    double worst = 0.0;
    const Symbol syms[] = {make_free_laplacian(2),
                           make_klein_gordon(MetricSpec::minkowski(2), {}, {}, 1.0), bump_kg()};
    CounterRng rng(20240817);
    for (int s = 0; s < 3; ++s) {
        CounterRng sub = rng.substream(s);
        for (int i = 0; i < 100; ++i) {
            const PhasePoint seed = random_point(sub, 2, 0.0, 2.0, 2.0, 0.3);
            for (double lambda : {0.5, 2.0, 10.0}) {
                const double res = scaling_residual(syms[s], seed, lambda, 5.0);
                worst = std::max(worst, res);
                ok = ok && res <= 1e-6;
            }
        }
    }
    verdict(4, ok,
            fmt("flow scaling covariance over 100 seeds x 3 symbols x "
                "lambda in {1/2, 2, 10}: worst residual %.2e (tol 1e-6)",
                worst));
}

void c5_energy_drift(const NonTrappingCertificate& cert) {
    double worst = 0.0;
    for (const PointCertificate& pc : cert.seeds) worst = std::max(worst, pc.drift);

    long trajectories = static_cast<long>(cert.seeds.size());
    const Symbol syms[] = {make_free_laplacian(2),
                           make_klein_gordon(MetricSpec::minkowski(2), {}, {}, 1.0), bump_kg()};
    CounterRng rng(424242);
    bool completed = true;
    for (int s = 0; s < 3; ++s) {
        CounterRng sub = rng.substream(s);
        for (int i = 0; i < 12; ++i) {
            const PhasePoint seed = random_point(sub, 2, 0.0, 2.0, 2.0, 0.3);
            for (double t_end : {8.0, -8.0}) {
                const Trajectory traj = integrate(syms[s], seed, t_end);
                completed = completed && traj.completed();
                worst = std::max(worst, traj.drift());
                ++trajectories;
            }
        }
    }
    const bool ok = completed && worst <= 1e-8;
    verdict(5, ok,
            fmt("relative energy drift along %.0f accepted trajectories: "
                "worst %.2e (tol 1e-8)",
                static_cast<double>(trajectories), worst));
}

void c6_bracket_identities() {
    const Symbol free2 = make_free_laplacian(2);
    const EscapeWeightParams wp;
    CounterRng rng(31337);

    // Radial coordinate bracket against its closed form, constant-coefficient
    // symbol: {p, eta} = (|v|/|x|) (1 - eta^2).
    double worst_eta = 0.0;
    const PhaseFunction p_free = symbol_fn(free2, SymbolPart::principal);
    CounterRng sub0 = rng.substream(0);
    for (int i = 0; i < 1000; ++i) {
        const PhasePoint pt = random_point(sub0, 2, 0.5, 8.0, 4.0, 0.3);
        const double eta = eta_coord(free2, pt);
        const double speed = free2.xi_grad(pt, SymbolPart::principal).norm();
        const double closed = speed / pt.x.norm() * (1.0 - eta * eta);
        const double fd = poisson_bracket_fd(
            p_free, [&](const PhasePoint& q) { return eta_coord(free2, q); }, pt);
        worst_eta = std::max(worst_eta, std::abs(fd - closed));
    }

    // Weight bracket closed form against the all-FD route, constant and bump
    // coefficients.
    double worst_b = 0.0;
    const Symbol syms[] = {free2, bump_kg()};
    for (int s = 0; s < 2; ++s) {
        const PhaseFunction p_fn = symbol_fn(syms[s], SymbolPart::principal);
        CounterRng sub = rng.substream(1 + s);
        for (int i = 0; i < 1000; ++i) {
            const PhasePoint pt = random_point(sub, 2, 0.5, 8.0, 4.0, 0.3);
            const double closed = bracket_p0_b_closed_form(syms[s], wp, pt).total();
            const double fd = poisson_bracket_fd(
                p_fn, [&](const PhasePoint& q) { return weight_b(syms[s], wp, q); }, pt);
            worst_b = std::max(worst_b, std::abs(fd - closed));
        }
    }
    const bool ok = worst_eta <= 1e-6 && worst_b <= 1e-6;
    verdict(6, ok,
            fmt("Poisson bracket closed forms at 1000 points each: radial "
                "coordinate dev %.2e, weight dev %.2e (tol 1e-6)",
                worst_eta, worst_b));
}

void c7_damping_constant() {
    const bool ok = delta3(0.6) == 0.275 && delta3(0.75) == 0.125;
    verdict(7, ok,
            fmt("partition damping constants hit their rational values "
                "exactly: delta3(0.6) = %.17g, delta3(0.75) = %.17g",
                delta3(0.6), delta3(0.75)));
}

void c8_weight_lower_bound() {
    bool ok = true;
    double worst = 1.0;
    const Symbol syms[] = {make_free_laplacian(2),
                           make_klein_gordon(MetricSpec::minkowski(2), {}, {}, 1.0), bump_kg()};
    for (const Symbol& sym : syms) {
        WeightBoundOpts opts;
        opts.points = 10'000;
        opts.tol = 1e-8;
        opts.rng_seed = 20240817;
        const BoundReport rep = verify_weight_bound_auto(sym, EscapeWeightParams{}, opts);
        worst = std::min(worst, rep.worst_margin);
        ok = ok && rep.pass && rep.worst_margin >= -1e-8 && rep.smallness_ok &&
             rep.smallness_lhs <= rep.smallness_rhs && rep.points_checked == 10'000;
    }
    verdict(8, ok,
            fmt("escape weight sign bound on 10^4 points per symbol with "
                "auto-doubled cutoff: worst margin %.2e (tol -1e-8)",
                worst));
}

void c9_transport_inequality() {
    bool ok = true;
    double worst_min = 1.0, worst_seed_value = 2.0;

    // Constant-coefficient route with the reference seed.
    const Symbol free2 = make_free_laplacian(2);
    const PhasePoint free_seed =
        phase_point(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(2.5, 0.0));
    const Trajectory free_traj = integrate(free2, free_seed, 30.0);
    TransportParams tp;
    tp.delta1 = 1.0;
    tp.delta2 = 0.1;
    tp.C1 = 0.0;
    tp.T00 = 1.0;
    tp.mu = free2.mu();
    TransportCheckOpts opts;
    opts.grid_points = 10'000;
    opts.t_hi = 20.0;
    opts.rng_seed = 20240817;
    const TransportReport free_rep = verify_transport_inequality(free2, free_traj, tp, opts);
    worst_min = std::min(worst_min, free_rep.min_value);
    ok = ok && free_rep.pass && free_rep.min_value >= -1e-9;
    const double free_val = backward_transport_value(free2, free_traj, tp, free_seed);
    worst_seed_value = std::min(worst_seed_value, free_val);

    // Perturbed route: a certified null characteristic with tuned constants.
    const Symbol bump = bump_kg();
    const CharSample chars = sample_characteristic(
        bump, Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0), 1, 20240817);
    ok = ok && !chars.points.empty();
    if (!chars.points.empty()) {
        const Trajectory traj = integrate(bump, chars.points.front(), 40.0);
        const TransportParams tuned = auto_tune_transport(bump, traj, tp, opts);
        const TransportReport rep = verify_transport_inequality(bump, traj, tuned, opts);
        worst_min = std::min(worst_min, rep.min_value);
        ok = ok && rep.pass && rep.min_value >= -1e-9;
        const double val = backward_transport_value(bump, traj, tuned, chars.points.front());
        worst_seed_value = std::min(worst_seed_value, val);
    }

    ok = ok && worst_seed_value >= 1.0 - 1e-12;
    verdict(9, ok,
            fmt("transport inequality on 10^4 grid points, t in [T00, 20]: "
                "worst minimum %.2e (tol -1e-9); backward value at the seed "
                ">= 1 (min %.15g)",
                worst_min, worst_seed_value));
}

void c10_quantization_identities() {
    const Grid g(8.0, 256);

    const auto one = weyl_quantize(g, [](double, double) { return 1.0; }, "one");
    const double id_dev =
        (one.matrix - Eigen::MatrixXcd::Identity(g.N(), g.N())).cwiseAbs().maxCoeff();

    double herm = 0.0;
    const PhaseSymbol1d reals[] = {
        [](double x, double xi) { return std::exp(-(x * x + xi * xi)); },
        [](double x, double xi) { return x * xi * std::exp(-0.2 * (x * x + xi * xi)); },
        [](double x, double xi) { return std::cos(x) * std::exp(-0.1 * xi * xi); },
    };
    for (const auto& a : reals)
        herm = std::max(herm, hermitian_spectrum_summary(weyl_quantize(g, a, "r")).herm_defect);

    const CommutatorCheck ck = commutator_vs_bracket(
        g, [](double, double xi) { return xi * xi; }, [](double x, double) { return x; },
        [](double, double xi) { return 2.0 * xi; });

    const bool ok = id_dev == 0.0 && herm <= 1e-12 && ck.windowed_residual <= 1e-8;
    verdict(10, ok,
            fmt("quantization identities at N = 256: Op(1) = I exactly, "
                "Hermitian defect %.1e (tol 1e-12), windowed commutator "
                "residual %.2e (tol 1e-8)",
                herm, ck.windowed_residual));
}

void c11_estimate_stability() {
    EstimateOpts opts;
    opts.rng_seed = 20240817;
    const auto t0 = std::chrono::steady_clock::now();
    const EstimateReport rep =
        radial_estimate_experiment(make_free_laplacian(1), EscapeWeightParams{}, opts);
    const double dt = seconds_since(t0);
    const bool ok = rep.pass && rep.imz_ratio <= 2.0 && rep.refine_ratio <= 0.2 &&
                    rep.boundary_violations == 0 && dt < 60.0;
    verdict(11, ok,
            fmt("fitted estimate constant stable: x%.3f across Im z decades "
                "(limit 2), %.1f%% under refinement (limit 20%%), in %.1fs "
                "(budget 60s)",
                rep.imz_ratio, 100.0 * rep.refine_ratio, dt));
}

void c12_deterministic_reports(const std::string& bin, const std::string& config_dir) {
    const fs::path out_a = fs::temp_directory_path() / "hamesc_acceptance_a";
    const fs::path out_b = fs::temp_directory_path() / "hamesc_acceptance_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);

    const std::string cfg = config_dir + "/acceptance_all.cfg";
    bool ok = true;
    for (const fs::path& out : {out_a, out_b}) {
        const std::string cmd =
            bin + " all --config " + cfg + " --out " + out.string() + " >/dev/null 2>&1";
        ok = ok && std::system(cmd.c_str()) == 0;
    }
    const std::string rep_a = slurp(out_a / "report.json");
    const std::string rep_b = slurp(out_b / "report.json");
    ok = ok && !rep_a.empty() && rep_a == rep_b;
    verdict(12, ok,
            fmt("full pipeline twice with a fixed seed: reports byte-identical "
                "(%.0f bytes)",
                static_cast<double>(rep_a.size())));
    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <hamesc-binary> <config-dir>\n");
        return 2;
    }

    const auto guarded = [](int idx, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& e) {
            verdict(idx, false, std::string("exception: ") + e.what());
        }
    };

    NonTrappingCertificate cert;
    guarded(1, c1_mourre_constant);
    guarded(2, c2_escape_radius);
    guarded(3, [&] { cert = c3_certified_band(); });
    guarded(4, c4_scaling_covariance);
    guarded(5, [&] { c5_energy_drift(cert); });
    guarded(6, c6_bracket_identities);
    guarded(7, c7_damping_constant);
    guarded(8, c8_weight_lower_bound);
    guarded(9, c9_transport_inequality);
    guarded(10, c10_quantization_identities);
    guarded(11, c11_estimate_stability);
    guarded(12, [&] { c12_deterministic_reports(argv[1], argv[2]); });

    std::printf("acceptance: %d/12 criteria passed\n", 12 - g_failed);
    return g_failed == 0 ? 0 : 1;
}
