#include "hamesc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "hamesc/escape_weight.hpp"
#include "hamesc/flow.hpp"
#include "hamesc/nontrap.hpp"
#include "hamesc/rng.hpp"
#include "hamesc/transport.hpp"
#include "hamesc/version.hpp"
#include "hamesc/weyl.hpp"

namespace hamesc {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

json finite_or_null(double v) {
    if (std::isfinite(v)) return json(v);
    return json(nullptr);
}

json vec_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json point_json(const PhasePoint& pt) {
    return json{{"x", vec_json(pt.x)}, {"xi", vec_json(pt.xi)}};
}

std::string status_name(FlowStatus s) {
    switch (s) {
        case FlowStatus::completed: return "completed";
        case FlowStatus::stopped_at_radius: return "stopped_at_radius";
        case FlowStatus::step_underflow: return "step_underflow";
        case FlowStatus::max_steps_exceeded: return "max_steps_exceeded";
    }
    return "unknown";
}

PhasePoint resolve_seed(const Symbol& sym, const RunConfig& cfg) {
    if (!cfg.flow.seed_x.empty()) {
        PhasePoint pt;
        pt.x = Eigen::Map<const Eigen::VectorXd>(cfg.flow.seed_x.data(),
                                                 static_cast<Eigen::Index>(cfg.flow.seed_x.size()));
        pt.xi = Eigen::Map<const Eigen::VectorXd>(
            cfg.flow.seed_xi.data(), static_cast<Eigen::Index>(cfg.flow.seed_xi.size()));
        return pt;
    }
    const Eigen::VectorXd hw =
        Eigen::VectorXd::Constant(sym.dim(), cfg.certify.box_halfwidth);
    const CharSample cs =
        sample_characteristic(sym, -hw, hw, 1, cfg.run.rng_seed ^ 0x5eedull, cfg.certify.tol_char);
    if (cs.points.empty())
        throw std::runtime_error(
            "no null seed found in the sampling box; set flow.seed_x / flow.seed_xi "
            "explicitly (the principal symbol may be elliptic)");
    return cs.points.front();
}

struct TaskCtx {
    const RunConfig& cfg;
    const Symbol& sym;
    fs::path out;
    json* tasks;
};

bool task_validate(TaskCtx& ctx) {
    const ValidationReport vr = validate(ctx.sym, ValidationLattice::defaults(ctx.sym.dim()));
    json sec;
    sec["accepted"] = vr.accepted;
    sec["rejection_reason"] = vr.rejection_reason;
    sec["C_nondeg_principal"] = vr.C_nondeg_principal;
    sec["C_nondeg_free"] = vr.C_nondeg_free;
    sec["C0"] = vr.C0;
    sec["C_beta"] = json::array({vr.C_beta[0], vr.C_beta[1], vr.C_beta[2]});
    sec["grad_consistent"] = vr.grad_consistent;
    sec["worst_grad_mismatch"] = vr.worst_grad_mismatch;
    sec["used_fd_hessian"] = vr.used_fd_hessian;
    sec["x_samples"] = vr.x_samples;
    sec["xi_samples"] = vr.xi_samples;
    sec["pass"] = vr.accepted;
    (*ctx.tasks)["validate"] = sec;
    return vr.accepted;
}

bool task_flow(TaskCtx& ctx) {
    const PhasePoint seed = resolve_seed(ctx.sym, ctx.cfg);
    IntegratorOpts io;
    io.rtol = ctx.cfg.flow.rtol;
    io.atol = ctx.cfg.flow.atol;
    const Trajectory traj = integrate(ctx.sym, seed, ctx.cfg.flow.t_end, io);

    std::ostringstream csv;
    csv << "t";
    for (int j = 0; j < traj.dim(); ++j) csv << ",y" << j;
    for (int j = 0; j < traj.dim(); ++j) csv << ",eta" << j;
    csv << ",drift\n";
    for (std::size_t i = 0; i < traj.times().size(); ++i) {
        csv << fmt17(traj.times()[i]);
        const Eigen::VectorXd& st = traj.states()[i];
        for (Eigen::Index j = 0; j < st.size(); ++j) csv << ',' << fmt17(st[j]);
        csv << ',' << fmt17(traj.drift_at_node(i)) << '\n';
    }
    write_text_atomic(ctx.out / "trajectories.csv", csv.str());

    const bool pass = traj.completed() && traj.drift() <= 1e-8;
    json sec;
    sec["seed"] = point_json(seed);
    sec["status"] = status_name(traj.status());
    sec["t_end"] = traj.t_end();
    sec["pm_seed"] = traj.pm_seed();
    sec["drift"] = traj.drift();
    sec["accepted_steps"] = traj.accepted();
    sec["rejected_steps"] = traj.rejected();
    sec["nodes"] = static_cast<long>(traj.times().size());
    sec["pass"] = pass;
    (*ctx.tasks)["flow"] = sec;
    return pass;
}

json point_certificate_json(const PointCertificate& pc) {
    json s;
    s["seed"] = point_json(pc.seed);
    s["direction"] = pc.direction;
    s["status"] = to_string(pc.status);
    s["diagnostic"] = pc.diagnostic;
    s["t_exit"] = pc.t_exit;
    s["eta0"] = pc.eta0;
    s["band_lo"] = pc.band_lo;
    s["band_hi"] = pc.band_hi;
    s["band_ok"] = pc.band_ok;
    s["radius_monotone_ok"] = pc.radius_monotone_ok;
    s["re_entries"] = pc.re_entries;
    s["drift"] = pc.drift;
    if (pc.status == PointStatus::escaped) {
        s["eta_plus"] = vec_json(pc.eta_plus);
        s["v_plus"] = vec_json(pc.v_plus);
        s["fit_exponent_eta"] = finite_or_null(pc.fit_exponent_eta);
        s["fit_exponent_y"] = finite_or_null(pc.fit_exponent_y);
    }
    return s;
}

bool task_certify(TaskCtx& ctx) {
    CertifyParams pp;
    pp.seed_count = ctx.cfg.certify.seed_count;
    pp.box_halfwidth = ctx.cfg.certify.box_halfwidth;
    pp.tol_char = ctx.cfg.certify.tol_char;
    pp.rng_seed = ctx.cfg.run.rng_seed;
    pp.T_max = ctx.cfg.certify.t_max;
    pp.r1_safety = ctx.cfg.certify.r1_safety;
    pp.mourre.safety = ctx.cfg.certify.mourre_safety;
    pp.mourre.jobs = ctx.cfg.run.jobs;
    pp.point.flow.rtol = ctx.cfg.flow.rtol;
    pp.point.flow.atol = ctx.cfg.flow.atol;
    pp.point.band_samples = ctx.cfg.certify.band_samples;
    pp.jobs = ctx.cfg.run.jobs;

    const NonTrappingCertificate cert = certify(ctx.sym, pp);

    json sec;
    sec["schema_version"] = kCertificateSchemaVersion;
    {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(ctx.sym.description())));
        sec["symbol_hash"] = std::string(buf);
    }
    sec["ok"] = cert.ok;
    sec["failure"] = cert.failure;
    sec["certified"] = cert.certified;
    sec["vacuous"] = cert.vacuous;
    json mj;
    mj["ok"] = cert.mourre.ok;
    mj["R0"] = cert.mourre.R0;
    mj["M"] = cert.mourre.M;
    mj["samples"] = cert.mourre.samples;
    if (cert.mourre.ok) mj["witness"] = point_json(cert.mourre.witness);
    sec["mourre"] = mj;
    sec["C0"] = cert.C0;
    sec["R1"] = cert.R1;
    sec["T_max"] = cert.T_max;
    sec["rng_seed"] = cert.rng_seed;
    sec["sample"] = json{{"requested", ctx.cfg.certify.seed_count},
                         {"found", static_cast<long>(cert.sample.points.size())},
                         {"discarded", cert.sample.discarded},
                         {"elliptic", cert.sample.elliptic_flag}};
    sec["counts"] = json{{"escaped", cert.escaped},
                         {"undecided", cert.undecided},
                         {"suspected_trapped", cert.suspected_trapped}};
    json seeds = json::array();
    for (const auto& pc : cert.seeds) seeds.push_back(point_certificate_json(pc));
    sec["seeds"] = seeds;
    const bool pass = cert.ok && cert.certified;
    sec["pass"] = pass;
    (*ctx.tasks)["certify"] = sec;
    write_text_atomic(ctx.out / "certificate.json", sec.dump(2) + "\n");

    // Band curve for the first escaped seed: |eta| against the admissible
    // corridor on [t_exit, T_max].
    for (const auto& pc : cert.seeds) {
        if (pc.status != PointStatus::escaped || pc.t_exit < 0.0) continue;
        IntegratorOpts io = pp.point.flow;
        io.escape_stop_radius = 0.0;
        const Trajectory traj =
            integrate(ctx.sym, pc.seed, pc.direction * cert.T_max, io);
        if (!traj.completed()) break;
        const double lower = 0.5 * pc.eta0;
        const double upper = std::pow(2.0, 1.0 / (ctx.sym.order() - 1)) * pc.eta0;
        std::ostringstream csv;
        csv << "t,abs_eta,lower,upper\n";
        const int rows = 512;
        for (int i = 0; i <= rows; ++i) {
            const double s = pc.t_exit + (cert.T_max - pc.t_exit) * i / rows;
            const double ae = traj.momentum_at(pc.direction * s).norm();
            csv << fmt17(s) << ',' << fmt17(ae) << ',' << fmt17(lower) << ',' << fmt17(upper)
                << '\n';
        }
        write_text_atomic(ctx.out / "band.csv", csv.str());
        break;
    }
    return pass;
}

bool task_escape_check(TaskCtx& ctx) {
    const auto& ec = ctx.cfg.escape_check;
    EscapeWeightParams p;
    p.delta = ec.delta;
    p.gamma = ec.gamma;
    p.k = ec.k;
    p.M = ec.M;
    p.nu = ec.nu;

    WeightBoundOpts opts;
    opts.points = ec.points;
    opts.tol = ec.tol;
    opts.rng_seed = ctx.cfg.run.rng_seed;
    opts.max_doublings = ec.max_doublings;
    opts.jobs = ctx.cfg.run.jobs;
    opts.keep_margins = true;

    const BoundReport rep = verify_weight_bound_auto(ctx.sym, p, opts);

    std::ostringstream csv;
    csv << "point,margin\n";
    for (std::size_t i = 0; i < rep.margins.size(); ++i)
        csv << i << ',' << fmt17(rep.margins[i]) << '\n';
    write_text_atomic(ctx.out / "sweep.csv", csv.str());

    json sec;
    sec["worst_margin"] = rep.worst_margin;
    sec["witness"] = point_json(rep.witness);
    sec["points_checked"] = rep.points_checked;
    sec["points_trivial"] = rep.points_trivial;
    sec["c_prime"] = rep.c_prime;
    sec["smallness_lhs"] = rep.smallness_lhs;
    sec["smallness_rhs"] = rep.smallness_rhs;
    sec["smallness_ok"] = rep.smallness_ok;
    sec["doublings"] = rep.doublings;
    sec["M_final"] = rep.M_final;
    sec["delta3"] = rep.delta3_value;
    sec["delta4"] = rep.delta4_value;
    sec["tol"] = rep.tol;
    sec["pass"] = rep.pass;
    (*ctx.tasks)["escape_check"] = sec;
    return rep.pass;
}

bool task_transport_check(TaskCtx& ctx) {
    const auto& tc = ctx.cfg.transport_check;
    const PhasePoint seed = resolve_seed(ctx.sym, ctx.cfg);
    IntegratorOpts io;
    io.rtol = ctx.cfg.flow.rtol;
    io.atol = ctx.cfg.flow.atol;
    const Trajectory traj = integrate(ctx.sym, seed, tc.t_hi + 1.5, io);
    if (!traj.completed())
        throw std::runtime_error("reference trajectory did not complete: " +
                                 status_name(traj.status()));

    TransportParams tp;
    tp.delta1 = tc.delta1;
    tp.delta2 = tc.delta2;
    tp.C1 = tc.C1;
    tp.T00 = tc.T00;
    tp.mu = ctx.sym.mu();

    TransportCheckOpts opts;
    opts.grid_points = tc.grid_points;
    opts.t_hi = tc.t_hi;
    opts.tol = tc.tol;
    opts.rng_seed = ctx.cfg.run.rng_seed;
    opts.jobs = ctx.cfg.run.jobs;

    int rounds = 0;
    if (tc.auto_tune) tp = auto_tune_transport(ctx.sym, traj, tp, opts, &rounds);
    // Advisory only: the construction wants the escape velocity to clear the
    // position tube opening rate.
    tp.eta_margin_ok =
        ctx.sym.xi_grad(traj.at(opts.t_hi), SymbolPart::principal).norm() > 4.0 * tp.delta1;

    TransportReport rep = verify_transport_inequality(ctx.sym, traj, tp, opts);
    rep.tuning_rounds = rounds;

    const double psi_seed = backward_transport_value(ctx.sym, traj, tp, seed, io);
    json probes = json::array();
    CounterRng rng(ctx.cfg.run.rng_seed ^ 0xBACBACull);
    for (int i = 0; i < tc.backward_probes; ++i) {
        CounterRng sub = rng.substream(static_cast<std::uint64_t>(i));
        PhasePoint pt;
        pt.x = seed.x + 0.3 * tp.delta1 * sub.uniform(0.0, 1.0) * sub.unit_vector(ctx.sym.dim());
        pt.xi =
            seed.xi + 0.3 * tp.delta2 * sub.uniform(0.0, 1.0) * sub.unit_vector(ctx.sym.dim());
        const double v = backward_transport_value(ctx.sym, traj, tp, pt, io);
        probes.push_back(v);
    }

    const bool pass = rep.pass && psi_seed >= 1.0;
    json sec;
    sec["seed"] = point_json(seed);
    sec["params"] = json{{"delta1", tp.delta1},
                         {"delta2", tp.delta2},
                         {"C1", tp.C1},
                         {"T00", tp.T00},
                         {"mu", tp.mu},
                         {"tuning_rounds", rounds},
                         {"eta_margin_ok", tp.eta_margin_ok}};
    sec["min_value"] = rep.min_value;
    sec["witness_t"] = rep.witness_t;
    sec["witness"] = point_json(rep.witness);
    sec["points"] = rep.points;
    sec["tol"] = rep.tol;
    sec["psi_seed"] = psi_seed;
    sec["backward_probes"] = probes;
    sec["pass"] = pass;
    (*ctx.tasks)["transport_check"] = sec;
    return pass;
}

bool task_quantize_check(TaskCtx& ctx) {
    const auto& q = ctx.cfg.quantize_check;
    const int jobs = ctx.cfg.run.jobs;
    Grid g(q.L, q.N);

    const GridOperator op1 =
        weyl_quantize(g, [](double, double) { return 1.0; }, "one", jobs);
    double id_dev = 0.0;
    for (int j = 0; j < g.N(); ++j)
        for (int k = 0; k < g.N(); ++k) {
            const std::complex<double> want = j == k ? 1.0 : 0.0;
            id_dev = std::max(id_dev, std::abs(op1.matrix(j, k) - want));
        }

    auto coord = [&g](double x, double) { return x * window_sym(g, x); };
    const GridOperator opb = weyl_quantize(g, coord, "coordinate", jobs);
    double offdiag = 0.0;
    for (int j = 0; j < g.N(); ++j)
        for (int k = 0; k < g.N(); ++k)
            if (j != k) offdiag = std::max(offdiag, std::abs(opb.matrix(j, k)));

    auto p2 = [](double, double xi) { return xi * xi; };
    const GridOperator opp = weyl_quantize(g, p2, "xi^2", jobs);

    const double herm_b = hermitian_spectrum_summary(opb).herm_defect;
    const double herm_p = hermitian_spectrum_summary(opp).herm_defect;

    const CommutatorCheck cw = commutator_vs_bracket(
        g, p2, coord, [](double, double xi) { return 2.0 * xi; }, jobs);
    const CommutatorCheck ce = commutator_vs_bracket(
        g, p2, coord,
        [&g](double x, double xi) {
            return 2.0 * xi * (window_sym(g, x) + x * window_sym_deriv(g, x));
        },
        jobs);

    const double pos1 = positivity_margin(op1);
    const double posp = positivity_margin(opp);

    Symbol free1 = make_free_laplacian(1);
    EscapeWeightParams wp;
    wp.delta = ctx.cfg.escape_check.delta;
    wp.gamma = ctx.cfg.escape_check.gamma;
    wp.k = q.estimate_k;
    wp.M = ctx.cfg.escape_check.M;
    wp.nu = ctx.cfg.escape_check.nu;

    EstimateOpts eo;
    eo.L = q.estimate_L;
    eo.n_base = q.estimate_N;
    eo.trials = q.estimate_trials;
    eo.k = q.estimate_k;
    eo.rng_seed = ctx.cfg.run.rng_seed;
    eo.jobs = jobs;
    const EstimateReport er = radial_estimate_experiment(free1, wp, eo);

    if (q.dump_operators) {
        write_operator_dump(opp, (ctx.out / "op_xi2.wgop").string());
        write_operator_dump(opb, (ctx.out / "op_coordinate.wgop").string());
    }

    const bool id_ok = id_dev <= 1e-13;
    const bool herm_ok = std::max(herm_b, herm_p) <= 1e-12;
    const bool comm_ok = cw.windowed_residual <= 1e-8;
    const bool pos_ok = std::abs(pos1 - 1.0) <= 1e-12 && posp >= -1e-12;
    const bool pass = id_ok && herm_ok && comm_ok && pos_ok && er.pass;

    json sec;
    sec["grid"] = json{{"L", q.L}, {"N", q.N}};
    sec["identity_max_dev"] = id_dev;
    sec["coordinate_offdiag_max"] = offdiag;
    sec["herm_defect"] = json{{"coordinate", herm_b}, {"xi2", herm_p}};
    sec["commutator"] = json{{"windowed", cw.windowed_residual},
                             {"raw", cw.raw_residual},
                             {"exact_bracket_raw", ce.raw_residual}};
    sec["positivity"] = json{{"identity", pos1}, {"xi2", posp}};
    json cases = json::array();
    for (const auto& c : er.cases)
        cases.push_back(json{{"im_z", c.im_z},
                             {"N", c.n},
                             {"c_hat", c.c_hat},
                             {"trials_used", c.trials_used},
                             {"trials_skipped", c.trials_skipped}});
    sec["estimate"] = json{{"cases", cases},
                           {"imz_ratio", finite_or_null(er.imz_ratio)},
                           {"refine_ratio", er.refine_ratio},
                           {"boundary_violations", er.boundary_violations},
                           {"pass", er.pass}};
    sec["pass"] = pass;
    (*ctx.tasks)["quantize_check"] = sec;
    return pass;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Task parse_task(const std::string& name) {
    if (name == "validate") return Task::validate;
    if (name == "flow") return Task::flow;
    if (name == "certify") return Task::certify;
    if (name == "escape-check" || name == "escape_check") return Task::escape_check;
    if (name == "transport-check" || name == "transport_check") return Task::transport_check;
    if (name == "quantize-check" || name == "quantize_check") return Task::quantize_check;
    if (name == "all") return Task::all;
    throw ConfigError("unknown task '" + name + "'");
}

std::string task_name(Task t) {
    switch (t) {
        case Task::validate: return "validate";
        case Task::flow: return "flow";
        case Task::certify: return "certify";
        case Task::escape_check: return "escape_check";
        case Task::transport_check: return "transport_check";
        case Task::quantize_check: return "quantize_check";
        case Task::all: return "all";
    }
    return "unknown";
}

RunOutcome run_tasks(const RunConfig& cfg, Task task) {
    const fs::path out(cfg.run.out_dir);
    fs::create_directories(out);

    const Symbol sym = make_symbol(cfg.symbol);

    json tasks_json = json::object();
    json timing = json::object();
    TaskCtx ctx{cfg, sym, out, &tasks_json};

    std::vector<std::pair<Task, std::function<bool(TaskCtx&)>>> plan;
    auto want = [&](Task t) { return task == Task::all || task == t; };
    if (want(Task::validate)) plan.emplace_back(Task::validate, task_validate);
    if (want(Task::flow)) plan.emplace_back(Task::flow, task_flow);
    if (want(Task::certify)) plan.emplace_back(Task::certify, task_certify);
    if (want(Task::escape_check)) plan.emplace_back(Task::escape_check, task_escape_check);
    if (want(Task::transport_check))
        plan.emplace_back(Task::transport_check, task_transport_check);
    if (want(Task::quantize_check))
        plan.emplace_back(Task::quantize_check, task_quantize_check);

    RunOutcome outcome;
    const auto t_start = std::chrono::steady_clock::now();
    for (auto& [t, fn] : plan) {
        const std::string name = task_name(t);
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = fn(ctx);
        } catch (const std::exception& e) {
            tasks_json[name] = json{{"error", e.what()}, {"pass", false}};
        }
        const auto t1 = std::chrono::steady_clock::now();
        timing[name] = std::chrono::duration<double>(t1 - t0).count();
        if (!ok) outcome.failed_tasks.push_back(name);
    }
    outcome.pass = outcome.failed_tasks.empty();

    // Canonical config text: exactly the recognized keys, in file order.
    std::string canon;
    json config_echo = json::object();
    for (const auto& [k, v] : cfg.entries) {
        canon += k + "=" + v + "\n";
        config_echo[k] = v;
    }
    char hash_buf[24];
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon)));

    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["version"] = kVersion;
    report["task"] = task_name(task);
    report["config"] = config_echo;
    report["config_hash"] = std::string(hash_buf);
    report["rng_seed"] = cfg.run.rng_seed;
    json sym_json;
    sym_json["kind"] = cfg.symbol.kind;
    sym_json["description"] = sym.description();
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(sym.description())));
    sym_json["hash"] = std::string(hash_buf);
    sym_json["dim"] = sym.dim();
    sym_json["order"] = sym.order();
    sym_json["mu"] = sym.mu();
    report["symbol"] = sym_json;
    report["tasks"] = tasks_json;
    report["summary"] =
        json{{"pass", outcome.pass}, {"failed_tasks", outcome.failed_tasks}};

    const fs::path report_path = out / "report.json";
    write_text_atomic(report_path, report.dump(2) + "\n");
    outcome.report_path = report_path.string();

    const auto t_end = std::chrono::steady_clock::now();
    json timing_root;
    timing_root["total_seconds"] = std::chrono::duration<double>(t_end - t_start).count();
    timing_root["tasks"] = timing;
    write_text_atomic(out / "timing.json", timing_root.dump(2) + "\n");
    return outcome;
}

}  // namespace hamesc
