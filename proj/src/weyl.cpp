#include "hamesc/weyl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "hamesc/parallel.hpp"
#include "hamesc/rng.hpp"
#include "hamesc/smooth_step.hpp"

namespace hamesc {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

PhasePoint pt1(double x, double xi) {
    PhasePoint pt;
    pt.x = Eigen::VectorXd::Constant(1, x);
    pt.xi = Eigen::VectorXd::Constant(1, xi);
    return pt;
}

// Unitary DFT onto the shifted frequency ladder, cached per grid: row li is
// (1/sqrt(N)) e^{-i x_j xi_l}. Dense is fine at the sizes this module allows.
const Eigen::MatrixXcd& unitary_dft(const Grid& g) {
    static std::mutex lock;
    static std::map<std::pair<double, int>, Eigen::MatrixXcd> cache;
    std::lock_guard<std::mutex> guard(lock);
    auto key = std::make_pair(g.L(), g.N());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const int n = g.N();
    Eigen::MatrixXcd f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int li = 0; li < n; ++li)
        for (int j = 0; j < n; ++j)
            f(li, j) = scale * std::polar(1.0, -g.x_node(j) * g.xi_node(li));
    return cache.emplace(key, std::move(f)).first->second;
}

double spectral_norm(const Eigen::MatrixXcd& a) {
    // ||A||_2 through the top eigenvalue of A^* A; robust for the mildly
    // non-Hermitian residuals this module produces.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.adjoint() * a,
                                                       Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

Grid::Grid(double L, int N) : L_(L), N_(N) {
    if (!(L > 0.0)) throw std::domain_error("grid half-length must be positive");
    if (N < 2 || N > 2048 || N % 2 != 0)
        throw std::domain_error("grid size must be even and within [2, 2048]");
}

double Grid::xi_node(int li) const { return kPi * (li - N_ / 2) / L_; }

double Grid::xi_max() const { return kPi * (N_ / 2) / L_; }

GridOperator weyl_quantize(const Grid& grid, const PhaseSymbol1d& a, const std::string& tag,
                           int jobs) {
    const int n = grid.N();
    const int half = n / 2;

    // Midpoints depend on j + k only, so the symbol is evaluated on a
    // (2N-1) x N table instead of N^2 pairs.
    std::vector<std::vector<double>> table(static_cast<std::size_t>(2 * n - 1));
    parallel_for(2 * n - 1, jobs, [&](long s) {
        const double mid = -grid.L() + 0.5 * s * grid.dx();
        auto& row = table[static_cast<std::size_t>(s)];
        row.resize(static_cast<std::size_t>(n));
        for (int li = 0; li < n; ++li) {
            const double val = a(mid, grid.xi_node(li));
            if (!std::isfinite(val))
                throw std::runtime_error("weyl_quantize: symbol not finite at midpoint x=" +
                                         std::to_string(mid) +
                                         ", xi=" + std::to_string(grid.xi_node(li)));
            row[static_cast<std::size_t>(li)] = val;
        }
    });

    std::vector<cd> twiddle(static_cast<std::size_t>(half));
    for (int r = 0; r < half; ++r) twiddle[static_cast<std::size_t>(r)] = std::polar(1.0, 2.0 * kPi * r / n);

    GridOperator op{grid, Eigen::MatrixXcd(n, n), tag};
    parallel_for(n, jobs, [&](long j) {
        // Phase indices are accumulated per residue first; pairing r with
        // r + N/2 through one subtraction makes xi-independent symbols come
        // out exactly diagonal (equal bucket counts cancel bitwise).
        std::vector<double> bucket(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const int d = static_cast<int>(j) - k;
            const auto& row = table[static_cast<std::size_t>(j + k)];
            std::fill(bucket.begin(), bucket.end(), 0.0);
            const int dmod = ((d % n) + n) % n;
            // l starts at -N/2: first residue is (-d*N/2) mod N.
            int r = static_cast<int>(
                ((static_cast<long long>(-d) * half) % n + n) % n);
            for (int li = 0; li < n; ++li) {
                bucket[static_cast<std::size_t>(r)] += row[static_cast<std::size_t>(li)];
                r += dmod;
                if (r >= n) r -= n;
            }
            cd acc(0.0, 0.0);
            for (int rr = 0; rr < half; ++rr) {
                const double diff = bucket[static_cast<std::size_t>(rr)] -
                                    bucket[static_cast<std::size_t>(rr + half)];
                if (diff != 0.0) acc += diff * twiddle[static_cast<std::size_t>(rr)];
            }
            op.matrix(static_cast<Eigen::Index>(j), k) = acc / static_cast<double>(n);
        }
    });
    return op;
}

double weighted_norm(const Grid& grid, double s, double l, const Eigen::VectorXcd& vec) {
    const int n = grid.N();
    if (vec.size() != n) throw std::domain_error("weighted_norm: vector length mismatch");
    Eigen::VectorXcd w(n);
    for (int j = 0; j < n; ++j) {
        const double x = grid.x_node(j);
        w[j] = std::pow(1.0 + x * x, 0.5 * l) * vec[j];
    }
    Eigen::VectorXcd f = unitary_dft(grid) * w;
    double acc = 0.0;
    for (int li = 0; li < n; ++li) {
        const double xi = grid.xi_node(li);
        const double t = std::pow(1.0 + xi * xi, 0.5 * s) * std::abs(f[li]);
        acc += t * t;
    }
    return std::sqrt(grid.dx() * acc);
}

// The plateau/support fractions below are chosen so that the gap between the
// frequency window edge and the Nyquist wrap is wide: the wrap is where the
// multiplier xi^2 has its periodization cusp, and the state window's spectral
// tail has to bridge that gap before any of the cusp energy can leak into the
// windowed residual. Edges at 0.45 L and 0.45 xi_max keep the commutator
// identity clean to ~1e-10 on a 256-point grid.
double window_x(const Grid& grid, double x) {
    return 1.0 - smooth_step((std::abs(x) / grid.L() - 0.45) / 1.84);
}

double window_freq(const Grid& grid, double xi) {
    return 1.0 - smooth_step((std::abs(xi) / grid.xi_max() - 0.30) / 1.2);
}

double window_sym(const Grid& grid, double x) {
    return 1.0 - smooth_step((std::abs(x) / grid.L() - 0.72) / 1.84);
}

double window_sym_deriv(const Grid& grid, double x) {
    const double d = -smooth_step_deriv((std::abs(x) / grid.L() - 0.72) / 1.84) /
                     (1.84 * grid.L());
    return x >= 0.0 ? d : -d;
}

CommutatorCheck commutator_vs_bracket(const Grid& grid, const PhaseSymbol1d& p,
                                      const PhaseSymbol1d& b, const PhaseSymbol1d& bracket,
                                      int jobs) {
    const GridOperator op_p = weyl_quantize(grid, p, "p", jobs);
    const GridOperator op_b = weyl_quantize(grid, b, "b", jobs);
    const GridOperator op_c = weyl_quantize(grid, bracket, "{p,b}", jobs);
    const cd i_unit(0.0, 1.0);
    Eigen::MatrixXcd diff =
        i_unit * (op_p.matrix * op_b.matrix - op_b.matrix * op_p.matrix) - op_c.matrix;

    CommutatorCheck out;
    out.raw_residual = spectral_norm(diff);

    const int n = grid.N();
    Eigen::VectorXcd wx(n), wf(n);
    for (int j = 0; j < n; ++j) wx[j] = window_x(grid, grid.x_node(j));
    for (int li = 0; li < n; ++li) wf[li] = window_freq(grid, grid.xi_node(li));
    const Eigen::MatrixXcd& f = unitary_dft(grid);
    Eigen::MatrixXcd proj = f.adjoint() * wf.asDiagonal() * f;
    Eigen::MatrixXcd windowed =
        proj * wx.asDiagonal() * diff * wx.asDiagonal() * proj;
    out.windowed_residual = spectral_norm(windowed);
    return out;
}

double positivity_margin(const GridOperator& op) {
    const double defect = (op.matrix - op.matrix.adjoint()).cwiseAbs().maxCoeff();
    if (defect > 1e-10)
        throw std::domain_error("positivity_margin: operator is not Hermitian (defect " +
                                std::to_string(defect) + ")");
    Eigen::MatrixXcd herm = 0.5 * (op.matrix + op.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

SpectrumSummary hermitian_spectrum_summary(const GridOperator& op) {
    SpectrumSummary out;
    out.herm_defect = (op.matrix - op.matrix.adjoint()).cwiseAbs().maxCoeff();
    Eigen::MatrixXcd herm = 0.5 * (op.matrix + op.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    out.min_eig = es.eigenvalues().minCoeff();
    out.max_eig = es.eigenvalues().maxCoeff();
    return out;
}

void write_operator_dump(const GridOperator& op, const std::string& path) {
    static_assert(std::endian::native == std::endian::little,
                  "dump format is little-endian");
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        const char magic[4] = {'W', 'G', 'O', 'P'};
        const std::uint32_t n = static_cast<std::uint32_t>(op.grid.N());
        const std::uint32_t reserved = 0;
        const std::uint32_t pad = 0;
        out.write(magic, 4);
        out.write(reinterpret_cast<const char*>(&n), 4);
        out.write(reinterpret_cast<const char*>(&reserved), 4);
        out.write(reinterpret_cast<const char*>(&pad), 4);
        for (int j = 0; j < op.grid.N(); ++j)
            for (int k = 0; k < op.grid.N(); ++k) {
                const cd v = op.matrix(j, k);
                const double re = v.real(), im = v.imag();
                out.write(reinterpret_cast<const char*>(&re), 8);
                out.write(reinterpret_cast<const char*>(&im), 8);
            }
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move " + tmp + " into place");
}

namespace {

// 0 below a, 1 above b, smooth between.
double rise(double u, double a, double b) { return smooth_step((u - a) / (8.0 * (b - a))); }

struct TrialSpec {
    double kappa[2];
    cd coeff[2];
    double re_z = 0.0;  // resonant energy: the trial's central frequency squared
};

// Analytic trial function: Gaussian envelope times two nearby random plane
// waves, so each trial is a near-monochromatic wave packet. Re z is matched
// to the packet energy: that is the regime the estimate is about, and it
// keeps the resolvent term from swamping the ratio for the high-frequency
// trials that carry the Sobolev-weighted mass. Being grid-free makes the
// N -> 2N comparison a statement about the same continuum vector.
Eigen::VectorXcd sample_trial(const Grid& g, const TrialSpec& spec) {
    Eigen::VectorXcd phi(g.N());
    for (int j = 0; j < g.N(); ++j) {
        const double x = g.x_node(j);
        const double env = std::exp(-26.0 * (x / g.L()) * (x / g.L()));
        cd v(0.0, 0.0);
        for (int i = 0; i < 2; ++i) v += spec.coeff[i] * std::polar(1.0, spec.kappa[i] * x);
        phi[j] = env * v;
    }
    return phi;
}

double boundary_mass(const Grid& g, const Eigen::VectorXcd& phi) {
    double near = 0.0, total = 0.0;
    for (int j = 0; j < g.N(); ++j) {
        const double m = std::norm(phi[j]);
        total += m;
        if (std::abs(g.x_node(j)) >= 0.95 * g.L()) near += m;
    }
    return total > 0.0 ? near / total : 0.0;
}

}  // namespace

EstimateReport radial_estimate_experiment(const Symbol& sym, const EscapeWeightParams& params,
                                          const EstimateOpts& opts) {
    if (sym.dim() != 1)
        throw std::domain_error("estimate experiment is one-dimensional");
    params.check(sym.mu());
    if (opts.trials <= 0 || opts.im_zs.empty())
        throw std::domain_error("estimate experiment needs trials and im_z values");
    if (!(2.2 * params.M <= 0.7 * opts.L))
        throw std::domain_error("grid too small: the radial cutoff region must sit inside "
                                "the periodization window");

    const int m = sym.order();
    const double k = opts.k;
    const double mu = sym.mu();

    // Fattened comparison weight: slightly larger transition, smaller scales,
    // so its support strictly contains the support of the main weight.
    EscapeWeightParams fat = params;
    fat.delta = params.delta + 0.05;
    fat.M = params.M / 2.0;
    fat.nu = params.nu / 2.0;
    fat.check(mu);

    const double kappa_max = 0.55 * (kPi * (opts.n_base / 2) / opts.L);
    CounterRng base_rng(opts.rng_seed ^ 0x3131ull);
    std::vector<TrialSpec> trials(static_cast<std::size_t>(opts.trials));
    for (int t = 0; t < opts.trials; ++t) {
        CounterRng rng = base_rng.substream(static_cast<std::uint64_t>(t));
        TrialSpec& spec = trials[static_cast<std::size_t>(t)];
        const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
        spec.kappa[0] = sign * rng.uniform(0.4 * kappa_max, kappa_max);
        spec.kappa[1] = spec.kappa[0] + rng.uniform(-1.0, 1.0);
        spec.re_z = spec.kappa[0] * spec.kappa[0];
        for (int i = 0; i < 2; ++i) spec.coeff[i] = cd(rng.normal(), rng.normal());
    }

    EstimateReport rep;
    rep.k = k;
    rep.weight = params;

    const double xcap = 2.2 * params.M;  // outer edge of the shell plateau
    // Frequency plateaus stop at a fixed scale well under the coarse Nyquist
    // so that both grids quantize the same function.
    const double xicap = 0.75 * (kPi * (opts.n_base / 2) / opts.L);

    for (int stage = 0; stage < 2; ++stage) {
        const int n = stage == 0 ? opts.n_base : 2 * opts.n_base;
        Grid g(opts.L, n);

        auto wsym = [&](double x) { return window_sym(g, x); };
        auto b_sym = [&](double x, double xi) {
            return weight_b(sym, params, pt1(x, xi)) * wsym(x);
        };
        auto b_fat = [&](double x, double xi) {
            return weight_b(sym, fat, pt1(x, xi)) * wsym(x);
        };
        auto p_sym = [&](double x, double xi) {
            const PhasePoint pt = pt1(x, xi);
            const double free = sym.eval(pt, SymbolPart::free_part);
            return free + (sym.eval(pt, SymbolPart::full) - free) * wsym(x);
        };
        // Plateau bumps over the two cutoff-transition regions; their norms
        // absorb what the bound gives away there.
        auto s_sym = [&](double x, double xi) {
            const double ax = std::abs(x), axi = std::abs(xi);
            const double px = rise(ax, 0.9 * params.M, params.M) *
                              (1.0 - rise(ax, 2.0 * params.M, xcap));
            const double pxi = rise(axi, 0.9 * params.nu, params.nu) *
                               (1.0 - rise(axi, xicap, 1.2 * xicap));
            return px * pxi * wsym(x);
        };
        auto t_sym = [&](double x, double xi) {
            const double ax = std::abs(x), axi = std::abs(xi);
            const double px = rise(ax, 0.9 * params.M, params.M);
            const double pxi = rise(axi, 0.9 * params.nu, params.nu) *
                               (1.0 - rise(axi, 2.0 * params.nu, 2.2 * params.nu));
            const double decay =
                std::pow(1.0 + x * x, -0.25 * (1.0 + mu - 2.0 * params.gamma));
            return px * pxi * decay * wsym(x);
        };

        const GridOperator op_b = weyl_quantize(g, b_sym, "weight", opts.jobs);
        const GridOperator op_bf = weyl_quantize(g, b_fat, "weight-fattened", opts.jobs);
        const GridOperator op_p = weyl_quantize(g, p_sym, "symbol", opts.jobs);
        const GridOperator op_s = weyl_quantize(g, s_sym, "shell-x", opts.jobs);
        const GridOperator op_t = weyl_quantize(g, t_sym, "shell-xi", opts.jobs);

        for (double imz : opts.im_zs) {
            EstimateCase c;
            c.im_z = imz;
            c.n = n;
            for (int t = 0; t < opts.trials; ++t) {
                const Eigen::VectorXcd phi = sample_trial(g, trials[static_cast<std::size_t>(t)]);
                if (boundary_mass(g, phi) > 1e-10) ++rep.boundary_violations;

                const Eigen::VectorXcd bphi = op_b.matrix * phi;
                const cd z(trials[static_cast<std::size_t>(t)].re_z, imz);
                const Eigen::VectorXcd pz = op_p.matrix * phi - z * phi;
                const Eigen::VectorXcd bpz = op_b.matrix * pz;
                const Eigen::VectorXcd bfphi = op_bf.matrix * phi;
                const Eigen::VectorXcd sphi = op_s.matrix * phi;
                const Eigen::VectorXcd tphi = op_t.matrix * phi;

                const double lhs1 = weighted_norm(g, k + 0.5 * (m - 1), -0.5, bphi);
                const double lhs2 = weighted_norm(g, k, 0.0, bphi);
                const double lhs = lhs1 * lhs1 + imz * lhs2 * lhs2;

                const double r1 = weighted_norm(g, k - 0.5 * (m - 1), 0.5, bpz);
                const double r2 = weighted_norm(g, k - 1.0 + 0.5 * m, -1.0, bfphi);
                const double r3 = weighted_norm(g, k + 0.5 * (m - 1), 0.0, sphi);
                const double r4 = weighted_norm(g, 0.0, 0.0, tphi);
                const double r5 = weighted_norm(g, -4.0, -4.0, phi);
                const double rhs = r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4 + r5 * r5;

                if (rhs < opts.degenerate_floor) {
                    ++c.trials_skipped;
                    continue;
                }
                ++c.trials_used;
                c.c_hat = std::max(c.c_hat, lhs / rhs);
            }
            rep.cases.push_back(c);
        }
    }

    double base_min = std::numeric_limits<double>::infinity();
    double base_max = 0.0;
    double refine = 0.0;
    for (const auto& c : rep.cases) {
        if (c.n != opts.n_base) continue;
        base_min = std::min(base_min, c.c_hat);
        base_max = std::max(base_max, c.c_hat);
        for (const auto& c2 : rep.cases) {
            if (c2.n == 2 * opts.n_base && c2.im_z == c.im_z && c.c_hat > 0.0)
                refine = std::max(refine, std::abs(c2.c_hat / c.c_hat - 1.0));
        }
    }
    rep.imz_ratio = base_min > 0.0 ? base_max / base_min
                                   : std::numeric_limits<double>::infinity();
    rep.refine_ratio = refine;
    rep.pass = rep.imz_ratio <= opts.imz_ratio_limit && rep.refine_ratio <= opts.refine_limit;
    return rep;
}

}  // namespace hamesc
