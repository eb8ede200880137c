#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hamesc/escape_weight.hpp"
#include "hamesc/fd.hpp"
#include "hamesc/symbol.hpp"
#include "hamesc/weyl.hpp"

using namespace hamesc;

namespace {

double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

Eigen::VectorXd state_window_vector(const Grid& g) {
    Eigen::VectorXd w(g.N());
    for (int j = 0; j < g.N(); ++j) w[j] = window_x(g, g.x_node(j));
    return w;
}

// Min eigenvalue after compressing to the interior: W Op(a) W with
// W = diag(window_x). Compression of a PSD operator stays PSD, so any
// negativity left over is discretization error, not window artifact.
double windowed_margin(const Grid& g, const PhaseSymbol1d& a) {
    auto op = weyl_quantize(g, a, "probe");
    const Eigen::VectorXd w = state_window_vector(g);
    GridOperator cut{g, w.asDiagonal() * op.matrix * w.asDiagonal(), "probe-cut"};
    return positivity_margin(cut);
}

}  // namespace

TEST_CASE("grid exposes uniform nodes and rejects bad shapes") {
    const Grid g(8.0, 64);
    CHECK(g.L() == 8.0);
    CHECK(g.N() == 64);
    CHECK(g.dx() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.x_node(0) == -8.0);
    CHECK(g.x_node(32) == doctest::Approx(0.0).epsilon(1e-15));

    const double dxi = std::numbers::pi / g.L();
    CHECK(g.xi_node(32) == 0.0);
    CHECK(g.xi_node(33) == doctest::Approx(dxi).epsilon(1e-15));
    CHECK(g.xi_node(0) == doctest::Approx(-g.xi_max()).epsilon(1e-15));
    CHECK(g.xi_max() == doctest::Approx(32.0 * dxi).epsilon(1e-15));

    CHECK_THROWS_AS(Grid(0.0, 64), std::domain_error);
    CHECK_THROWS_AS(Grid(-1.0, 64), std::domain_error);
    CHECK_THROWS_AS(Grid(8.0, 63), std::domain_error);
    CHECK_THROWS_AS(Grid(8.0, 0), std::domain_error);
    CHECK_THROWS_AS(Grid(8.0, 4096), std::domain_error);
}

TEST_CASE("constant one quantizes to the identity bitwise") {
    const Grid g(8.0, 64);
    const auto op = weyl_quantize(g, [](double, double) { return 1.0; }, "one");
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(g.N(), g.N());
    CHECK(max_abs_diff(op.matrix, eye) == 0.0);
    CHECK(op.symbol_tag == "one");

    CHECK(positivity_margin(op) == doctest::Approx(1.0).epsilon(1e-14));
    const auto spec = hermitian_spectrum_summary(op);
    CHECK(spec.min_eig == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spec.max_eig == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spec.herm_defect == 0.0);
}

TEST_CASE("position-only symbols quantize to exact multiplication operators") {
    const Grid g(8.0, 64);
    const auto f = [](double x) { return std::sin(x) + 0.3 * x * x; };
    const auto op = weyl_quantize(g, [&](double x, double) { return f(x); }, "f(x)");
    for (int j = 0; j < g.N(); ++j) {
        for (int k = 0; k < g.N(); ++k) {
            if (j == k)
                CHECK(op.matrix(j, j).real() == doctest::Approx(f(g.x_node(j))).epsilon(1e-14));
            else
                CHECK(std::abs(op.matrix(j, k)) == 0.0);
        }
    }
}

TEST_CASE("frequency-only symbols match the direct oscillatory sum") {
    const Grid g(8.0, 64);
    const auto a = [](double xi) { return xi * xi; };
    const auto op = weyl_quantize(g, [&](double, double xi) { return a(xi); }, "xi^2");

    // matrix[j,k] = (1/N) sum_l a(xi_l) e^{i (x_j - x_k) xi_l}, summed directly.
    const int n = g.N();
    Eigen::MatrixXcd ref(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            std::complex<double> acc = 0.0;
            for (int l = 0; l < n; ++l) {
                const double xi = g.xi_node(l);
                acc += a(xi) * std::exp(std::complex<double>(0.0, (g.x_node(j) - g.x_node(k)) * xi));
            }
            ref(j, k) = acc / static_cast<double>(n);
        }
    }
    CHECK(max_abs_diff(op.matrix, ref) <= 1e-12);

    // Such operators are diagonal in the DFT basis, so the spectrum is the
    // set of sampled symbol values.
    const auto spec = hermitian_spectrum_summary(op);
    CHECK(spec.max_eig == doctest::Approx(g.xi_max() * g.xi_max()).epsilon(1e-12));
    CHECK(std::abs(spec.min_eig) <= 1e-11);
}

TEST_CASE("real symbols give Hermitian matrices and quantization is linear") {
    const Grid g(8.0, 96);
    const PhaseSymbol1d cases[] = {
        [](double x, double xi) { return std::exp(-(x * x + xi * xi)); },
        [](double x, double xi) { return x * xi * std::exp(-0.2 * (x * x + xi * xi)); },
        [](double x, double xi) { return std::cos(x) * std::exp(-0.1 * xi * xi); },
    };
    for (const auto& a : cases) {
        const auto op = weyl_quantize(g, a, "case");
        CHECK(hermitian_spectrum_summary(op).herm_defect <= 1e-12);
    }

    const auto sum = weyl_quantize(
        g, [&](double x, double xi) { return cases[0](x, xi) + 2.0 * cases[2](x, xi); }, "sum");
    const auto a0 = weyl_quantize(g, cases[0], "a0");
    const auto a2 = weyl_quantize(g, cases[2], "a2");
    CHECK(max_abs_diff(sum.matrix, a0.matrix + 2.0 * a2.matrix) <= 1e-13);
}

TEST_CASE("weighted norm reproduces closed forms on the torus") {
    const Grid g(std::numbers::pi, 64);
    const int n = g.N();

    // Plain L2 of the constant function on [-pi, pi): sqrt(2 pi).
    Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(n);
    CHECK(weighted_norm(g, 0.0, 0.0, ones) ==
          doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));

    // e^{i 3 x} is a single DFT mode, so the s-weight picks up <3> = sqrt(10).
    Eigen::VectorXcd mode(n);
    for (int j = 0; j < n; ++j)
        mode[j] = std::exp(std::complex<double>(0.0, 3.0 * g.x_node(j)));
    CHECK(weighted_norm(g, 1.0, 0.0, mode) ==
          doctest::Approx(std::sqrt(10.0 * 2.0 * std::numbers::pi)).epsilon(1e-14));

    // A spike only feels the <x> weight at its own node (the DFT is unitary).
    Eigen::VectorXcd spike = Eigen::VectorXcd::Zero(n);
    const int j0 = 40;
    spike[j0] = 1.0;
    const double x0 = g.x_node(j0);
    CHECK(weighted_norm(g, 0.0, 2.0, spike) ==
          doctest::Approx(std::sqrt(g.dx()) * (1.0 + x0 * x0)).epsilon(1e-13));

    Eigen::VectorXcd wrong(n / 2);
    wrong.setZero();
    CHECK_THROWS_AS(weighted_norm(g, 0.0, 0.0, wrong), std::domain_error);
}

TEST_CASE("interior windows have the documented plateaus") {
    const Grid g(10.0, 64);
    const double L = g.L();

    CHECK(window_x(g, 0.0) == 1.0);
    CHECK(window_x(g, 0.45 * L) == 1.0);
    CHECK(window_x(g, -0.45 * L) == 1.0);
    CHECK(window_x(g, 0.68 * L) == 0.0);
    CHECK(window_x(g, -L) == 0.0);
    const double mid = window_x(g, 0.55 * L);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);

    CHECK(window_freq(g, 0.30 * g.xi_max()) == 1.0);
    CHECK(window_freq(g, -0.30 * g.xi_max()) == 1.0);
    CHECK(window_freq(g, 0.45 * g.xi_max()) == 0.0);

    CHECK(window_sym(g, 0.72 * L) == 1.0);
    CHECK(std::abs(window_sym(g, 0.95 * L)) <= 1e-15);
    CHECK(window_sym(g, L) == 0.0);
    CHECK(window_sym_deriv(g, 0.5 * L) == 0.0);
    CHECK(window_sym_deriv(g, 0.99 * L) == 0.0);
    CHECK(window_sym_deriv(g, 0.85 * L) < 0.0);

    for (double x : {0.74 * L, 0.80 * L, 0.88 * L, -0.85 * L}) {
        const double fd = scalar_derivative_fd([&](double t) { return window_sym(g, t); }, x);
        CHECK(window_sym_deriv(g, x) == doctest::Approx(fd).epsilon(1e-8));
    }
}

TEST_CASE("commutators match Poisson brackets through the interior window") {
    const Grid g(8.0, 128);

    // Multiplication operators commute entry by entry, and the bracket of two
    // position-only symbols vanishes, so this case is exact.
    const auto zero = commutator_vs_bracket(
        g, [](double x, double) { return x; },
        [](double x, double) { return std::exp(-x * x); }, [](double, double) { return 0.0; });
    CHECK(zero.raw_residual == 0.0);
    CHECK(zero.windowed_residual == 0.0);

    // p = xi against a Gaussian bump. The raw residual is dominated by the
    // frequency wrap of the non-periodic multiplier xi (it grows with N), so
    // the continuum identity is read off the windowed residual.
    const auto drift = commutator_vs_bracket(
        g, [](double, double xi) { return xi; },
        [](double x, double) { return std::exp(-x * x); },
        [](double x, double) { return -2.0 * x * std::exp(-x * x); });
    CHECK(drift.windowed_residual <= 1e-10);
    CHECK(drift.raw_residual > 1.0);

    // p = xi^2 against b = x window_sym: {p, b} = 2 xi (w + x w').
    const Grid g256(8.0, 256);
    const auto transport = commutator_vs_bracket(
        g256, [](double, double xi) { return xi * xi; },
        [&](double x, double) { return x * window_sym(g256, x); },
        [&](double x, double xi) {
            return 2.0 * xi * (window_sym(g256, x) + x * window_sym_deriv(g256, x));
        });
    CHECK(transport.windowed_residual <= 1e-8);
}

TEST_CASE("windowed commutator residual shrinks under grid refinement") {
    const Symbol free1 = make_free_laplacian(1);
    const EscapeWeightParams wp;
    const double L = 8.0;

    // Radial weight profile frozen at a frequency on its plateau, then
    // periodized; the bracket with xi^2 is 2 xi b'(x).
    const auto profile = [&](const Grid& g) {
        return [&free1, &wp, g](double x) {
            PhasePoint pt;
            pt.x = Eigen::VectorXd::Constant(1, x);
            pt.xi = Eigen::VectorXd::Constant(1, 3.0);
            return weight_b(free1, wp, pt) * window_sym(g, x);
        };
    };

    std::vector<double> residuals;
    for (int n : {128, 256, 512}) {
        const Grid g(L, n);
        const auto b = profile(g);
        const auto check = commutator_vs_bracket(
            g, [](double, double xi) { return xi * xi; },
            [&](double x, double) { return b(x); },
            [&](double x, double xi) { return 2.0 * xi * scalar_derivative_fd(b, x); });
        residuals.push_back(check.windowed_residual);
    }
    CHECK(residuals[0] <= 1e-3);
    CHECK(residuals[1] <= residuals[0] / 2.0);
    CHECK(residuals[2] <= residuals[1] / 2.0);
    CHECK(residuals[2] <= 5e-8);
}

TEST_CASE("quantization of nonnegative symbols is positive on the interior") {
    // Frequency-only: the spectrum is the sampled symbol, nonnegative up to
    // eigensolver rounding.
    const Grid g(8.0, 128);
    const auto kinetic = weyl_quantize(g, [](double, double xi) { return xi * xi; }, "xi^2");
    CHECK(positivity_margin(kinetic) >= -1e-11);

    // Separated x and xi parts stay essentially positive without a window.
    const auto separated = weyl_quantize(
        g,
        [](double x, double xi) {
            return std::exp(-x * x) + xi * xi * std::exp(-0.1 * xi * xi);
        },
        "separated");
    CHECK(positivity_margin(separated) >= -1e-12);

    // A jointly-varying Gaussian picks up spurious matrix entries where the
    // midpoint of a wrap-adjacent node pair aliases to the domain center, so
    // the raw margin stays order-one negative at every N. Compressing to the
    // interior removes exactly those pairs.
    const auto gauss = [](double x, double xi) { return std::exp(-0.5 * (x * x + xi * xi)); };
    const auto raw = weyl_quantize(g, gauss, "gauss");
    CHECK(positivity_margin(raw) <= -0.2);
    CHECK(positivity_margin(raw) >= -0.35);

    // On the interior the defect is pure quadrature error: it collapses from
    // the coarse grid to the refined one before hitting the rounding floor.
    const double eps16 = -windowed_margin(Grid(8.0, 16), gauss);
    const double eps32 = -windowed_margin(Grid(8.0, 32), gauss);
    CHECK(eps16 <= 1e-3);
    CHECK(eps32 <= 1e-8);
    CHECK(eps32 < eps16 / 100.0);
    CHECK(windowed_margin(Grid(8.0, 256), gauss) >= -5e-12);

    // Top of the spectrum for exp(-(x^2+xi^2)) approaches 1/2, the ground
    // eigenvalue of the corresponding continuum operator.
    const auto tight = weyl_quantize(
        g, [](double x, double xi) { return std::exp(-(x * x + xi * xi)); }, "tight");
    CHECK(hermitian_spectrum_summary(tight).max_eig == doctest::Approx(0.5).epsilon(0.02));

    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(4, 4);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(positivity_margin(GridOperator{Grid(8.0, 4), bad, "bad"}),
                    std::domain_error);
}

TEST_CASE("matched interior entries converge under simultaneous refinement") {
    // Compare entries at shared physical nodes between (L, N) and (2L, 4N):
    // dx halves, kernels scale by the frequency step, and only pairs with
    // |x_j - x_k| <= L see the same torus geometry on both grids.
    const auto entry_error = [](double L, int n, const PhaseSymbol1d& a) {
        const Grid coarse(L, n);
        const Grid fine(2.0 * L, 4 * n);
        const auto ac = weyl_quantize(coarse, a, "coarse");
        const auto af = weyl_quantize(fine, a, "fine");
        double worst = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                if (std::abs(coarse.x_node(j) - coarse.x_node(k)) > L) continue;
                const std::complex<double> f = 2.0 * af.matrix(n + 2 * j, n + 2 * k);
                worst = std::max(worst, std::abs(ac.matrix(j, k) - f));
            }
        }
        return worst;
    };

    const auto bump = [](double x, double xi) {
        const double r2 = (x * x + xi * xi) / 9.0;
        return r2 >= 1.0 ? 0.0 : std::pow(1.0 - r2, 3);
    };
    const double e1 = entry_error(6.0, 64, bump);
    const double e2 = entry_error(12.0, 256, bump);
    CHECK(e1 <= 2e-4);
    CHECK(e2 <= e1 / 4.0);
}

TEST_CASE("states localized where the weight vanishes pass through quietly") {
    const Symbol free1 = make_free_laplacian(1);
    const EscapeWeightParams wp;
    const Grid g(16.0, 256);
    const auto op = weyl_quantize(
        g,
        [&](double x, double xi) {
            PhasePoint pt;
            pt.x = Eigen::VectorXd::Constant(1, x);
            pt.xi = Eigen::VectorXd::Constant(1, xi);
            return weight_b(free1, wp, pt) * window_sym(g, x);
        },
        "weight");

    // The symbol vanishes on |x| <= M union |xi| <= nu. A Gaussian sitting
    // there still leaks at the percent level: the frequency cutoff lives at
    // unit scale, so the kernel keeps order-one-width tails, and no state is
    // simultaneously tiny beyond both cutoffs. Anything well under that
    // structural floor would mean the cutoffs moved.
    for (double s : {0.5, 1.0}) {
        Eigen::VectorXcd phi(g.N());
        for (int j = 0; j < g.N(); ++j) {
            const double x = g.x_node(j);
            phi[j] = std::exp(-x * x / (2.0 * s * s));
        }
        CHECK((op.matrix * phi).norm() / phi.norm() <= 1e-2);
    }
}

TEST_CASE("operator dumps use the documented binary layout") {
    const Grid g(4.0, 4);
    const auto op = weyl_quantize(g, [](double, double) { return 1.0; }, "one");
    const std::filesystem::path path = std::filesystem::temp_directory_path() / "hamesc_dump_test.wgop";
    write_operator_dump(op, path.string());

    CHECK(std::filesystem::file_size(path) == 16 + 16u * 4 * 4);

    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "WGOP");
    std::uint32_t n = 0, reserved = 0, zeros = 0;
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&reserved), 4);
    in.read(reinterpret_cast<char*>(&zeros), 4);
    CHECK(n == 4);
    CHECK(zeros == 0);

    // Row-major complex128: the identity starts 1+0i, 0+0i.
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), 8);
    in.read(reinterpret_cast<char*>(&im), 8);
    CHECK(re == 1.0);
    CHECK(im == 0.0);
    in.read(reinterpret_cast<char*>(&re), 8);
    in.read(reinterpret_cast<char*>(&im), 8);
    CHECK(re == 0.0);
    CHECK(im == 0.0);
    in.close();
    std::filesystem::remove(path);
}

TEST_CASE("resolvent estimate experiment is stable in Im z and under refinement") {
    const Symbol free1 = make_free_laplacian(1);
    const EscapeWeightParams wp;

    EstimateOpts opts;
    opts.trials = 8;
    opts.rng_seed = 99;
    const auto report = radial_estimate_experiment(free1, wp, opts);

    CHECK(report.pass);
    CHECK(report.boundary_violations == 0);
    CHECK(report.k == 0.0);
    CHECK(report.imz_ratio >= 1.0);
    CHECK(report.imz_ratio <= opts.imz_ratio_limit);
    CHECK(report.refine_ratio <= opts.refine_limit);

    // Three Im z values at the base and refined grid each.
    REQUIRE(report.cases.size() == 6);
    for (const auto& c : report.cases) {
        CHECK((c.n == opts.n_base || c.n == 2 * opts.n_base));
        CHECK(c.trials_used + c.trials_skipped == opts.trials);
        CHECK(c.trials_used > 0);
        CHECK(c.c_hat > 0.0);
    }

    EstimateOpts bad = opts;
    bad.trials = 0;
    CHECK_THROWS_AS(radial_estimate_experiment(free1, wp, bad), std::domain_error);
    EstimateOpts tiny = opts;
    tiny.L = 6.0;
    CHECK_THROWS_AS(radial_estimate_experiment(free1, wp, tiny), std::domain_error);
    CHECK_THROWS_AS(radial_estimate_experiment(make_free_laplacian(2), wp, opts),
                    std::domain_error);
}
