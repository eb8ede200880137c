#include "doctest.h"

#include <cmath>

#include "hamesc/flow.hpp"
#include "hamesc/rng.hpp"
#include "hamesc/symbol.hpp"

using namespace hamesc;

namespace {

PhasePoint pt2(double x0, double x1, double k0, double k1) {
    PhasePoint p;
    p.x = Eigen::Vector2d(x0, x1);
    p.xi = Eigen::Vector2d(k0, k1);
    return p;
}

Symbol bump_kg() {
    return make_klein_gordon(MetricSpec::minkowski_bump(2, 0.1, 1.0), {}, {}, 1.0);
}

}  // namespace

TEST_CASE("free flow is the straight line x + 2 t xi") {
    const Symbol sym = make_free_laplacian(2);
    const Trajectory traj = integrate(sym, pt2(0, 0, 1.0, 0.0), 3.0);
    REQUIRE(traj.completed());
    CHECK(traj.direction() == 1);
    CHECK((traj.position_at(3.0) - Eigen::Vector2d(6.0, 0.0)).norm() <= 1e-10);
    CHECK((traj.momentum_at(3.0) - Eigen::Vector2d(1.0, 0.0)).norm() <= 1e-12);
    // Dense output between nodes stays on the line too.
    for (double t : {0.1, 0.77, 1.9, 2.5}) {
        CHECK((traj.position_at(t) - Eigen::Vector2d(2.0 * t, 0.0)).norm() <= 1e-10);
    }
    CHECK(traj.drift() <= 1e-12);
}

TEST_CASE("Minkowski flow follows the constant field") {
    const Symbol sym = make_klein_gordon(MetricSpec::minkowski(2), {}, {}, 1.0);
    const Trajectory traj = integrate(sym, pt2(0, 0, 1.0, 1.0), 1.0);
    REQUIRE(traj.completed());
    CHECK((traj.position_at(1.0) - Eigen::Vector2d(2.0, -2.0)).norm() <= 1e-10);
    CHECK((traj.momentum_at(1.0) - Eigen::Vector2d(1.0, 1.0)).norm() <= 1e-12);
}

TEST_CASE("backward integration runs t downward and reports direction") {
    const Symbol sym = make_free_laplacian(2);
    const Trajectory traj = integrate(sym, pt2(1.0, 2.0, 0.5, -0.5), -4.0);
    REQUIRE(traj.completed());
    CHECK(traj.direction() == -1);
    CHECK(traj.t_end() == -4.0);
    CHECK(traj.covers(-3.3));
    CHECK_FALSE(traj.covers(0.5));
    CHECK((traj.position_at(-4.0) - (Eigen::Vector2d(1.0, 2.0) + (-4.0) * Eigen::Vector2d(1.0, -1.0)))
              .norm() <= 1e-10);
}

TEST_CASE("conservation drift stays below tolerance on the bump metric") {
    const Symbol sym = bump_kg();
    CounterRng rng(3);
    for (int i = 0; i < 4; ++i) {
        PhasePoint seed;
        seed.x = rng.uniform_in_box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
        seed.xi = rng.unit_vector(2);
        const Trajectory traj = integrate(sym, seed, 50.0);
        REQUIRE(traj.completed());
        CHECK(traj.drift() <= 1e-8);
        // Node-level drift is what the aggregate reports.
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.times().size(); ++k)
            worst = std::max(worst, traj.drift_at_node(k));
        CHECK(worst == traj.drift());
    }
}

TEST_CASE("time reversal returns to the seed") {
    const Symbol sym = bump_kg();
    const PhasePoint seed = pt2(0.3, -0.2, 0.9, 0.45);
    const Trajectory fwd = integrate(sym, seed, 10.0);
    REQUIRE(fwd.completed());
    const Trajectory back = integrate(sym, fwd.at(10.0), -10.0);
    REQUIRE(back.completed());
    const PhasePoint ret = back.at(-10.0);
    CHECK((ret.x - seed.x).norm() <= 1e-8);
    CHECK((ret.xi - seed.xi).norm() <= 1e-8);
}

TEST_CASE("escape stop radius halts with the documented flag") {
    const Symbol sym = make_free_laplacian(2);
    IntegratorOpts opts;
    opts.escape_stop_radius = 5.0;
    const Trajectory traj = integrate(sym, pt2(0, 0, 1.0, 0.0), 100.0, opts);
    CHECK(traj.status() == FlowStatus::stopped_at_radius);
    CHECK_FALSE(traj.completed());
    CHECK(traj.position_at(traj.t_end()).norm() >= 5.0 - 1e-6);
    CHECK(traj.t_end() < 100.0);
}

TEST_CASE("scaling residual is zero at lambda 1 and small otherwise") {
    const Symbol free2 = make_free_laplacian(2);
    const PhasePoint seed = pt2(0, 0, 1.0, 0.0);
    CHECK(scaling_residual(free2, seed, 1.0, 1.0) == 0.0);
    CHECK(scaling_residual(free2, seed, 2.0, 1.0) <= 1e-9);

    // Homogeneity of the principal part holds off the null cone too, so any
    // seed exercises it.
    const Symbol kg = bump_kg();
    const PhasePoint seed_kg = pt2(0.2, 0.1, 0.9, 0.45);
    CHECK(scaling_residual(kg, seed_kg, 3.0, 0.5) <= 1e-7);
    for (double lam : {0.5, 2.0, 10.0}) {
        CHECK(scaling_residual(kg, seed_kg, lam, 1.0) <= 1e-6);
    }
}

TEST_CASE("characteristic sampling lands on the null cone") {
    const Symbol sym = make_klein_gordon(MetricSpec::minkowski(2), {}, {}, 1.0);
    const CharSample cs = sample_characteristic(sym, Eigen::Vector2d(-1, -1),
                                                Eigen::Vector2d(1, 1), 32, 5);
    CHECK_FALSE(cs.elliptic_flag);
    REQUIRE(cs.points.size() > 0);
    CHECK(cs.points.size() <= 32);
    for (const auto& p : cs.points) {
        CHECK(std::abs(p.xi.norm() - 1.0) <= 1e-12);
        CHECK(std::abs(sym.eval(p, SymbolPart::principal)) <= cs.tol_char);
        // Null cone of xi1^2 = xi2^2: components match up to sign.
        CHECK(std::abs(std::abs(p.xi[0]) - std::abs(p.xi[1])) <= 1e-10);
    }
}

TEST_CASE("characteristic sampling flags an elliptic symbol") {
    const Symbol sym = make_free_laplacian(2);
    const CharSample cs = sample_characteristic(sym, Eigen::Vector2d(-1, -1),
                                                Eigen::Vector2d(1, 1), 16, 5);
    CHECK(cs.points.empty());
    CHECK(cs.elliptic_flag);
    CHECK(cs.discarded > 0);
}

TEST_CASE("bump metric null directions approach the Minkowski cone far out") {
    const Symbol sym = bump_kg();
    const Eigen::Vector2d at(5.0, 0.0);
    const CharSample cs = sample_characteristic(sym, at, at, 16, 9);
    REQUIRE(cs.points.size() > 0);
    // The bump is exp(-25) * 0.1 at |x| = 5; the cone tilt is of that order.
    for (const auto& p : cs.points) {
        CHECK(std::abs(std::abs(p.xi[0]) - std::abs(p.xi[1])) <= 1e-6);
    }
}

TEST_CASE("integration rejects bad arguments") {
    const Symbol sym = make_free_laplacian(2);
    CHECK_THROWS(integrate(sym, pt2(0, 0, 1, 0), 0.0));
    IntegratorOpts bad;
    bad.rtol = -1.0;
    CHECK_THROWS(integrate(sym, pt2(0, 0, 1, 0), 1.0, bad));
    PhasePoint nan_seed = pt2(0, 0, 1, 0);
    nan_seed.x[0] = std::nan("");
    CHECK_THROWS(integrate(sym, nan_seed, 1.0));
}
