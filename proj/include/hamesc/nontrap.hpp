#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamesc/flow.hpp"
#include "hamesc/symbol.hpp"

namespace hamesc {

// Second derivative of |x|^2 along the principal flow, expanded in terms of
// the symbol's exact first and mixed second derivatives:
//   2|d_xi p|^2 + 2 sum_jk x_j (d_xk d_xij p)(d_xik p)
//               - 2 sum_jk x_j (d_xij d_xik p)(d_xk p).
double mourre_h2(const Symbol& sym, const PhasePoint& pt);

struct MourreSearch {
    // Candidate inner radii, scanned in order; the first with a positive
    // sampled minimum wins.
    std::vector<double> candidate_radii{1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0};
    // Absolute sampling shells. A candidate R0 is tested on the shells
    // strictly beyond it, so a larger R0 sees a subset of the samples and the
    // reported minimum is monotone in R0 by construction.
    std::vector<double> shells{1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0,
                               12.0, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0};
    int x_directions = 0;   // 0 = dimension default
    int xi_directions = 0;  // 0 = dimension default
    double safety = 1.0;    // multiplies the sampled minimum; must be <= 1
    int jobs = 0;
};

struct MourreConstants {
    bool ok = false;
    std::string failure;
    double R0 = 0.0;
    double M = 0.0;
    PhasePoint witness;  // sample achieving the minimum
    long samples = 0;
};

MourreConstants estimate_mourre(const Symbol& sym, const MourreSearch& search = {});

// R1 = max(R0, safety * (C0 * 2^{(2m+1)/2} / ((1+mu) sqrt(M)))^{1/mu}).
// C0 = 0 returns R0 unchanged.
double escape_radius(double C0, int m, double mu, double M, double R0, double safety = 2.0);

enum class PointStatus { escaped, undecided, suspected_trapped };

std::string to_string(PointStatus s);

struct CertifyPointOpts {
    IntegratorOpts flow;        // escape_stop_radius stays 0: the band needs T_max
    int rentry_threshold = 3;   // dips below R1/2 after exceeding R1
    int band_samples = 2048;    // uniform dense-output samples merged with nodes
    double band_tol = 1e-9;     // slack on the band inclusion check
};

struct PointCertificate {
    PhasePoint seed;
    int direction = 1;  // +1 forward, -1 backward
    PointStatus status = PointStatus::undecided;
    std::string diagnostic;

    double t_exit = -1.0;  // in elapsed (unsigned) time; -1 if never
    double eta0 = 0.0;     // |eta| at t_exit
    double band_lo = 0.0, band_hi = 0.0;
    bool band_ok = false;
    bool radius_monotone_ok = false;  // |y| nondecreasing past t_exit
    int re_entries = 0;

    Eigen::VectorXd eta_plus, v_plus;  // set when escaped
    double fit_exponent_eta = 0.0, fit_exponent_y = 0.0;

    double drift = 0.0;
    double T_max = 0.0;
};

PointCertificate certify_point(const Symbol& sym, const PhasePoint& seed, double R1,
                               double T_max, int direction, const CertifyPointOpts& opts = {});

struct AsymptoticData {
    Eigen::VectorXd eta_plus;
    Eigen::VectorXd v_plus;
    // Fitted decay exponents of |eta(t) - eta_plus| and |y(t)/t - v_plus|
    // against <t>; +infinity when the quantity sits below the 1e-13 floor
    // over the whole usable tail.
    double exponent_eta = 0.0;
    double exponent_y = 0.0;
    int points_eta = 0, points_y = 0;
    // Largest deviations seen in the fit window (exact zeros for a free flow).
    double max_dev_eta = 0.0;
    double max_dev_y = 0.0;
};

AsymptoticData asymptotic_data(const Trajectory& traj, double mu);

struct CertifyParams {
    int seed_count = 64;
    double box_halfwidth = 1.0;
    double tol_char = 1e-10;
    std::uint64_t rng_seed = 0;
    double T_max = 0.0;     // 0 = auto from R1 and the non-degeneracy constant
    double r1_safety = 2.0;
    MourreSearch mourre;
    CertifyPointOpts point;
    int jobs = 0;
};

struct NonTrappingCertificate {
    bool ok = false;          // pipeline ran to completion
    std::string failure;      // set when !ok
    bool certified = false;   // every seed escaped both ways (or vacuous)
    bool vacuous = false;     // empty characteristic sample (elliptic symbol)

    MourreConstants mourre;
    double C0 = 0.0;
    double R1 = 0.0;
    double T_max = 0.0;
    std::uint64_t rng_seed = 0;

    CharSample sample;
    std::vector<PointCertificate> seeds;  // forward/backward interleaved
    int escaped = 0, undecided = 0, suspected_trapped = 0;
};

NonTrappingCertificate certify(const Symbol& sym, const CertifyParams& params);

}  // namespace hamesc
