#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hamesc/escape_weight.hpp"
#include "hamesc/symbol.hpp"

namespace hamesc {

// a(x, xi) on the 1-D phase plane; everything in this module is 1-D so the
// dense N x N matrices stay eigensolver-friendly.
using PhaseSymbol1d = std::function<double(double, double)>;

class Grid {
  public:
    Grid(double L, int N);  // L > 0; N even, 2..2048

    double L() const { return L_; }
    int N() const { return N_; }
    double dx() const { return 2.0 * L_ / N_; }
    double x_node(int j) const { return -L_ + j * dx(); }
    // Frequency nodes in DFT order shifted to [-N/2, N/2): index 0..N-1.
    double xi_node(int li) const;
    double xi_max() const;

  private:
    double L_;
    int N_;
};

struct GridOperator {
    Grid grid;
    Eigen::MatrixXcd matrix;
    std::string symbol_tag;
};

// matrix[j,k] = (1/N) sum_l a((x_j + x_k)/2, xi_l) e^{i (x_j - x_k) xi_l}.
// The phase sum is arranged so that xi-independent symbols come out exactly
// diagonal and a == 1 gives the identity bitwise. Real symbols give a
// Hermitian matrix up to rounding; no mirroring is applied, so Hermiticity
// checks on the result are meaningful.
GridOperator weyl_quantize(const Grid& grid, const PhaseSymbol1d& a, const std::string& tag,
                           int jobs = 0);

// sqrt(dx) * || <xi>^s F <x>^l vec ||_2 with a unitary DFT F: the discrete
// weighted Sobolev norm of a grid function.
double weighted_norm(const Grid& grid, double s, double l, const Eigen::VectorXcd& vec);

// Interior windows, all built from the same smooth step:
//   window_x    1 for |x| <= 0.45 L, 0 for |x| >= 0.68 L   (state window)
//   window_freq 1 for |xi| <= 0.30 ximax, 0 beyond 0.45    (frequency window)
//   window_sym  1 for |x| <= 0.72 L, 0 for |x| >= 0.95 L   (symbol periodization)
// Symbols are multiplied by window_sym before quantization so nothing
// reaches the wrap boundary; window_x / window_freq isolate the interior
// when comparing against continuum identities.
double window_x(const Grid& grid, double x);
double window_freq(const Grid& grid, double xi);
double window_sym(const Grid& grid, double x);
double window_sym_deriv(const Grid& grid, double x);

struct CommutatorCheck {
    double raw_residual = 0.0;       // || i[Op(p),Op(b)] - Op(bracket) ||_2
    double windowed_residual = 0.0;  // same, sandwiched by the interior windows
};

// bracket must evaluate {p, b} = d_xi p d_x b - d_x p d_xi b; callers pass
// the closed form when one exists or an FD adapter otherwise.
CommutatorCheck commutator_vs_bracket(const Grid& grid, const PhaseSymbol1d& p,
                                      const PhaseSymbol1d& b, const PhaseSymbol1d& bracket,
                                      int jobs = 0);

// Smallest eigenvalue of the Hermitian part. Usage error if the operator is
// not Hermitian to 1e-10; callers quantize real symbols first.
double positivity_margin(const GridOperator& op);

struct SpectrumSummary {
    double min_eig = 0.0;
    double max_eig = 0.0;
    double herm_defect = 0.0;  // max |A - A^*| entry
};
SpectrumSummary hermitian_spectrum_summary(const GridOperator& op);

// Binary dump: 16-byte header (magic "WGOP", u32 N, u32 reserved, 4 zero
// bytes), then row-major complex128 little-endian entries.
void write_operator_dump(const GridOperator& op, const std::string& path);

struct EstimateCase {
    double im_z = 0.0;
    int n = 0;
    double c_hat = 0.0;      // max over trials of LHS/RHS
    int trials_used = 0;
    int trials_skipped = 0;  // RHS below the degeneracy floor
};

struct EstimateReport {
    std::vector<EstimateCase> cases;  // every (im_z, N) pair
    double imz_ratio = 0.0;           // max/min c_hat across im_z at base N
    double refine_ratio = 0.0;        // worst relative c_hat change N -> 2N
    long boundary_violations = 0;     // trials with mass near the wrap
    bool pass = false;
    double k = 0.0;
    EscapeWeightParams weight;
};

struct EstimateOpts {
    double L = 16.0;
    int n_base = 256;         // refinement compares against 2 * n_base
    int trials = 48;
    double k = 0.0;
    std::vector<double> im_zs = {1.0, 0.1, 0.01};
    double imz_ratio_limit = 2.0;
    double refine_limit = 0.2;
    double degenerate_floor = 1e-14;
    std::uint64_t rng_seed = 0;
    int jobs = 0;
};

// Weighted resolvent-type inequality probed with random analytic trial
// vectors: LHS gathers the weighted norms of B phi that the inequality
// controls, RHS the source and localization terms controlling them. The
// fitted constant max(LHS/RHS) should be stable in Im z and under grid
// refinement; both ratios are reported and gated.
EstimateReport radial_estimate_experiment(const Symbol& sym, const EscapeWeightParams& params,
                                          const EstimateOpts& opts = {});

}  // namespace hamesc
