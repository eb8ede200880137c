#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hamesc/coefficient.hpp"
#include "hamesc/multi_index.hpp"

namespace hamesc {

struct PhasePoint {
    Eigen::VectorXd x;
    Eigen::VectorXd xi;
};

// Which piece of p(x,xi) = sum_{|alpha|<=m} a_alpha(x) xi^alpha to evaluate:
//   full      : p itself
//   principal : p_m, the top-degree part
//   free_part : p_0, constant-coefficient limit of p_m (b_alpha at |alpha|=m)
//   lower     : p - p_m
enum class SymbolPart { full, principal, free_part, lower };

SymbolPart parse_symbol_part(const std::string& tag);  // throws on unknown tag

struct SymbolTerm {
    MultiIndex alpha;
    CoefficientFunction coeff;  // a_alpha(x)
    double free_coeff = 0.0;    // b_alpha (nonzero only when |alpha| = m)
};

struct HamiltonField {
    Eigen::VectorXd dx_dt;   //  d p / d xi
    Eigen::VectorXd dxi_dt;  // -d p / d x
};

class Symbol {
  public:
    Symbol(int dim, int order, double mu, std::vector<SymbolTerm> terms,
           std::string description);

    int dim() const { return dim_; }
    int order() const { return order_; }
    double mu() const { return mu_; }
    const std::vector<SymbolTerm>& terms() const { return terms_; }
    const std::string& description() const { return description_; }

    double eval(const PhasePoint& pt, SymbolPart part = SymbolPart::full) const;

    // d p / d xi of the requested part.
    Eigen::VectorXd xi_grad(const PhasePoint& pt, SymbolPart part) const;
    // d p / d x of the requested part (uses coefficient gradients).
    Eigen::VectorXd x_grad(const PhasePoint& pt, SymbolPart part) const;
    // Second derivatives of the requested part, exact in xi and first order in
    // the coefficients; enough for the commutant expressions used downstream.
    Eigen::MatrixXd xi_hessian(const PhasePoint& pt, SymbolPart part) const;
    // mixed(k, j) = d^2 p / (d x_k d xi_j).
    Eigen::MatrixXd x_xi_mixed(const PhasePoint& pt, SymbolPart part) const;

    HamiltonField hamiltonian_field(const PhasePoint& pt,
                                    SymbolPart part = SymbolPart::principal) const;

    bool coefficients_have_gradients() const;
    bool coefficients_have_hessians() const;

  private:
    void check_point(const PhasePoint& pt) const;
    bool term_active(const SymbolTerm& t, SymbolPart part) const;

    int dim_;
    int order_;
    double mu_;
    std::vector<SymbolTerm> terms_;  // graded-lex sorted, unique alphas
    std::string description_;
};

// p = |xi|^2 (dim arbitrary). The constant-coefficient reference symbol.
Symbol make_free_laplacian(int dim);

struct MetricSpec {
    // Constant asymptotic inverse metric; defaults to Minkowski
    // diag(1, -1, ..., -1) when left empty.
    Eigen::MatrixXd base;
    // Decaying perturbations added on top of base, keyed by (j, k), j <= k.
    std::map<std::pair<int, int>, CoefficientFunction> perturbation;

    static MetricSpec minkowski(int dim);
    // Minkowski plus amp * exp(-|x|^2/width^2) added to the (0,0) entry.
    static MetricSpec minkowski_bump(int dim, double amp, double width);
};

// p = sum g^{jk}(x) (xi_j - A_j(x)) (xi_k - A_k(x)) + V(x), order m = 2.
// The free part is always the Minkowski quadratic form; a base metric that
// differs from Minkowski is permitted here and surfaces as a decay violation
// in validate().
Symbol make_klein_gordon(const MetricSpec& g_inverse,
                         const std::vector<CoefficientFunction>& vector_potential,
                         std::optional<CoefficientFunction> scalar_potential,
                         double mu);

// General polynomial-in-xi symbol from explicit terms. Constant coefficients
// of top-degree terms double as their own free-part limits.
Symbol make_polynomial(int dim, int order, double mu, std::vector<SymbolTerm> terms,
                       std::string description = "polynomial");

struct ValidationLattice {
    std::vector<double> x_radii;  // sample shells; 0 allowed (origin included once)
    int x_directions = 16;        // per shell
    int xi_directions = 32;       // unit sphere in xi
    double nondegeneracy_cap = 1e6;
    static ValidationLattice defaults(int dim);
};

struct ValidationReport {
    bool accepted = false;
    std::string rejection_reason;
    PhasePoint witness;  // sample achieving the binding constant

    // max over samples of max(|xi|^{m-1}/|d_xi part|, |d_xi part|/|xi|^{m-1})
    double C_nondeg_principal = 0.0;
    double C_nondeg_free = 0.0;
    // |d_x p_m| <= C0 |x|^{-1-mu} |xi|^m over samples with |x| > 0
    double C0 = 0.0;
    // decay constants: max |d^beta (a_alpha - b_alpha)| <x>^{mu+|beta|}, per |beta|
    std::array<double, 3> C_beta{0.0, 0.0, 0.0};
    bool used_fd_hessian = false;

    bool grad_consistent = true;
    double worst_grad_mismatch = 0.0;

    int x_samples = 0;
    int xi_samples = 0;
    ValidationLattice lattice;
};

ValidationReport validate(const Symbol& sym, const ValidationLattice& lattice);

// Deterministic direction sets on the unit sphere (exact +-1 in 1-D, uniform
// angles in 2-D, Fibonacci lattice in higher dimension).
std::vector<Eigen::VectorXd> sphere_directions(int dim, int count);

}  // namespace hamesc
