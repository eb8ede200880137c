#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace hamesc {

// Multi-index alpha in Z_{>=0}^n addressing the monomial xi^alpha.
using MultiIndex = std::vector<int>;

inline int order_of(const MultiIndex& a) {
    return std::accumulate(a.begin(), a.end(), 0);
}

// Graded lexicographic order: total degree first, then lexicographic.
// Used to keep symbol terms in a deterministic iteration order.
inline bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("graded_lex_less: dimension mismatch");
    const int oa = order_of(a), ob = order_of(b);
    if (oa != ob) return oa < ob;
    return a < b;
}

inline double ipow(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

inline double monomial(const Eigen::VectorXd& xi, const MultiIndex& a) {
    double r = 1.0;
    for (int i = 0; i < static_cast<int>(a.size()); ++i) r *= ipow(xi[i], a[i]);
    return r;
}

// d/dxi_j of xi^alpha.
inline double monomial_d(const Eigen::VectorXd& xi, const MultiIndex& a, int j) {
    if (a[j] == 0) return 0.0;
    double r = static_cast<double>(a[j]);
    for (int i = 0; i < static_cast<int>(a.size()); ++i)
        r *= ipow(xi[i], i == j ? a[i] - 1 : a[i]);
    return r;
}

// d^2/(dxi_j dxi_k) of xi^alpha.
inline double monomial_d2(const Eigen::VectorXd& xi, const MultiIndex& a, int j, int k) {
    MultiIndex b = a;
    double c = 1.0;
    for (int idx : {j, k}) {
        if (b[idx] == 0) return 0.0;
        c *= static_cast<double>(b[idx]);
        b[idx] -= 1;
    }
    return c * monomial(xi, b);
}

}  // namespace hamesc
