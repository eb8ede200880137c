#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

namespace hamesc {

// Scalar coefficient a(x) with optional analytic derivatives. When a gradient
// or hessian is absent, consumers fall back to central finite differences and
// flag that in their reports.
struct CoefficientFunction {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // may be empty
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;   // may be empty

    bool has_gradient() const { return static_cast<bool>(gradient); }
    bool has_hessian() const { return static_cast<bool>(hessian); }

    static CoefficientFunction constant(double c, int dim) {
        CoefficientFunction f;
        f.value = [c](const Eigen::VectorXd&) { return c; };
        f.gradient = [dim](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(dim).eval(); };
        f.hessian = [dim](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(dim, dim).eval(); };
        return f;
    }

    // amp * exp(-|x - c|^2 / w^2), the standard localized perturbation profile.
    static CoefficientFunction gaussian_bump(double amp, double width, int dim,
                                             Eigen::VectorXd center = Eigen::VectorXd()) {
        if (width <= 0.0) throw std::invalid_argument("gaussian_bump: width must be positive");
        if (center.size() == 0) center = Eigen::VectorXd::Zero(dim);
        if (center.size() != dim) throw std::invalid_argument("gaussian_bump: center dimension mismatch");
        const double iw2 = 1.0 / (width * width);
        CoefficientFunction f;
        f.value = [amp, iw2, center](const Eigen::VectorXd& x) {
            return amp * std::exp(-(x - center).squaredNorm() * iw2);
        };
        f.gradient = [amp, iw2, center](const Eigen::VectorXd& x) {
            const Eigen::VectorXd d = x - center;
            return (-2.0 * iw2 * amp * std::exp(-d.squaredNorm() * iw2) * d).eval();
        };
        f.hessian = [amp, iw2, center, dim](const Eigen::VectorXd& x) {
            const Eigen::VectorXd d = x - center;
            const double e = amp * std::exp(-d.squaredNorm() * iw2);
            Eigen::MatrixXd h = (4.0 * iw2 * iw2 * e) * (d * d.transpose());
            h -= (2.0 * iw2 * e) * Eigen::MatrixXd::Identity(dim, dim);
            return h.eval();
        };
        return f;
    }

    // amp * <x>^{-rate} with <x> = sqrt(1 + |x|^2); algebraic decay profile.
    static CoefficientFunction power_decay(double amp, double rate, int dim) {
        if (rate <= 0.0) throw std::invalid_argument("power_decay: rate must be positive");
        CoefficientFunction f;
        f.value = [amp, rate](const Eigen::VectorXd& x) {
            return amp * std::pow(1.0 + x.squaredNorm(), -rate / 2.0);
        };
        f.gradient = [amp, rate](const Eigen::VectorXd& x) {
            const double b2 = 1.0 + x.squaredNorm();
            return (-amp * rate * std::pow(b2, -rate / 2.0 - 1.0) * x).eval();
        };
        f.hessian = [amp, rate, dim](const Eigen::VectorXd& x) {
            const double b2 = 1.0 + x.squaredNorm();
            Eigen::MatrixXd h = amp * rate * (rate + 2.0) * std::pow(b2, -rate / 2.0 - 2.0) *
                                (x * x.transpose());
            h -= amp * rate * std::pow(b2, -rate / 2.0 - 1.0) *
                 Eigen::MatrixXd::Identity(dim, dim);
            return h.eval();
        };
        return f;
    }
};

// Pointwise combinators; derivative fields propagate only when both inputs
// carry them.
inline CoefficientFunction cf_sum(const CoefficientFunction& a, const CoefficientFunction& b) {
    CoefficientFunction f;
    f.value = [a, b](const Eigen::VectorXd& x) { return a.value(x) + b.value(x); };
    if (a.has_gradient() && b.has_gradient())
        f.gradient = [a, b](const Eigen::VectorXd& x) {
            return (a.gradient(x) + b.gradient(x)).eval();
        };
    if (a.has_hessian() && b.has_hessian())
        f.hessian = [a, b](const Eigen::VectorXd& x) {
            return (a.hessian(x) + b.hessian(x)).eval();
        };
    return f;
}

inline CoefficientFunction cf_scale(double c, const CoefficientFunction& a) {
    CoefficientFunction f;
    f.value = [c, a](const Eigen::VectorXd& x) { return c * a.value(x); };
    if (a.has_gradient())
        f.gradient = [c, a](const Eigen::VectorXd& x) { return (c * a.gradient(x)).eval(); };
    if (a.has_hessian())
        f.hessian = [c, a](const Eigen::VectorXd& x) { return (c * a.hessian(x)).eval(); };
    return f;
}

inline CoefficientFunction cf_product(const CoefficientFunction& a, const CoefficientFunction& b) {
    CoefficientFunction f;
    f.value = [a, b](const Eigen::VectorXd& x) { return a.value(x) * b.value(x); };
    if (a.has_gradient() && b.has_gradient())
        f.gradient = [a, b](const Eigen::VectorXd& x) {
            return (a.gradient(x) * b.value(x) + a.value(x) * b.gradient(x)).eval();
        };
    if (a.has_hessian() && b.has_hessian() && a.has_gradient() && b.has_gradient())
        f.hessian = [a, b](const Eigen::VectorXd& x) {
            const Eigen::VectorXd ga = a.gradient(x), gb = b.gradient(x);
            Eigen::MatrixXd h = a.hessian(x) * b.value(x) + a.value(x) * b.hessian(x);
            h += ga * gb.transpose() + gb * ga.transpose();
            return h.eval();
        };
    return f;
}

}  // namespace hamesc
