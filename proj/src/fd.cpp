#include "hamesc/fd.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hamesc {

namespace {

double auto_step(double requested, double coord) {
    if (requested > 0.0) return requested;
    return 1e-4 * std::max(1.0, std::abs(coord));
}

// Richardson tower over central differences at h, h/2, h/4, ...
double extrapolate(const std::function<double(double)>& central, double h, int levels) {
    if (levels < 1 || levels > 6) throw std::invalid_argument("fd: levels must be in [1,6]");
    std::vector<double> row(levels);
    for (int i = 0; i < levels; ++i) row[i] = central(h / static_cast<double>(1 << i));
    // Neville-style elimination of the h^2, h^4, ... error terms.
    double factor = 4.0;
    for (int pass = 1; pass < levels; ++pass) {
        for (int i = 0; i + pass < levels; ++i)
            row[i] = (factor * row[i + 1] - row[i]) / (factor - 1.0);
        factor *= 4.0;
    }
    if (!std::isfinite(row[0])) throw std::runtime_error("fd: non-finite difference sample");
    return row[0];
}

}  // namespace

double partial_fd(const PhaseFunction& f, const PhasePoint& pt, PhaseVar var, int j,
                  const FdOptions& opt) {
    const int n = static_cast<int>(pt.x.size());
    if (j < 0 || j >= n) throw std::invalid_argument("fd: coordinate index out of range");
    const double coord = (var == PhaseVar::x) ? pt.x[j] : pt.xi[j];
    const double requested = (var == PhaseVar::x) ? (opt.step_x > 0.0 ? opt.step_x : opt.step)
                                                  : (opt.step_xi > 0.0 ? opt.step_xi : opt.step);
    const double h0 = auto_step(requested, coord);

    auto central = [&](double h) {
        PhasePoint plus = pt, minus = pt;
        if (var == PhaseVar::x) {
            plus.x[j] += h;
            minus.x[j] -= h;
        } else {
            plus.xi[j] += h;
            minus.xi[j] -= h;
        }
        const double fp = f(plus), fm = f(minus);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("fd: non-finite sample while differencing");
        return (fp - fm) / (2.0 * h);
    };
    return extrapolate(central, h0, opt.levels);
}

double scalar_derivative_fd(const std::function<double(double)>& f, double t,
                            const FdOptions& opt) {
    const double h0 = auto_step(opt.step, t);
    auto central = [&](double h) {
        const double fp = f(t + h), fm = f(t - h);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("fd: non-finite sample while differencing");
        return (fp - fm) / (2.0 * h);
    };
    return extrapolate(central, h0, opt.levels);
}

double poisson_bracket_fd(const PhaseFunction& f, const PhaseFunction& g,
                          const PhasePoint& pt, const FdOptions& opt) {
    const int n = static_cast<int>(pt.x.size());
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += partial_fd(f, pt, PhaseVar::xi, j, opt) * partial_fd(g, pt, PhaseVar::x, j, opt);
        acc -= partial_fd(f, pt, PhaseVar::x, j, opt) * partial_fd(g, pt, PhaseVar::xi, j, opt);
    }
    return acc;
}

PhaseFunction symbol_fn(const Symbol& sym, SymbolPart part) {
    return [&sym, part](const PhasePoint& pt) { return sym.eval(pt, part); };
}

}  // namespace hamesc
