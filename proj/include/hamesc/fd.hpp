#pragma once

#include <functional>

#include "hamesc/symbol.hpp"

namespace hamesc {

using PhaseFunction = std::function<double(const PhasePoint&)>;

enum class PhaseVar { x, xi };

struct FdOptions {
    // 0 means auto: 1e-4 * max(1, |coordinate|) per direction.
    double step = 0.0;
    // Per-variable overrides for functions whose x- and xi-feature scales
    // differ (moving bumps); 0 falls back to `step`.
    double step_x = 0.0;
    double step_xi = 0.0;
    // Richardson levels: 1 = plain central difference O(h^2), each extra
    // level halves the step and cancels the next error term (3 gives O(h^6)).
    int levels = 3;
};

// Central-difference partial derivative of f at pt along x_j or xi_j.
double partial_fd(const PhaseFunction& f, const PhasePoint& pt, PhaseVar var, int j,
                  const FdOptions& opt = {});

// One-dimensional derivative of a scalar curve, same extrapolation scheme.
double scalar_derivative_fd(const std::function<double(double)>& f, double t,
                            const FdOptions& opt = {});

// {f, g} = d_xi f . d_x g - d_x f . d_xi g, every partial by finite
// differences. This is the independent oracle the closed-form bracket
// expressions are tested against, so it must not share code with them.
double poisson_bracket_fd(const PhaseFunction& f, const PhaseFunction& g,
                          const PhasePoint& pt, const FdOptions& opt = {});

// Adapter: a Symbol part as a plain phase-space function.
PhaseFunction symbol_fn(const Symbol& sym, SymbolPart part);

}  // namespace hamesc
