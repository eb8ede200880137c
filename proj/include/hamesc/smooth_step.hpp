#pragma once

namespace hamesc {

// C-infinity step: 0 for t <= 0, 1 for t >= 1/8, strictly increasing between.
// Built by integrating exp(-1/(u(1-u))), u = 8t, over [0, 1/8] and normalizing.
// Evaluation accumulates a fixed per-cell 64-node Gauss-Legendre table plus a
// partial-cell quadrature, so value() and derivative() agree to quadrature
// precision and results are bit-reproducible.
double smooth_step(double t);
double smooth_step_deriv(double t);

// chi: 1 on (-inf, 1], 0 on [2, inf), nonincreasing; chibar = 1 - chi.
inline double chi_cut(double t) { return 1.0 - smooth_step((t - 1.0) / 8.0); }
inline double chi_cut_deriv(double t) { return -smooth_step_deriv((t - 1.0) / 8.0) / 8.0; }
inline double chibar_cut(double t) { return smooth_step((t - 1.0) / 8.0); }
inline double chibar_cut_deriv(double t) { return smooth_step_deriv((t - 1.0) / 8.0) / 8.0; }

// Radial bump profile: 1 for r <= 1/2, 0 for r >= 1, nonincreasing,
// strictly positive on (1/2, 1).
inline double bump_profile(double r) { return 1.0 - smooth_step((r - 0.5) / 4.0); }
inline double bump_profile_deriv(double r) { return -smooth_step_deriv((r - 0.5) / 4.0) / 4.0; }

}  // namespace hamesc
