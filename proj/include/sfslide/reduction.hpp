#pragma once

#include "sfslide/systemdef.hpp"

namespace sfslide {

/// Solves g(x, y, 0) = 0 for y by damped Newton iteration.
Vec slow_manifold_point(const FullSystemSpec& spec, const Vec& x, const Vec& y_guess);

struct ReducedSliding {
  double alpha_rd = 0.0;
  Vec f_rd_s;
  RowVec h_rd_x;
};

/// Convex combination of f_plus0 and f_minus0 tangent to h_rd_x0 x = 0.
ReducedSliding reduced_sliding(const NormalFormCoeffs& coeffs);

struct NormalFormOptions {
  Vec y_guess;                  // starting guess for y_c(x0); zero if empty
  double manifold_tol = 1e-8;   // accepted |h(x0, y_c(x0), 0)|
  double c_stab = 1e-6;
  bool require_assumptions = true;
};

/// Jacobians at (x0, y_c(x0), 0) plus every derived quantity.
/// Throws OffManifold or AssumptionViolated.
NormalFormCoeffs normal_form_at(const FullSystemSpec& spec, const Vec& x0, const NormalFormOptions& opts = {});

/// Rescaled, shifted and y-transformed coordinates of the truncated system.
struct NormalPoint {
  Vec x;
  Vec y;
};

/// (x, y) in original units -> coordinates where the truncated dynamics read
/// x' = f_pm, y' = g_y0 y - g_x0 f_pm and H0 = {h_rd_x0 x - h_y0 g_y0^{-1} y = 0}.
NormalPoint to_normal(const NormalFormCoeffs& c, double eps, const Vec& x, const Vec& y);
NormalPoint from_normal(const NormalFormCoeffs& c, double eps, const Vec& xn, const Vec& yn);

/// Slow subspace of F_pm in the pre-change scaled coordinates, for diagnostics:
/// y_scaled = -g_y0^{-1} (g_x0 x_scaled + y_sl_pm) reduces to the attracting level.
Vec slow_subspace_original(const NormalFormCoeffs& c, Side s, const Vec& x_scaled);

}  // namespace sfslide
