#pragma once

#include "sfslide/systemdef.hpp"

namespace sfslide {

/// exp(t A) by scaling and squaring around a degree-13 Pade approximant.
Mat matrix_exp(const Mat& A, double t = 1.0);

/// (exp(t g_y0) - I) v, using expm1 when m = 1.
Vec expm_minus_identity_apply(const Mat& g_y, double t, const Vec& v);

struct FlowStep {
  Side sign = Side::Plus;
  double t = 0.0;
  Vec x_start, y_start;
  Vec x_end, y_end;
};

/// Exact flow of x' = f_pm0, y' = g_y0 y - g_x0 f_pm0.
FlowStep flow_step(const NormalFormCoeffs& c, Side sign, double t, const Vec& x, const Vec& y);

struct SwitchValue {
  double value = 0.0;
  double slope = 0.0;
};

/// p1 along F_sign after time t, starting from a point of H0 with fast state y:
///   h_rd_x0 f t - h_y0 g_y0^{-1} (exp(t g_y0) - I)(y - y_sl).
/// `offset` is p1 at t = 0 for starts off H0.
SwitchValue switching_value(const NormalFormCoeffs& c, Side sign, double t, const Vec& y, double offset = 0.0);

struct RootOptions {
  double t_max = -1.0;          // negative: grows with the transient over |h_rd f|
  double tangency_tol = -1.0;   // negative: 1e-10 (1 + |y|)
};

/// Smallest t > 0 at which the switching value returns to zero, starting on H0.
/// Throws TangencyAtStart, NotEntering or NoRoot.
double next_switch_time(const NormalFormCoeffs& c, Side sign, const Vec& y, const RootOptions& opts = {});

/// First t > 0 at which p1 = offset + (...) reaches zero from a start with p1 = offset != 0.
/// Throws NoRoot.
double time_to_surface(const NormalFormCoeffs& c, Side sign, const Vec& y, double offset, const RootOptions& opts = {});

struct Lemma1Step {
  Vec x1, y1;   // after the F_minus leg
  Vec x2, y2;   // after the F_plus leg
  double t1 = 0.0;
  double t2 = 0.0;
};

/// F_minus until H0, then F_plus until H0, without checking that the start is in H0+.
Lemma1Step minus_plus_step(const NormalFormCoeffs& c, const Vec& x, const Vec& y, const RootOptions& opts = {});

/// Same as minus_plus_step but requires p1 = 0 and h_y0 y >= h_x0 f_plus0.
Lemma1Step lemma1_step(const NormalFormCoeffs& c, const Vec& x, const Vec& y, const RootOptions& opts = {});

/// True if (x, y) is on H0 with h_y0 y >= T_plus, up to a relative tolerance.
bool in_H0_plus(const NormalFormCoeffs& c, const Vec& x, const Vec& y, double tol = 1e-9);

struct SlidingField {
  Vec Fx, Fy;
  double alpha = 0.0;
  Mat A_s;   // (n+m) x (n+m)
  Vec b_s;   // n+m
};

/// Affine Filippov field on H0: F_s = b_s + A_s (x, y). Throws DegenerateSliding.
SlidingField full_sliding_field(const NormalFormCoeffs& c, const Vec& x, const Vec& y);

}  // namespace sfslide
