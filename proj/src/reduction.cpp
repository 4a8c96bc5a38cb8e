#include "sfslide/reduction.hpp"

#include <cmath>

#include "sfslide/error.hpp"

namespace sfslide {

namespace {
constexpr int kMaxNewton = 50;
constexpr int kMaxHalvings = 20;
}  // namespace

Vec slow_manifold_point(const FullSystemSpec& spec, const Vec& x, const Vec& y_guess) {
  if (x.size() != spec.n || y_guess.size() != spec.m) {
    throw Error(ErrorKind::DimensionMismatch, "slow_manifold_point: x or y_guess has the wrong size",
                {{"n", spec.n}, {"m", spec.m}, {"x", x.size()}, {"y", y_guess.size()}});
  }
  const double target = 1e-12 * (1.0 + y_guess.norm());
  Vec y = y_guess;
  Vec r = spec.g(x, y, 0.0);
  double res = r.norm();
  for (int it = 0; it < kMaxNewton; ++it) {
    if (res <= target) return y;
    const Mat J = jet_at(spec, x, y, 0.0).g_y;
    const auto lu = J.fullPivLu();
    if (!lu.isInvertible()) {
      throw Error(ErrorKind::SingularJacobian, "g_y is singular during slow-manifold Newton iteration",
                  {{"iteration", it}, {"residual", res}});
    }
    const Vec step = lu.solve(r);
    double lambda = 1.0;
    Vec y_try = y - step;
    Vec r_try = spec.g(x, y_try, 0.0);
    for (int k = 0; k < kMaxHalvings && !(r_try.norm() < res); ++k) {
      lambda *= 0.5;
      y_try = y - lambda * step;
      r_try = spec.g(x, y_try, 0.0);
    }
    y = std::move(y_try);
    r = std::move(r_try);
    res = r.norm();
  }
  if (res <= target) return y;
  throw Error(ErrorKind::NoConvergence, "slow-manifold Newton iteration did not converge",
              {{"iterations", kMaxNewton}, {"residual", res}});
}

ReducedSliding reduced_sliding(const NormalFormCoeffs& c) {
  const double num = c.h_rd_x0.dot(c.f_plus0);
  const double den = c.h_rd_x0.dot(c.f_plus0 - c.f_minus0);
  const double scale = c.h_rd_x0.norm() * (c.f_plus0.norm() + c.f_minus0.norm());
  if (!(std::abs(den) > 1e-14 * scale)) {
    throw Error(ErrorKind::DegenerateSliding, "h_rd_x0 (f_plus0 - f_minus0) vanishes", {{"denominator", den}});
  }
  ReducedSliding r;
  r.alpha_rd = num / den;
  r.f_rd_s = c.f_plus0 + r.alpha_rd * (c.f_minus0 - c.f_plus0);
  r.h_rd_x = c.h_rd_x0;
  return r;
}

NormalFormCoeffs normal_form_at(const FullSystemSpec& spec, const Vec& x0, const NormalFormOptions& opts) {
  validate_spec(spec);
  if (x0.size() != spec.n) {
    throw Error(ErrorKind::DimensionMismatch, "expansion point has the wrong size", {{"expected", spec.n}, {"got", x0.size()}});
  }
  const Vec guess = opts.y_guess.size() ? opts.y_guess : Vec::Zero(spec.m);
  const Vec yc = slow_manifold_point(spec, x0, guess);
  const double hrd = spec.h(x0, yc, 0.0);
  if (!(std::abs(hrd) <= opts.manifold_tol)) {
    throw Error(ErrorKind::OffManifold,
                "expansion point is off the reduced switching manifold (|h_rd| = " + std::to_string(std::abs(hrd)) + ")",
                {{"h_rd", hrd}, {"tolerance", opts.manifold_tol}});
  }
  const Jet j = jet_at(spec, x0, yc, 0.0);
  AffineData d;
  d.f_plus0 = spec.f_plus(x0, yc, 0.0);
  d.f_minus0 = spec.f_minus(x0, yc, 0.0);
  d.g_x0 = j.g_x;
  d.g_y0 = j.g_y;
  d.h_x0 = j.h_x;
  d.h_y0 = j.h_y;
  d.g_eps0 = j.g_eps;
  d.h_eps0 = j.h_eps;
  NormalFormCoeffs c = make_coeffs(d, x0, yc);
  if (opts.require_assumptions) {
    const AssumptionReport rep = check_assumptions(c, opts.c_stab);
    if (!rep.all_hold()) {
      nlohmann::json msgs = rep.messages;
      throw Error(ErrorKind::AssumptionViolated, "standing assumptions fail at the expansion point",
                  {{"messages", msgs},
                   {"spectral_abscissa", rep.spectral_abscissa},
                   {"attracting_sliding", rep.attracting_sliding},
                   {"transversal", rep.transversal}});
    }
  }
  return c;
}

NormalPoint to_normal(const NormalFormCoeffs& c, double eps, const Vec& x, const Vec& y) {
  const Vec xs = (x - c.x0) / eps - c.delta_x;
  const Vec ys = (y - c.y_c0) / eps - c.delta_y;
  return {xs, -c.g_y0 * ys - c.g_x0 * xs};
}

NormalPoint from_normal(const NormalFormCoeffs& c, double eps, const Vec& xn, const Vec& yn) {
  const Vec ys = -c.g_y0.partialPivLu().solve(yn + c.g_x0 * xn);
  return {c.x0 + eps * (xn + c.delta_x), c.y_c0 + eps * (ys + c.delta_y)};
}

Vec slow_subspace_original(const NormalFormCoeffs& c, Side s, const Vec& x_scaled) {
  return -c.g_y0.partialPivLu().solve(c.g_x0 * x_scaled + c.y_sl(s));
}

}  // namespace sfslide
