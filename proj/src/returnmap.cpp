#include "sfslide/returnmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "sfslide/classify.hpp"
#include "sfslide/reduction.hpp"

namespace sfslide {

CrossingPoint make_crossing(const NormalFormCoeffs& c, const Vec& x, const Vec& y) {
  const PlanePoint p = project(c, x, y);
  return {x, y, p.p1, p.p2};
}

Vec x_on_H0(const NormalFormCoeffs& c, const Vec& y) {
  return (c.hy_gyinv.dot(y) / c.h_rd_x0.squaredNorm()) * c.h_rd_x0.transpose();
}

ReturnStep return_map(const NormalFormCoeffs& c, const Vec& x, const Vec& y) {
  Lemma1Step s = lemma1_step(c, x, y);
  return {std::move(s.x2), std::move(s.y2), std::move(s.y1), s.t1, s.t2};
}

OrbitRecord iterate_orbit(const NormalFormCoeffs& c, const Vec& x, const Vec& y, std::size_t ell) {
  if (ell < 1) throw Error(ErrorKind::InvalidArgument, "ell must be at least 1", {{"ell", ell}});
  OrbitRecord rec;
  rec.points.reserve(ell + 1);
  rec.points.push_back(make_crossing(c, x, y));
  Vec xc = x, yc = y;
  double Tm = 0.0, Tp = 0.0;
  for (std::size_t i = 0; i < ell; ++i) {
    ReturnStep s;
    try {
      s = return_map(c, xc, yc);
    } catch (const Error& e) {
      nlohmann::json d = e.details();
      d["step"] = i;
      rec.error = Error(e.kind(), std::string(e.what()) + " (orbit step " + std::to_string(i) + ")", d);
      rec.failed_step = i;
      return rec;
    }
    Tm += s.t_minus;
    Tp += s.t_plus;
    rec.times_minus.push_back(s.t_minus);
    rec.times_plus.push_back(s.t_plus);
    rec.T_ell_minus.push_back(Tm);
    rec.T_ell_plus.push_back(Tp);
    rec.alpha_ell.push_back(Tm / (Tm + Tp));
    // accumulated form keeps R_x^ell - x = f_plus T_ell_plus + f_minus T_ell_minus exact
    xc = x + c.f_plus0 * Tp + c.f_minus0 * Tm;
    yc = std::move(s.y);
    rec.drift.push_back((xc - x) / (Tm + Tp));
    rec.points.push_back(make_crossing(c, xc, yc));
  }
  return rec;
}

DriftEstimate drift_from_orbit(const NormalFormCoeffs& c, const OrbitRecord& orbit) {
  if (orbit.steps() == 0) throw Error(ErrorKind::InvalidArgument, "orbit has no steps");
  DriftEstimate d;
  d.ell = orbit.steps();
  d.drift = orbit.drift.back();
  const Vec f_rd_s = reduced_sliding(c).f_rd_s;
  d.residual = (d.drift - f_rd_s).norm();
  d.t_low = std::min(*std::min_element(orbit.times_minus.begin(), orbit.times_minus.end()),
                     *std::min_element(orbit.times_plus.begin(), orbit.times_plus.end()));
  d.t_up = std::max(*std::max_element(orbit.times_minus.begin(), orbit.times_minus.end()),
                    *std::max_element(orbit.times_plus.begin(), orbit.times_plus.end()));
  for (const auto& p : orbit.points) d.y_bound = std::max(d.y_bound, p.y.norm());
  const double den = std::abs(c.h_rd_x0.dot(c.f_plus0 - c.f_minus0));
  d.C = c.hy_gyinv.norm() * (d.y_bound + orbit.points.front().y.norm()) * (c.f_plus0.norm() + c.f_minus0.norm()) /
        (d.t_low * den);
  d.bound = d.C / static_cast<double>(d.ell);
  return d;
}

DriftEstimate drift_estimate(const NormalFormCoeffs& c, const Vec& x, const Vec& y, std::size_t ell) {
  const OrbitRecord orbit = iterate_orbit(c, x, y, ell);
  if (orbit.error) throw *orbit.error;
  return drift_from_orbit(c, orbit);
}

namespace {

void require_scalar(const NormalFormCoeffs& c) {
  if (c.m != 1) throw Error(ErrorKind::NotScalarFast, "operation needs a scalar fast variable (m = 1)", {{"m", c.m}});
}

/// Leg derivative as sign and -a t + log|bracket|.
std::pair<double, double> leg_log_derivative(double a, double hy, double hf, double y, double ysl, double t) {
  const double e = std::exp(-a * t);
  const double bracket = 1.0 - hy * (y - ysl) * (1.0 - e) / (hf - hy * e * (y - ysl));
  return {bracket < 0.0 ? -1.0 : 1.0, -a * t + std::log(std::abs(bracket))};
}

double leg_derivative(double a, double hy, double hf, double y, double ysl, double t) {
  const double e = std::exp(-a * t);
  return e * (1.0 - hy * (y - ysl) * (1.0 - e) / (hf - hy * e * (y - ysl)));
}

}  // namespace

double map_1d(const NormalFormCoeffs& c, double y0) {
  require_scalar(c);
  const Vec y = Vec::Constant(1, y0);
  return minus_plus_step(c, x_on_H0(c, y), y).y2[0];
}

double map_derivative_1d(const NormalFormCoeffs& c, double y0) {
  require_scalar(c);
  const Vec y = Vec::Constant(1, y0);
  const Lemma1Step s = minus_plus_step(c, x_on_H0(c, y), y);
  const double a = -c.g_y0(0, 0);
  const double hy = c.h_y0[0];
  const double d1 = leg_derivative(a, hy, c.h_rd_x0.dot(c.f_minus0), y0, c.y_sl_minus[0], s.t1);
  const double d2 = leg_derivative(a, hy, c.h_rd_x0.dot(c.f_plus0), s.y1[0], c.y_sl_plus[0], s.t2);
  return d1 * d2;
}

double map_log_derivative_1d(const NormalFormCoeffs& c, double y0) {
  require_scalar(c);
  const Vec y = Vec::Constant(1, y0);
  const Lemma1Step s = minus_plus_step(c, x_on_H0(c, y), y);
  const double a = -c.g_y0(0, 0);
  const double hy = c.h_y0[0];
  const auto [s1, l1] = leg_log_derivative(a, hy, c.h_rd_x0.dot(c.f_minus0), y0, c.y_sl_minus[0], s.t1);
  const auto [s2, l2] = leg_log_derivative(a, hy, c.h_rd_x0.dot(c.f_plus0), s.y1[0], c.y_sl_plus[0], s.t2);
  return s1 * s2 > 0.0 ? l1 + l2 : std::numeric_limits<double>::quiet_NaN();
}

std::array<double, 4> period1_residual(const NormalFormCoeffs& c, double y0, double t1, double t2) {
  require_scalar(c);
  const double a = -c.g_y0(0, 0);
  const double hy = c.h_y0[0];
  const double ysm = c.y_sl_minus[0];
  const double ysp = c.y_sl_plus[0];
  const Vec x0 = x_on_H0(c, Vec::Constant(1, y0));
  const double hx0 = c.h_rd_x0.dot(x0);
  const double hfm = c.h_rd_x0.dot(c.f_minus0);
  const double hfp = c.h_rd_x0.dot(c.f_plus0);
  std::array<double, 4> r{};
  r[0] = a * hx0 + hy * y0;
  r[1] = a * hx0 + a * hfm * t1 + hy * (std::exp(-a * t1) * (y0 - ysm) + ysm);
  r[2] = t1 + t2 * hfp / hfm;
  r[3] = y0 - ysp - std::exp(-a * (t1 + t2)) * (y0 - ysm) - std::exp(-a * t2) * (ysm - ysp);
  return r;
}

FixedPoint1D fixed_point_1d(const NormalFormCoeffs& c, const FixedPointOptions& opts) {
  require_scalar(c);
  const double hy = c.h_y0[0];
  if (hy == 0.0) throw Error(ErrorKind::AssumptionViolated, "h_y0 = 0: the fast variable does not enter h");
  const double lo = c.T_minus;
  const double hi = c.S_plus;
  if (!(hi > lo)) {
    throw Error(ErrorKind::NoSignChange, "interval (T-, S+] is empty", {{"T_minus", lo}, {"S_plus", hi}});
  }
  const int N = std::max(opts.scan_points, 3);
  const double p_lo = lo + opts.left_offset * (hi - lo);

  struct Sample {
    double y, F;
    bool ok;
  };
  std::vector<Sample> scan;
  scan.reserve(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const double p = p_lo + (hi - p_lo) * k / (N - 1);
    const double y = p / hy;
    Sample s{y, 0.0, true};
    try {
      s.F = map_1d(c, y) - y;
    } catch (const Error&) {
      s.ok = false;
    }
    scan.push_back(s);
  }
  std::sort(scan.begin(), scan.end(), [](const Sample& a, const Sample& b) { return a.y < b.y; });

  FixedPoint1D out;
  std::optional<std::pair<double, double>> bracket;
  const Sample* prev = nullptr;
  for (const auto& s : scan) {
    if (!s.ok) continue;
    if (prev && ((prev->F > 0.0 && s.F <= 0.0) || (prev->F < 0.0 && s.F >= 0.0))) {
      ++out.sign_changes;
      if (!bracket && prev->F > 0.0) bracket = {prev->y, s.y};
    }
    prev = &s;
  }
  if (!bracket) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& s : scan) {
      table.push_back({{"y0", s.y}, {"p2", s.y * hy}, {"y2_minus_y0", s.ok ? nlohmann::json(s.F) : nlohmann::json()}});
    }
    throw Error(ErrorKind::NoSignChange, "y2(y0) - y0 has no +/- sign change on (T-, S+]",
                {{"interval", {lo, hi}}, {"scan", table}, {"sign_changes", out.sign_changes}});
  }

  auto F = [&](double y) { return map_1d(c, y) - y; };
  double a = bracket->first, b = bracket->second;
  double Fa = F(a);
  for (int it = 0; it < 200 && b - a > 4e-16 * (1.0 + std::abs(a)); ++it) {
    const double mid = 0.5 * (a + b);
    const double Fm = F(mid);
    if (Fm == 0.0) {
      a = b = mid;
      break;
    }
    if ((Fm > 0.0) == (Fa > 0.0)) {
      a = mid;
      Fa = Fm;
    } else {
      b = mid;
    }
  }
  double y = 0.5 * (a + b);
  double Fy = F(y);
  for (int it = 0; it < 5 && Fy != 0.0; ++it) {
    const double slope = map_derivative_1d(c, y) - 1.0;
    if (slope == 0.0) break;
    const double y_new = y - Fy / slope;
    if (!(y_new >= bracket->first && y_new <= bracket->second)) break;
    const double F_new = F(y_new);
    if (!(std::abs(F_new) < std::abs(Fy))) break;
    y = y_new;
    Fy = F_new;
  }

  const Vec yv = Vec::Constant(1, y);
  const Lemma1Step s = minus_plus_step(c, x_on_H0(c, yv), yv);
  out.y_star = y;
  out.t1 = s.t1;
  out.t2 = s.t2;
  out.alpha = s.t1 / (s.t1 + s.t2);
  out.derivative = map_derivative_1d(c, y);
  out.log_derivative = map_log_derivative_1d(c, y);
  out.residuals = period1_residual(c, y, s.t1, s.t2);
  // judged in log space: long legs push a positive derivative below the smallest double
  if (!(out.log_derivative < 0.0)) {
    throw Error(ErrorKind::UnstableFixedPoint, "fixed point found but dy2/dy0 is not in (0, 1)",
                {{"y_star", y}, {"derivative", out.derivative}, {"t1", s.t1}, {"t2", s.t2}});
  }
  return out;
}

ReachResult reach_crossing(const NormalFormCoeffs& c, const Vec& x, const Vec& y, Side escape_side) {
  ReachResult r;
  const double cap = 100.0 * (1.0 + y.norm());
  Vec xc = x, yc = y;
  for (int leg = 0; leg < 8; ++leg) {
    const PlanePoint p = project(c, xc, yc);
    const double scale = 1.0 + xc.norm() + yc.norm();
    const bool on_surface = std::abs(p.p1) <= 1e-9 * scale;
    if (on_surface && p.p2 >= c.T_plus - 1e-9 * (1.0 + std::abs(c.T_plus))) {
      r.point = make_crossing(c, xc, yc);
      return r;
    }
    Side side;
    if (!on_surface) {
      side = p.p1 > 0.0 ? Side::Plus : Side::Minus;
    } else if (p.p2 > c.T_minus) {
      side = escape_side;  // both fields leave the surface
    } else {
      side = Side::Plus;   // F_minus points into H+, so the state crosses
    }
    RootOptions ro;
    ro.t_max = cap - r.t_ini;
    double t = 0.0;
    try {
      t = on_surface ? next_switch_time(c, side, yc, ro) : time_to_surface(c, side, yc, p.p1, ro);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoRoot) throw;
      throw Error(ErrorKind::TimeCap, "H0+ not reached within the time cap", {{"t_cap", cap}, {"t_ini", r.t_ini}});
    }
    FlowStep step = flow_step(c, side, t, xc, yc);
    xc = step.x_end;
    yc = step.y_end;
    r.t_ini += t;
    r.trajectory.push_back(std::move(step));
    if (r.t_ini > cap) {
      throw Error(ErrorKind::TimeCap, "H0+ not reached within the time cap", {{"t_cap", cap}, {"t_ini", r.t_ini}});
    }
  }
  throw Error(ErrorKind::TimeCap, "H0+ not reached after the maximum number of legs", {{"t_ini", r.t_ini}});
}

}  // namespace sfslide
