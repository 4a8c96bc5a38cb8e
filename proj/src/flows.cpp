#include "sfslide/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/toms748_solve.hpp>

#include "sfslide/error.hpp"

namespace sfslide {

namespace {

constexpr double kTheta13 = 5.371920351148152;
constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                              1187353796428800.0,  129060195264000.0,   10559470521600.0,
                              670442572800.0,      33522128640.0,       1323241920.0,
                              40840800.0,          960960.0,            16380.0,
                              182.0,               1.0};

Mat pade13(const Mat& A) {
  const auto m = A.rows();
  const Mat I = Mat::Identity(m, m);
  const Mat A2 = A * A;
  const Mat A4 = A2 * A2;
  const Mat A6 = A4 * A2;
  const double* b = kPade13;
  const Mat U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  return (V - U).partialPivLu().solve(V + U);
}

double decay_time(const Mat& g_y) {
  if (g_y.rows() == 1) {
    const double a = -g_y(0, 0);
    return a > 0.0 ? 1.0 / a : 1.0;
  }
  Eigen::EigenSolver<Mat> es(g_y, false);
  const double a = -es.eigenvalues().real().maxCoeff();
  return a > 0.0 ? 1.0 / a : 1.0;
}

/// Default march horizon: beyond it the linear term h_rd f t dominates the bounded transient.
double default_t_max(const NormalFormCoeffs& c, Side sign, const Vec& y, double offset) {
  const double rate = std::abs(c.h_rd_x0.dot(c.f(sign)));
  const double transient = std::abs(offset) + 2.0 * c.hy_gyinv.norm() * (y - c.y_sl(sign)).norm();
  double t = 100.0 * (1.0 + y.norm()) + 10.0 * decay_time(c.g_y0);
  if (rate > 0.0) t += 4.0 * transient / rate;
  return std::isfinite(t) ? t : 1e12;
}

[[noreturn]] void throw_no_root(Side sign, double t_max, const Vec& y) {
  throw Error(ErrorKind::NoRoot,
              std::string("switching value along F_") + side_name(sign) + " does not return to zero before t_max",
              {{"sign", side_name(sign)}, {"t_max", t_max}, {"y_norm", y.norm()}});
}

/// Marches along t to bracket the first sign change of `value` away from
/// `side` (+1/-1), then refines with TOMS 748.
template <class F>
double first_crossing(F&& value, double side, double v0, double dt0, double t_char, double t_max, Side sign,
                      const Vec& y) {
  double t_prev = 0.0;
  double v_prev = v0;
  double dt = dt0;
  for (;;) {
    double t = std::min(t_prev + dt, t_max);
    double v = value(t);
    if (side * v <= 0.0 && t_prev == 0.0 && v0 == 0.0) {
      // Crossed within the very first step; shrink it so the bracket has a
      // strictly signed left end.
      int k = 0;
      while (side * v <= 0.0 && k++ < 80) {
        t *= 0.5;
        v = value(t);
      }
      if (side * v <= 0.0) return t;
      t_prev = t;
      v_prev = v;
      dt = t;
      continue;
    }
    if (v == 0.0) return t;
    if (side * v < 0.0) {
      boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 3);
      std::uintmax_t iters = 200;
      const auto [a, b] = boost::math::tools::toms748_solve(value, t_prev, t, v_prev, v, tol, iters);
      return std::abs(value(a)) <= std::abs(value(b)) ? a : b;
    }
    t_prev = t;
    v_prev = v;
    if (t >= t_max) throw_no_root(sign, t_max, y);
    if (t > 5.0 * t_char) dt *= 1.5;
  }
}

}  // namespace

Mat matrix_exp(const Mat& A, double t) {
  if (!std::isfinite(t)) throw Error(ErrorKind::NonFinite, "matrix_exp: t is not finite", {{"t", t}});
  if (A.rows() != A.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "matrix_exp needs a square matrix", {{"rows", A.rows()}, {"cols", A.cols()}});
  }
  Mat out;
  if (A.rows() == 1) {
    out = Mat::Constant(1, 1, std::exp(t * A(0, 0)));
  } else {
    Mat B = t * A;
    const double norm1 = B.cwiseAbs().colwise().sum().maxCoeff();
    int s = 0;
    if (norm1 > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    if (s > 0) B /= std::ldexp(1.0, s);
    out = pade13(B);
    for (int i = 0; i < s; ++i) out = out * out;
  }
  if (!out.allFinite()) throw Error(ErrorKind::NonFinite, "matrix_exp overflowed", {{"t", t}});
  return out;
}

Vec expm_minus_identity_apply(const Mat& g_y, double t, const Vec& v) {
  if (g_y.rows() == 1) return std::expm1(t * g_y(0, 0)) * v;
  return matrix_exp(g_y, t) * v - v;
}

FlowStep flow_step(const NormalFormCoeffs& c, Side sign, double t, const Vec& x, const Vec& y) {
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "flow_step needs t >= 0", {{"t", t}});
  FlowStep s;
  s.sign = sign;
  s.t = t;
  s.x_start = x;
  s.y_start = y;
  s.x_end = x + c.f(sign) * t;
  const Vec d = y - c.y_sl(sign);
  s.y_end = y + expm_minus_identity_apply(c.g_y0, t, d);
  return s;
}

SwitchValue switching_value(const NormalFormCoeffs& c, Side sign, double t, const Vec& y, double offset) {
  const Vec d = y - c.y_sl(sign);
  const double hf = c.h_rd_x0.dot(c.f(sign));
  SwitchValue v;
  v.value = offset + hf * t - c.hy_gyinv.dot(expm_minus_identity_apply(c.g_y0, t, d));
  const Vec Ed = d + expm_minus_identity_apply(c.g_y0, t, d);
  v.slope = hf - c.h_y0.dot(Ed);
  return v;
}

double next_switch_time(const NormalFormCoeffs& c, Side sign, const Vec& y, const RootOptions& opts) {
  const double scale = 1.0 + y.norm();
  const double t_max = opts.t_max > 0.0 ? opts.t_max : default_t_max(c, sign, y, 0.0);
  const double tan_tol = opts.tangency_tol > 0.0 ? opts.tangency_tol : 1e-10 * scale;
  const double slope0 = c.T(sign) - c.h_y0.dot(y);
  if (std::abs(slope0) < tan_tol) {
    throw Error(ErrorKind::TangencyAtStart, std::string("F_") + side_name(sign) + " is tangent to H0 at the start",
                {{"sign", side_name(sign)}, {"slope", slope0}, {"tolerance", tan_tol}});
  }
  const double side = side_sign(sign);
  if (side * slope0 < 0.0) {
    throw Error(ErrorKind::NotEntering, std::string("F_") + side_name(sign) + " does not enter its half space",
                {{"sign", side_name(sign)}, {"slope", slope0}});
  }
  const Vec d = y - c.y_sl(sign);
  const double curv = -c.h_y0.dot(c.g_y0 * d);
  double t_seed = curv != 0.0 ? -2.0 * slope0 / curv : -1.0;
  if (!(t_seed > 0.0) || !std::isfinite(t_seed)) t_seed = 1.0;
  const double t_char = decay_time(c.g_y0);
  const double dt0 = std::min(t_seed, t_char) / 16.0;
  auto value = [&](double t) { return switching_value(c, sign, t, y).value; };
  return first_crossing(value, side, 0.0, dt0, t_char, t_max, sign, y);
}

double time_to_surface(const NormalFormCoeffs& c, Side sign, const Vec& y, double offset, const RootOptions& opts) {
  if (offset == 0.0) return 0.0;
  const double t_max = opts.t_max > 0.0 ? opts.t_max : default_t_max(c, sign, y, offset);
  const double t_char = decay_time(c.g_y0);
  const double side = offset > 0.0 ? 1.0 : -1.0;
  auto value = [&](double t) { return switching_value(c, sign, t, y, offset).value; };
  return first_crossing(value, side, offset, t_char / 16.0, t_char, t_max, sign, y);
}

Lemma1Step minus_plus_step(const NormalFormCoeffs& c, const Vec& x, const Vec& y, const RootOptions& opts) {
  Lemma1Step s;
  s.t1 = next_switch_time(c, Side::Minus, y, opts);
  FlowStep a = flow_step(c, Side::Minus, s.t1, x, y);
  s.x1 = std::move(a.x_end);
  s.y1 = std::move(a.y_end);
  s.t2 = next_switch_time(c, Side::Plus, s.y1, opts);
  FlowStep b = flow_step(c, Side::Plus, s.t2, s.x1, s.y1);
  s.x2 = std::move(b.x_end);
  s.y2 = std::move(b.y_end);
  return s;
}

bool in_H0_plus(const NormalFormCoeffs& c, const Vec& x, const Vec& y, double tol) {
  const double p1 = c.h_rd_x0.dot(x) - c.hy_gyinv.dot(y);
  const double p2 = c.h_y0.dot(y);
  const double scale = 1.0 + x.norm() + y.norm();
  return std::abs(p1) <= tol * scale && p2 >= c.T_plus - tol * (1.0 + std::abs(c.T_plus));
}

Lemma1Step lemma1_step(const NormalFormCoeffs& c, const Vec& x, const Vec& y, const RootOptions& opts) {
  if (!in_H0_plus(c, x, y)) {
    const double p1 = c.h_rd_x0.dot(x) - c.hy_gyinv.dot(y);
    throw Error(ErrorKind::PreconditionH0Plus, "start is not in H0+ (need p1 = 0 and h_y0 y >= h_x0 f_plus0)",
                {{"p1", p1}, {"p2", c.h_y0.dot(y)}, {"T_plus", c.T_plus}});
  }
  return minus_plus_step(c, x, y, opts);
}

SlidingField full_sliding_field(const NormalFormCoeffs& c, const Vec& x, const Vec& y) {
  const Vec df = c.f_minus0 - c.f_plus0;
  const double den = c.h_x0.dot(df);
  const double scale = c.h_x0.norm() * (c.f_plus0.norm() + c.f_minus0.norm());
  if (!(std::abs(den) > 1e-14 * scale)) {
    throw Error(ErrorKind::DegenerateSliding, "h_x0 (f_plus0 - f_minus0) vanishes", {{"denominator", den}});
  }
  const int n = c.n, m = c.m;
  SlidingField s;
  s.b_s.resize(n + m);
  s.b_s.head(n) = c.f_plus0 - (c.T_plus / den) * df;
  s.b_s.tail(m) = -c.g_x0 * c.f_plus0 + (c.T_plus / den) * (c.g_x0 * df);
  s.A_s = Mat::Zero(n + m, n + m);
  s.A_s.block(0, n, n, m) = df * c.h_y0 / den;
  s.A_s.block(n, n, m, m) = c.g_y0 - c.g_x0 * df * c.h_y0 / den;
  Vec z(n + m);
  z << x, y;
  const Vec F = s.b_s + s.A_s * z;
  s.Fx = F.head(n);
  s.Fy = F.tail(m);
  s.alpha = (c.T_plus - c.h_y0.dot(y)) / (-den);
  return s;
}

}  // namespace sfslide
