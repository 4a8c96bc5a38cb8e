#include "sfslide/fullsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

#include "sfslide/error.hpp"
#include "sfslide/flows.hpp"
#include "sfslide/reduction.hpp"
#include "sfslide/returnmap.hpp"

namespace sfslide {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Plus: return "+";
    case Mode::Minus: return "-";
    case Mode::Slide: return "s";
  }
  return "?";
}

std::string to_string(SimEvent::Kind k) {
  switch (k) {
    case SimEvent::Kind::Start: return "start";
    case SimEvent::Kind::Switch: return "switch";
    case SimEvent::Kind::SlideEntry: return "slide_entry";
    case SimEvent::Kind::SlideExit: return "slide_exit";
  }
  return "?";
}

std::size_t SimTrajectory::switch_count() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                [](const SimEvent& e) { return e.kind != SimEvent::Kind::Start; }));
}

namespace {

RowVec grad_h(const FullSystemSpec& s, const Vec& x, const Vec& y, double eps) {
  RowVec g(s.n + s.m);
  if (s.jac.h_x && s.jac.h_y) {
    g << s.jac.h_x(x, y, eps), s.jac.h_y(x, y, eps);
    return g;
  }
  Vec xp = x, yp = y;
  for (int i = 0; i < s.n; ++i) {
    const double d = std::max(1e-7, 1e-8 * std::abs(x[i]));
    xp[i] = x[i] + d;
    const double hp = s.h(xp, y, eps);
    xp[i] = x[i] - d;
    g[i] = (hp - s.h(xp, y, eps)) / (2 * d);
    xp[i] = x[i];
  }
  for (int i = 0; i < s.m; ++i) {
    const double d = std::max(1e-7, 1e-8 * std::abs(y[i]));
    yp[i] = y[i] + d;
    const double hp = s.h(x, yp, eps);
    yp[i] = y[i] - d;
    g[s.n + i] = (hp - s.h(x, yp, eps)) / (2 * d);
    yp[i] = y[i];
  }
  return g;
}

/// The system seen in the zoomed variable z, state = center + scale z, in fast time.
class Frame {
 public:
  Frame(const FullSystemSpec& spec, Vec cx, Vec cy, double scale)
      : spec_(spec), cx_(std::move(cx)), cy_(std::move(cy)), s_(scale), n_(spec.n), m_(spec.m) {}

  Vec x(const Vec& z) const { return cx_ + s_ * z.head(n_); }
  Vec y(const Vec& z) const { return cy_ + s_ * z.tail(m_); }
  Vec to_z(const Vec& x, const Vec& y) const {
    Vec z(n_ + m_);
    z << (x - cx_) / s_, (y - cy_) / s_;
    return z;
  }
  double scale() const { return s_; }

  double h(const Vec& z) const { return spec_.h(x(z), y(z), spec_.eps) / s_; }
  RowVec grad(const Vec& z) const { return grad_h(spec_, x(z), y(z), spec_.eps); }

  struct Fields {
    Vec plus, minus;
  };

  Fields fields(const Vec& z) const {
    const Vec xs = x(z), ys = y(z);
    const Vec g = spec_.g(xs, ys, spec_.eps) / s_;
    Fields f{Vec(n_ + m_), Vec(n_ + m_)};
    f.plus << (spec_.eps / s_) * spec_.f_plus(xs, ys, spec_.eps), g;
    f.minus << (spec_.eps / s_) * spec_.f_minus(xs, ys, spec_.eps), g;
    return f;
  }

  /// Filippov weight of F_minus keeping h constant: alpha = sigma+ / (sigma+ - sigma-).
  double alpha(const Vec& z, const Fields& f) const {
    const RowVec gr = grad(z);
    const double sp = gr.dot(f.plus), sm = gr.dot(f.minus);
    return sp / (sp - sm);
  }

  Vec rhs(const Vec& z, Mode mode) const {
    Fields f = fields(z);
    switch (mode) {
      case Mode::Plus: return f.plus;
      case Mode::Minus: return f.minus;
      case Mode::Slide: {
        const double a = alpha(z, f);
        return (1.0 - a) * f.plus + a * f.minus;
      }
    }
    return f.plus;
  }

  /// Newton projection onto h = 0 along the gradient.
  Vec project(Vec z) const {
    for (int it = 0; it < 4; ++it) {
      const double hz = h(z);
      if (hz == 0.0) break;
      const RowVec gr = grad(z);
      const double g2 = gr.squaredNorm();
      if (g2 == 0.0) break;
      z -= (hz / g2) * gr.transpose();
    }
    return z;
  }

 private:
  const FullSystemSpec& spec_;
  Vec cx_, cy_;
  double s_;
  int n_, m_;
};

// Dormand-Prince 5(4) tableau with Hairer's dense-output coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct RkStep {
  Vec z1;
  double err = 0.0;     // scaled error norm, <= 1 accepted
  double err_abs = 0.0; // max-norm of the local error estimate
  std::array<Vec, 5> cont;

  Vec dense(double theta) const {
    const double t1 = 1.0 - theta;
    return cont[0] + theta * (cont[1] + t1 * (cont[2] + theta * (cont[3] + t1 * cont[4])));
  }
};

RkStep rk_step(const Frame& fr, const Vec& z, double h, Mode mode, double rtol, double atol) {
  const Vec k1 = fr.rhs(z, mode);
  const Vec k2 = fr.rhs(z + h * a21 * k1, mode);
  const Vec k3 = fr.rhs(z + h * (a31 * k1 + a32 * k2), mode);
  const Vec k4 = fr.rhs(z + h * (a41 * k1 + a42 * k2 + a43 * k3), mode);
  const Vec k5 = fr.rhs(z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), mode);
  const Vec k6 = fr.rhs(z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), mode);
  RkStep r;
  r.z1 = z + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
  const Vec k7 = fr.rhs(r.z1, mode);
  const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  const Vec sc = (atol + rtol * z.cwiseAbs().cwiseMax(r.z1.cwiseAbs()).array()).matrix();
  r.err = std::sqrt((err.cwiseQuotient(sc)).squaredNorm() / static_cast<double>(z.size()));
  r.err_abs = err.cwiseAbs().maxCoeff();
  const Vec ydiff = r.z1 - z;
  const Vec bspl = h * k1 - ydiff;
  r.cont = {z, ydiff, bspl, ydiff - h * k7 - bspl, h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7)};
  if (!r.z1.allFinite()) r.err = std::numeric_limits<double>::infinity();
  return r;
}

Mode mode_from_sigmas(double sp, double sm, Side escape) {
  if (sp > 0.0 && sm < 0.0) return escape == Side::Plus ? Mode::Plus : Mode::Minus;
  if (sp == 0.0 && sm == 0.0) return Mode::Slide;
  if (sp >= 0.0 && sm >= 0.0) return Mode::Plus;
  if (sp <= 0.0 && sm <= 0.0) return Mode::Minus;
  return Mode::Slide;
}

}  // namespace

Mode select_mode(const FullSystemSpec& spec, const Vec& x, const Vec& y, double h_tol, Side escape_side) {
  const double h = spec.h(x, y, spec.eps);
  if (h > h_tol) return Mode::Plus;
  if (h < -h_tol) return Mode::Minus;
  const RowVec gr = grad_h(spec, x, y, spec.eps);
  const Vec g = spec.g(x, y, spec.eps);
  Vec Fp(spec.n + spec.m), Fm(spec.n + spec.m);
  Fp << spec.eps * spec.f_plus(x, y, spec.eps), g;
  Fm << spec.eps * spec.f_minus(x, y, spec.eps), g;
  return mode_from_sigmas(gr.dot(Fp), gr.dot(Fm), escape_side);
}

SimTrajectory integrate_full(const FullSystemSpec& spec, const Vec& x0, const Vec& y0, double t_end,
                             const SimOptions& opts) {
  validate_spec(spec);
  if (x0.size() != spec.n || y0.size() != spec.m) {
    throw Error(ErrorKind::DimensionMismatch, "initial state has the wrong size",
                {{"n", spec.n}, {"m", spec.m}, {"x0", x0.size()}, {"y0", y0.size()}});
  }
  if (!(t_end >= 0.0)) throw Error(ErrorKind::InvalidArgument, "t_end must be non-negative", {{"t_end", t_end}});
  if (!spec.domain.contains(x0, y0)) {
    throw Error(ErrorKind::InvalidArgument, "initial state lies outside the declared domain");
  }
  const double scale = opts.scale > 0.0 ? opts.scale : spec.eps;
  const Frame fr(spec, opts.center_x.size() ? opts.center_x : x0, opts.center_y.size() ? opts.center_y : y0, scale);
  const double tau_end = t_end / spec.eps;
  const double eps_mach = std::numeric_limits<double>::epsilon();

  SimTrajectory traj;
  traj.eps = spec.eps;
  Vec z = fr.to_z(x0, y0);
  double tau = 0.0;

  auto sample = [&](const Vec& zz, double t, Mode mode) {
    SimSample s;
    s.tau = t;
    s.x = fr.x(zz);
    s.y = fr.y(zz);
    s.h = fr.h(zz) * scale;
    if (mode == Mode::Slide) s.alpha = fr.alpha(zz, fr.fields(zz));
    return s;
  };
  auto record_event = [&](SimEvent::Kind kind, const Vec& zz, double t, Mode from, Mode to) {
    SimEvent e;
    e.kind = kind;
    e.tau = t;
    e.from = from;
    e.to = to;
    e.x = fr.x(zz);
    e.y = fr.y(zz);
    e.residual = std::abs(fr.h(zz)) * scale;
    traj.events.push_back(std::move(e));
  };

  const double h_tol0 = opts.event_tol;
  Mode mode;
  {
    const double hz = fr.h(z);
    if (std::abs(hz) > h_tol0) {
      mode = hz > 0.0 ? Mode::Plus : Mode::Minus;
    } else {
      const auto f = fr.fields(z);
      const RowVec gr = fr.grad(z);
      mode = mode_from_sigmas(gr.dot(f.plus), gr.dot(f.minus), opts.escape_side);
      if (mode == Mode::Slide) z = fr.project(z);
    }
  }
  record_event(SimEvent::Kind::Start, z, 0.0, mode, mode);
  traj.segments.push_back({mode, 0.0, 0.0, {}});
  if (opts.record_samples) traj.segments.back().samples.push_back(sample(z, 0.0, mode));

  // event function: positive while the current mode remains valid
  double thr = 0.0;
  auto event_value = [&](const Vec& zz, Mode md) -> double {
    if (md == Mode::Slide) {
      const double a = fr.alpha(zz, fr.fields(zz));
      return std::isfinite(a) ? std::min(a, 1.0 - a) : -1.0;
    }
    return (md == Mode::Plus ? 1.0 : -1.0) * fr.h(zz) + thr;
  };

  double h = tau_end > 0.0 ? std::min(1e-2, tau_end) : 0.0;
  if (opts.max_dtau > 0.0) h = std::min(h, opts.max_dtau);
  double tau_last_event = 0.0;
  std::size_t since_sample = 0;

  while (tau < tau_end) {
    if (traj.accepted_steps + traj.rejected_steps > opts.max_steps) {
      throw Error(ErrorKind::StepUnderflow, "step budget exhausted", {{"tau", tau}, {"max_steps", opts.max_steps}});
    }
    h = std::min(h, tau_end - tau);
    if (opts.max_dtau > 0.0) h = std::min(h, opts.max_dtau);
    if (h < 1e-14 * std::max(1.0, std::abs(tau)) && tau_end - tau > 1e-14 * std::max(1.0, std::abs(tau))) {
      throw Error(ErrorKind::StepUnderflow, "step size underflow", {{"tau", tau}, {"h", h}});
    }
    RkStep st = rk_step(fr, z, h, mode, opts.rtol, opts.atol);
    if (!(st.err <= 1.0)) {
      ++traj.rejected_steps;
      h *= std::isfinite(st.err) ? std::max(0.2, 0.9 * std::pow(st.err, -0.2)) : 0.1;
      continue;
    }
    if (mode == Mode::Slide) st.z1 = fr.project(st.z1);

    const double dwell = 10.0 * eps_mach * std::max(1.0, tau);
    double theta_hit = -1.0, theta_prev = 0.0;
    for (double th : {0.25, 0.5, 0.75, 1.0}) {
      if (tau + th * h - tau_last_event < dwell) continue;
      const Vec zz = th < 1.0 ? st.dense(th) : st.z1;
      if (event_value(zz, mode) < 0.0) {
        theta_hit = th;
        break;
      }
      theta_prev = th;
    }
    if (theta_hit > 0.0) {
      const double end_val = event_value(st.z1, mode);
      if (end_val >= 0.0) {
        // excursion inside the step; resolve with a smaller one
        ++traj.rejected_steps;
        h *= 0.25;
        continue;
      }
      auto phi = [&](double s) {
        RkStep q = rk_step(fr, z, s, mode, opts.rtol, opts.atol);
        if (mode == Mode::Slide) q.z1 = fr.project(q.z1);
        return event_value(q.z1, mode);
      };
      double sa = theta_prev * h, sb = h;
      if (theta_hit < 1.0) {
        const double s_try = theta_hit * h;
        if (phi(s_try) < 0.0) sb = s_try;
      }
      double fa = sa > 0.0 ? phi(sa) : event_value(z, mode);
      if (fa < 0.0) {
        sa = 0.0;
        fa = event_value(z, mode);
      }
      if (fa <= 0.0) fa = std::numeric_limits<double>::min();
      const double fb = phi(sb);
      double s_star = sb;
      if (fb < 0.0) {
        boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 3);
        std::uintmax_t iters = 200;
        const auto [ra, rb] = boost::math::tools::toms748_solve(phi, sa, sb, fa, fb, tol, iters);
        s_star = phi(ra) < 0.0 ? ra : rb;
      }
      RkStep q = rk_step(fr, z, s_star, mode, opts.rtol, opts.atol);
      if (mode == Mode::Slide) q.z1 = fr.project(q.z1);
      Vec zs = q.z1;
      const double tau_s = tau + s_star;
      ++traj.accepted_steps;
      traj.max_error_estimate = std::max(traj.max_error_estimate, q.err_abs * scale);

      // next mode
      const Mode old = mode;
      const auto f = fr.fields(zs);
      const RowVec gr = fr.grad(zs);
      const double sp = gr.dot(f.plus), sm = gr.dot(f.minus);
      SimEvent::Kind kind = SimEvent::Kind::Switch;
      bool silent = false;
      if (old == Mode::Slide) {
        const double a = fr.alpha(zs, f);
        mode = a <= 0.5 ? Mode::Plus : Mode::Minus;
        kind = SimEvent::Kind::SlideExit;
        thr = opts.slide_tol / scale;
      } else {
        thr = 0.0;
        const double fscale = 1.0 + f.plus.norm() + f.minus.norm();
        silent = (f.plus - f.minus).norm() <= 1e-14 * fscale;
        if (old == Mode::Plus) {
          mode = (sm <= 0.0 || sp >= 0.0) ? Mode::Minus : Mode::Slide;
        } else {
          mode = (sp >= 0.0 || sm <= 0.0) ? Mode::Plus : Mode::Slide;
        }
        if (mode == Mode::Slide) {
          kind = SimEvent::Kind::SlideEntry;
          zs = fr.project(zs);
        }
      }
      if (opts.record_samples) traj.segments.back().samples.push_back(sample(zs, tau_s, old));
      traj.segments.back().tau1 = tau_s;
      if (!silent) record_event(kind, zs, tau_s, old, mode);
      if (traj.switch_count() > opts.max_events) {
        throw Error(ErrorKind::EventLoop, "event count exceeds max_events",
                    {{"max_events", opts.max_events}, {"tau", tau_s}});
      }
      traj.segments.push_back({mode, tau_s, tau_s, {}});
      if (opts.record_samples) traj.segments.back().samples.push_back(sample(zs, tau_s, mode));
      z = std::move(zs);
      tau = tau_s;
      tau_last_event = tau_s;
      since_sample = 0;
      continue;
    }

    tau += h;
    z = std::move(st.z1);
    ++traj.accepted_steps;
    traj.max_error_estimate = std::max(traj.max_error_estimate, st.err_abs * scale);
    if (thr > 0.0 && mode != Mode::Slide && event_value(z, mode) > 2.0 * thr) thr = 0.0;
    traj.segments.back().tau1 = tau;
    if (opts.record_samples && (++since_sample >= std::max<std::size_t>(1, opts.sample_stride) || tau >= tau_end)) {
      traj.segments.back().samples.push_back(sample(z, tau, mode));
      since_sample = 0;
    }
    h *= std::clamp(0.9 * std::pow(std::max(st.err, 1e-10), -0.2), 0.2, 5.0);
  }
  traj.x_end = fr.x(z);
  traj.y_end = fr.y(z);
  traj.tau_end = tau;
  return traj;
}

std::vector<Theorem1Row> verify_theorem1(const FullSystemSpec& spec, const Vec& x0, const Vec& delta_x,
                                         const Vec& delta_y, const std::vector<double>& eps_list, double t_scaled,
                                         const SimOptions& opts) {
  if (!(t_scaled >= 0.0)) throw Error(ErrorKind::InvalidArgument, "t_scaled must be non-negative");
  const NormalFormCoeffs c = normal_form_at(spec, x0);
  const ReducedSliding rs = reduced_sliding(c);
  const Vec drift_y = -c.G * rs.f_rd_s;
  std::vector<Theorem1Row> rows;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive", {{"eps", eps}});
    FullSystemSpec s = spec;
    s.eps = eps;
    const Vec xs = x0 + eps * delta_x;
    const Vec ys = c.y_c0 + eps * delta_y;
    SimOptions o = opts;
    o.center_x = c.x0;
    o.center_y = c.y_c0;
    o.scale = eps;
    const SimTrajectory tr = integrate_full(s, xs, ys, eps * t_scaled, o);
    auto residual = [&](const Vec& x, const Vec& y, double tau, double& rx, double& ry) {
      rx = ((x - xs) - eps * tau * rs.f_rd_s).norm() / eps;
      ry = ((y - ys) - eps * tau * drift_y).norm() / eps;
    };
    Theorem1Row row;
    row.eps = eps;
    residual(tr.x_end, tr.y_end, tr.tau_end, row.r_x_norm, row.r_y_norm);
    row.r_norm = std::hypot(row.r_x_norm, row.r_y_norm);
    row.max_r_norm = row.r_norm;
    for (const auto& seg : tr.segments) {
      for (const auto& smp : seg.samples) {
        double rx = 0, ry = 0;
        residual(smp.x, smp.y, smp.tau, rx, ry);
        row.max_r_norm = std::max(row.max_r_norm, std::hypot(rx, ry));
      }
    }
    row.events = tr.switch_count();
    rows.push_back(row);
  }
  return rows;
}

namespace {

/// Exact piecewise truncated trajectory starting in H0+.
class TruncatedPath {
 public:
  TruncatedPath(const NormalFormCoeffs& c, Vec x, Vec y, double t_span) : c_(c) {
    double t = 0.0;
    while (t <= t_span) {
      const Lemma1Step s = lemma1_step(c, x, y);
      legs_.push_back({t, Side::Minus, x, y});
      legs_.push_back({t + s.t1, Side::Plus, s.x1, s.y1});
      t += s.t1 + s.t2;
      x = s.x2;
      y = s.y2;
    }
    legs_.push_back({t, Side::Minus, x, y});
  }

  std::pair<Vec, Vec> at(double t) const {
    auto it = std::upper_bound(legs_.begin(), legs_.end(), t, [](double v, const Leg& l) { return v < l.t0; });
    const Leg& l = *(it == legs_.begin() ? it : std::prev(it));
    const FlowStep f = flow_step(c_, l.side, std::max(0.0, t - l.t0), l.x, l.y);
    return {f.x_end, f.y_end};
  }

 private:
  struct Leg {
    double t0;
    Side side;
    Vec x, y;
  };
  const NormalFormCoeffs& c_;
  std::vector<Leg> legs_;
};

}  // namespace

TruncatedComparison compare_truncated(const FullSystemSpec& spec, const Vec& x0, double eps, double t_scaled,
                                      const std::optional<Vec>& start_y, const SimOptions& opts) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive", {{"eps", eps}});
  const NormalFormCoeffs c = normal_form_at(spec, x0);
  const Vec yn0 = start_y ? *start_y : c.y_sl_plus;
  const Vec xn0 = x_on_H0(c, yn0);
  const TruncatedPath path(c, xn0, yn0, t_scaled);

  FullSystemSpec s = spec;
  s.eps = eps;
  const NormalPoint start = from_normal(c, eps, xn0, yn0);
  SimOptions o = opts;
  o.center_x = c.x0;
  o.center_y = c.y_c0;
  o.scale = eps;
  o.record_samples = true;
  const SimTrajectory tr = integrate_full(s, start.x, start.y, eps * t_scaled, o);

  TruncatedComparison out;
  out.eps = eps;
  out.events = tr.switch_count();
  for (const auto& seg : tr.segments) {
    for (const auto& smp : seg.samples) {
      const NormalPoint p = to_normal(c, eps, smp.x, smp.y);
      const auto [xt, yt] = path.at(smp.tau);
      const double gx = (p.x - xt).norm();
      const double gy = (p.y - yt).norm();
      out.max_gap_x = std::max(out.max_gap_x, gx);
      out.max_gap_y = std::max(out.max_gap_y, gy);
      out.max_gap = std::max(out.max_gap, std::hypot(gx, gy));
      ++out.samples;
    }
  }
  return out;
}

}  // namespace sfslide
