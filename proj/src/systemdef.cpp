#include "sfslide/systemdef.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sfslide/error.hpp"

namespace sfslide {

namespace {

constexpr double kRcondMin = 1e-12;

double fd_step(double v) { return std::max(1e-6, 1e-8 * std::abs(v)); }

RowVec fd_h_x(const FullSystemSpec& s, const Vec& x, const Vec& y, double eps) {
  RowVec out(s.n);
  Vec xp = x, xm = x;
  for (int i = 0; i < s.n; ++i) {
    const double d = fd_step(x[i]);
    xp[i] = x[i] + d;
    xm[i] = x[i] - d;
    out[i] = (s.h(xp, y, eps) - s.h(xm, y, eps)) / (2 * d);
    xp[i] = xm[i] = x[i];
  }
  return out;
}

RowVec fd_h_y(const FullSystemSpec& s, const Vec& x, const Vec& y, double eps) {
  RowVec out(s.m);
  Vec yp = y, ym = y;
  for (int i = 0; i < s.m; ++i) {
    const double d = fd_step(y[i]);
    yp[i] = y[i] + d;
    ym[i] = y[i] - d;
    out[i] = (s.h(x, yp, eps) - s.h(x, ym, eps)) / (2 * d);
    yp[i] = ym[i] = y[i];
  }
  return out;
}

Mat fd_g_x(const FullSystemSpec& s, const Vec& x, const Vec& y, double eps) {
  Mat out(s.m, s.n);
  Vec xp = x, xm = x;
  for (int i = 0; i < s.n; ++i) {
    const double d = fd_step(x[i]);
    xp[i] = x[i] + d;
    xm[i] = x[i] - d;
    out.col(i) = (s.g(xp, y, eps) - s.g(xm, y, eps)) / (2 * d);
    xp[i] = xm[i] = x[i];
  }
  return out;
}

Mat fd_g_y(const FullSystemSpec& s, const Vec& x, const Vec& y, double eps) {
  Mat out(s.m, s.m);
  Vec yp = y, ym = y;
  for (int i = 0; i < s.m; ++i) {
    const double d = fd_step(y[i]);
    yp[i] = y[i] + d;
    ym[i] = y[i] - d;
    out.col(i) = (s.g(x, yp, eps) - s.g(x, ym, eps)) / (2 * d);
    yp[i] = ym[i] = y[i];
  }
  return out;
}

void expect_size(const char* what, Eigen::Index got, Eigen::Index expected) {
  if (got != expected) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " has size " + std::to_string(got) + ", expected " + std::to_string(expected),
                {{"which", what}, {"expected", expected}, {"got", got}});
  }
}

void expect_shape(const char* what, const Mat& A, Eigen::Index rows, Eigen::Index cols) {
  if (A.rows() != rows || A.cols() != cols) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " has shape " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                    ", expected " + std::to_string(rows) + "x" + std::to_string(cols),
                {{"which", what}, {"expected", {rows, cols}}, {"got", {A.rows(), A.cols()}}});
  }
}

double reciprocal_condition(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0.0;
  return s[s.size() - 1] / s[0];
}

}  // namespace

bool Domain::contains(const Vec& x, const Vec& y) const {
  if (empty()) return true;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < x_lower[i] || x[i] > x_upper[i]) return false;
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] < y_lower[i] || y[i] > y_upper[i]) return false;
  }
  return true;
}

Jet jet_at(const FullSystemSpec& s, const Vec& x, const Vec& y, double eps) {
  Jet j;
  j.h_x = s.jac.h_x ? s.jac.h_x(x, y, eps) : fd_h_x(s, x, y, eps);
  j.h_y = s.jac.h_y ? s.jac.h_y(x, y, eps) : fd_h_y(s, x, y, eps);
  j.g_x = s.jac.g_x ? s.jac.g_x(x, y, eps) : fd_g_x(s, x, y, eps);
  j.g_y = s.jac.g_y ? s.jac.g_y(x, y, eps) : fd_g_y(s, x, y, eps);
  if (s.jac.h_eps) {
    j.h_eps = s.jac.h_eps(x, y, eps);
  } else {
    const double d = fd_step(eps);
    j.h_eps = (s.h(x, y, eps + d) - s.h(x, y, eps - d)) / (2 * d);
  }
  if (s.jac.g_eps) {
    j.g_eps = s.jac.g_eps(x, y, eps);
  } else {
    const double d = fd_step(eps);
    j.g_eps = (s.g(x, y, eps + d) - s.g(x, y, eps - d)) / (2 * d);
  }
  return j;
}

ValidationResult validate_spec(const FullSystemSpec& s) {
  ValidationResult r;
  if (s.n < 1 || s.m < 1) {
    throw Error(ErrorKind::InvalidArgument, "dimensions must satisfy n >= 1 and m >= 1", {{"n", s.n}, {"m", s.m}});
  }
  if (!(s.eps > 0.0) || !std::isfinite(s.eps)) {
    throw Error(ErrorKind::InvalidArgument, "eps must be positive", {{"eps", s.eps}});
  }
  if (!s.f_plus || !s.f_minus || !s.g || !s.h) {
    throw Error(ErrorKind::InvalidArgument, "f_plus, f_minus, g and h must all be provided");
  }
  Vec x = Vec::Zero(s.n);
  Vec y = Vec::Zero(s.m);
  if (!s.domain.empty()) {
    expect_size("domain.x_lower", s.domain.x_lower.size(), s.n);
    expect_size("domain.x_upper", s.domain.x_upper.size(), s.n);
    expect_size("domain.y_lower", s.domain.y_lower.size(), s.m);
    expect_size("domain.y_upper", s.domain.y_upper.size(), s.m);
    x = 0.5 * (s.domain.x_lower + s.domain.x_upper);
    y = 0.5 * (s.domain.y_lower + s.domain.y_upper);
  }
  expect_size("f_plus", s.f_plus(x, y, s.eps).size(), s.n);
  r.checked.emplace_back("f_plus");
  expect_size("f_minus", s.f_minus(x, y, s.eps).size(), s.n);
  r.checked.emplace_back("f_minus");
  expect_size("g", s.g(x, y, s.eps).size(), s.m);
  r.checked.emplace_back("g");
  (void)s.h(x, y, s.eps);
  r.checked.emplace_back("h");
  const Jet j = jet_at(s, x, y, s.eps);
  expect_shape("h_x", j.h_x, 1, s.n);
  expect_shape("h_y", j.h_y, 1, s.m);
  expect_shape("g_x", j.g_x, s.m, s.n);
  expect_shape("g_y", j.g_y, s.m, s.m);
  expect_size("g_eps", j.g_eps.size(), s.m);
  r.checked.emplace_back("jacobians");
  return r;
}

AffineData NormalFormCoeffs::affine() const {
  AffineData d;
  d.f_plus0 = f_plus0;
  d.f_minus0 = f_minus0;
  d.g_x0 = g_x0;
  d.g_y0 = g_y0;
  d.h_x0 = h_x0;
  d.h_y0 = h_y0;
  d.g_eps0 = g_eps0;
  d.h_eps0 = h_eps0;
  return d;
}

NormalFormCoeffs make_coeffs(const AffineData& d, Vec x0, Vec y_c0) {
  const auto n = d.f_plus0.size();
  const auto m = d.h_y0.size();
  if (n < 1 || m < 1) {
    throw Error(ErrorKind::InvalidArgument, "coefficients need n >= 1 and m >= 1", {{"n", n}, {"m", m}});
  }
  expect_size("f_minus0", d.f_minus0.size(), n);
  expect_shape("g_x0", d.g_x0, m, n);
  expect_shape("g_y0", d.g_y0, m, m);
  if (d.h_x0.has_value() == d.h_rd_x0.has_value()) {
    throw Error(ErrorKind::InvalidArgument, "exactly one of h_x0 and h_rd_x0 must be given");
  }
  if (d.h_x0) expect_size("h_x0", d.h_x0->size(), n);
  if (d.h_rd_x0) expect_size("h_rd_x0", d.h_rd_x0->size(), n);
  if (d.g_eps0.size() != 0) expect_size("g_eps0", d.g_eps0.size(), m);

  const double rcond = reciprocal_condition(d.g_y0);
  if (!(rcond >= kRcondMin)) {
    throw Error(ErrorKind::SingularGy, "g_y0 is numerically singular (reciprocal condition " + std::to_string(rcond) + ")",
                {{"rcond", rcond}, {"threshold", kRcondMin}});
  }

  NormalFormCoeffs c;
  c.n = static_cast<int>(n);
  c.m = static_cast<int>(m);
  c.f_plus0 = d.f_plus0;
  c.f_minus0 = d.f_minus0;
  c.g_x0 = d.g_x0;
  c.g_y0 = d.g_y0;
  c.h_y0 = d.h_y0;
  c.g_eps0 = d.g_eps0.size() ? d.g_eps0 : Vec::Zero(m);
  c.h_eps0 = d.h_eps0;

  const auto lu = d.g_y0.partialPivLu();
  c.G = lu.solve(d.g_x0);
  c.hy_gyinv = d.g_y0.transpose().partialPivLu().solve(d.h_y0.transpose()).transpose();
  if (d.h_x0) {
    c.h_x0 = *d.h_x0;
    c.h_rd_x0 = c.h_x0 - c.h_y0 * c.G;
  } else {
    c.h_rd_x0 = *d.h_rd_x0;
    c.h_x0 = c.h_rd_x0 + c.h_y0 * c.G;
  }
  c.y_sl_plus = c.G * c.f_plus0;
  c.y_sl_minus = c.G * c.f_minus0;
  c.T_plus = c.h_x0.dot(c.f_plus0);
  c.T_minus = c.h_x0.dot(c.f_minus0);
  c.S_plus = c.h_y0.dot(c.y_sl_plus);
  c.S_minus = c.h_y0.dot(c.y_sl_minus);

  const double nrm2 = c.h_rd_x0.squaredNorm();
  c.delta_h = nrm2 > 0.0 ? (c.hy_gyinv.dot(c.g_eps0) - c.h_eps0) / nrm2 : 0.0;
  c.delta_x = c.delta_h * c.h_rd_x0.transpose();
  c.delta_y = -lu.solve(c.g_x0 * c.delta_x + c.g_eps0);

  c.x0 = x0.size() ? std::move(x0) : Vec::Zero(n);
  c.y_c0 = y_c0.size() ? std::move(y_c0) : Vec::Zero(m);
  return c;
}

AssumptionReport check_assumptions(const NormalFormCoeffs& c, double c_stab) {
  AssumptionReport r;
  const double rcond = reciprocal_condition(c.g_y0);
  if (!(rcond >= kRcondMin)) {
    throw Error(ErrorKind::SingularGy, "g_y0 is numerically singular", {{"rcond", rcond}});
  }
  Eigen::EigenSolver<Mat> es(c.g_y0, false);
  r.spectral_abscissa = es.eigenvalues().real().maxCoeff();
  r.c_stab_margin = -r.spectral_abscissa - c_stab;
  r.fast_stable = r.c_stab_margin >= 0.0;
  if (!r.fast_stable) {
    r.messages.push_back("fast subsystem not uniformly stable: spectral abscissa " +
                         std::to_string(r.spectral_abscissa) + " exceeds -c_stab = " + std::to_string(-c_stab));
  }
  r.attracting_sliding = (c.T_plus < c.S_plus) && (c.S_minus < c.T_minus);
  if (!r.attracting_sliding) {
    r.messages.push_back("reduced sliding not attracting: need T+ < S+ and S- < T-");
  }
  r.transversal = c.h_rd_x0.norm() > 0.0;
  if (!r.transversal) r.messages.push_back("reduced switching normal h_rd_x0 vanishes");
  const double scale = std::max({1.0, c.h_x0.norm() * (c.f_plus0.norm() + c.f_minus0.norm())});
  r.generic_full = std::abs(c.h_x0.dot(c.f_plus0 - c.f_minus0)) > 1e-12 * scale;
  if (!r.generic_full) r.messages.push_back("h_x0 (f_plus0 - f_minus0) vanishes: full sliding segment is degenerate");
  return r;
}

FullSystemSpec make_affine_spec(const NormalFormCoeffs& c, double eps) {
  FullSystemSpec s;
  s.n = c.n;
  s.m = c.m;
  s.eps = eps;
  s.name = "affine";
  const Vec fp = c.f_plus0, fm = c.f_minus0, geps = c.g_eps0;
  const Mat gx = c.g_x0, gy = c.g_y0;
  const RowVec hx = c.h_x0, hy = c.h_y0;
  const double heps = c.h_eps0;
  s.f_plus = [fp](const Vec&, const Vec&, double) { return fp; };
  s.f_minus = [fm](const Vec&, const Vec&, double) { return fm; };
  s.g = [gx, gy, geps](const Vec& x, const Vec& y, double e) -> Vec { return gx * x + gy * y + e * geps; };
  s.h = [hx, hy, heps](const Vec& x, const Vec& y, double e) { return hx.dot(x) + hy.dot(y) + e * heps; };
  s.jac.h_x = [hx](const Vec&, const Vec&, double) { return hx; };
  s.jac.h_y = [hy](const Vec&, const Vec&, double) { return hy; };
  s.jac.h_eps = [heps](const Vec&, const Vec&, double) { return heps; };
  s.jac.g_x = [gx](const Vec&, const Vec&, double) { return gx; };
  s.jac.g_y = [gy](const Vec&, const Vec&, double) { return gy; };
  s.jac.g_eps = [geps](const Vec&, const Vec&, double) { return geps; };
  return s;
}

namespace {

using ExprList = std::vector<expr::Expr>;

std::vector<expr::Expr> parse_all(const std::vector<std::string>& src, int n, int m, std::size_t expected,
                                  const char* what) {
  if (src.size() != expected) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " has " + std::to_string(src.size()) + " components, expected " +
                    std::to_string(expected),
                {{"which", what}, {"expected", expected}, {"got", src.size()}});
  }
  std::vector<expr::Expr> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    try {
      out.push_back(expr::parse(src[i], n, m));
    } catch (const Error& e) {
      nlohmann::json details = e.details();
      details["field"] = std::string(what) + "[" + std::to_string(i) + "]";
      throw Error(e.kind(), std::string(what) + "[" + std::to_string(i) + "]: " + e.what(), details);
    }
  }
  return out;
}

Vec eval_list(const ExprList& list, const Vec& x, const Vec& y, double eps) {
  Vec out(static_cast<Eigen::Index>(list.size()));
  const expr::EvalEnv env{x, y, eps};
  for (std::size_t i = 0; i < list.size(); ++i) out[static_cast<Eigen::Index>(i)] = expr::eval(list[i], env);
  return out;
}

}  // namespace

FullSystemSpec make_expr_spec(const ExprSystem& sys) {
  if (sys.n < 1 || sys.m < 1) {
    throw Error(ErrorKind::InvalidArgument, "dimensions must satisfy n >= 1 and m >= 1", {{"n", sys.n}, {"m", sys.m}});
  }
  const auto n = static_cast<std::size_t>(sys.n);
  const auto m = static_cast<std::size_t>(sys.m);
  auto fp = std::make_shared<const ExprList>(parse_all(sys.f_plus, sys.n, sys.m, n, "f_plus"));
  auto fm = std::make_shared<const ExprList>(parse_all(sys.f_minus, sys.n, sys.m, n, "f_minus"));
  auto g = std::make_shared<const ExprList>(parse_all(sys.g, sys.n, sys.m, m, "g"));
  auto h = std::make_shared<const expr::Expr>(parse_all({sys.h}, sys.n, sys.m, 1, "h").front());

  auto dh_x = std::make_shared<ExprList>();
  auto dh_y = std::make_shared<ExprList>();
  for (int i = 0; i < sys.n; ++i) dh_x->push_back(expr::differentiate(*h, expr::VarId::x(i)));
  for (int i = 0; i < sys.m; ++i) dh_y->push_back(expr::differentiate(*h, expr::VarId::y(i)));
  auto dh_e = std::make_shared<const expr::Expr>(expr::differentiate(*h, expr::VarId::eps()));
  // column-major: entry (r, c) at r + rows * c
  auto dg_x = std::make_shared<ExprList>();
  auto dg_y = std::make_shared<ExprList>();
  auto dg_e = std::make_shared<ExprList>();
  for (int c = 0; c < sys.n; ++c)
    for (std::size_t r = 0; r < m; ++r) dg_x->push_back(expr::differentiate((*g)[r], expr::VarId::x(c)));
  for (int c = 0; c < sys.m; ++c)
    for (std::size_t r = 0; r < m; ++r) dg_y->push_back(expr::differentiate((*g)[r], expr::VarId::y(c)));
  for (std::size_t r = 0; r < m; ++r) dg_e->push_back(expr::differentiate((*g)[r], expr::VarId::eps()));

  FullSystemSpec s;
  s.n = sys.n;
  s.m = sys.m;
  s.eps = sys.eps;
  s.domain = sys.domain;
  s.name = "expr";
  s.f_plus = [fp](const Vec& x, const Vec& y, double e) { return eval_list(*fp, x, y, e); };
  s.f_minus = [fm](const Vec& x, const Vec& y, double e) { return eval_list(*fm, x, y, e); };
  s.g = [g](const Vec& x, const Vec& y, double e) { return eval_list(*g, x, y, e); };
  s.h = [h](const Vec& x, const Vec& y, double e) { return expr::eval(*h, {x, y, e}); };
  s.jac.h_x = [dh_x](const Vec& x, const Vec& y, double e) -> RowVec { return eval_list(*dh_x, x, y, e).transpose(); };
  s.jac.h_y = [dh_y](const Vec& x, const Vec& y, double e) -> RowVec { return eval_list(*dh_y, x, y, e).transpose(); };
  s.jac.h_eps = [dh_e](const Vec& x, const Vec& y, double e) { return expr::eval(*dh_e, {x, y, e}); };
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  s.jac.g_x = [dg_x, mi, ni](const Vec& x, const Vec& y, double e) -> Mat {
    return eval_list(*dg_x, x, y, e).reshaped(mi, ni);
  };
  s.jac.g_y = [dg_y, mi](const Vec& x, const Vec& y, double e) -> Mat {
    return eval_list(*dg_y, x, y, e).reshaped(mi, mi);
  };
  s.jac.g_eps = [dg_e](const Vec& x, const Vec& y, double e) { return eval_list(*dg_e, x, y, e); };
  return s;
}

}  // namespace sfslide
