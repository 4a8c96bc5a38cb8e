#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfslide/exprlang.hpp"
#include "sfslide/linalg.hpp"

namespace sfslide {

using VecField = std::function<Vec(const Vec& x, const Vec& y, double eps)>;
using ScalarField = std::function<double(const Vec& x, const Vec& y, double eps)>;
using RowField = std::function<RowVec(const Vec& x, const Vec& y, double eps)>;
using MatField = std::function<Mat(const Vec& x, const Vec& y, double eps)>;

/// Optional analytic Jacobians. Missing entries fall back to central differences.
struct JacobianSet {
  RowField h_x;
  RowField h_y;
  ScalarField h_eps;
  MatField g_x;
  MatField g_y;
  VecField g_eps;
};

/// Rectangular box on which the evaluators are expected to be total.
struct Domain {
  Vec x_lower, x_upper;
  Vec y_lower, y_upper;

  bool contains(const Vec& x, const Vec& y) const;
  bool empty() const { return x_lower.size() == 0; }
};

/// Slow-fast Filippov system  x' = f_plus/f_minus (h > 0 / h < 0),  eps*y' = g.
struct FullSystemSpec {
  int n = 0;
  int m = 0;
  double eps = 0.0;
  VecField f_plus;
  VecField f_minus;
  VecField g;
  ScalarField h;
  JacobianSet jac;
  Domain domain;
  std::string name;
};

/// All first derivatives of g and h at one point.
struct Jet {
  RowVec h_x, h_y;
  double h_eps = 0.0;
  Mat g_x, g_y;
  Vec g_eps;
};

Jet jet_at(const FullSystemSpec& spec, const Vec& x, const Vec& y, double eps);

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> checked;
};

/// Throws Error{InvalidArgument} for bad n, m, eps and Error{DimensionMismatch}
/// for evaluators whose output shape is wrong.
ValidationResult validate_spec(const FullSystemSpec& spec);

/// Affine data at an expansion point. Either h_x0 or h_rd_x0 must be given.
struct AffineData {
  Vec f_plus0, f_minus0;
  Mat g_x0, g_y0;
  std::optional<RowVec> h_x0;
  std::optional<RowVec> h_rd_x0;
  RowVec h_y0;
  Vec g_eps0;          // defaults to zero
  double h_eps0 = 0.0;
};

struct NormalFormCoeffs {
  int n = 0;
  int m = 0;
  Vec f_plus0, f_minus0;
  Mat g_x0, g_y0;
  RowVec h_x0, h_y0;
  Vec g_eps0;
  double h_eps0 = 0.0;

  // derived
  Mat G;             // g_y0^{-1} g_x0
  RowVec hy_gyinv;   // h_y0 g_y0^{-1}
  RowVec h_rd_x0;
  Vec y_sl_plus, y_sl_minus;
  double T_plus = 0.0, T_minus = 0.0, S_plus = 0.0, S_minus = 0.0;
  Vec delta_x, delta_y;
  double delta_h = 0.0;

  // expansion point in original coordinates
  Vec x0, y_c0;

  const Vec& f(Side s) const { return s == Side::Plus ? f_plus0 : f_minus0; }
  const Vec& y_sl(Side s) const { return s == Side::Plus ? y_sl_plus : y_sl_minus; }
  double T(Side s) const { return s == Side::Plus ? T_plus : T_minus; }
  double S(Side s) const { return s == Side::Plus ? S_plus : S_minus; }
  AffineData affine() const;
};

/// Builds the coefficient set and every derived quantity. Throws SingularGy
/// when the reciprocal condition number of g_y0 is below 1e-12.
NormalFormCoeffs make_coeffs(const AffineData& data, Vec x0 = {}, Vec y_c0 = {});

struct AssumptionReport {
  double spectral_abscissa = 0.0;
  double c_stab_margin = 0.0;  // -spectral_abscissa - c_stab; negative means violated
  bool fast_stable = false;
  bool attracting_sliding = false;
  bool transversal = false;
  bool generic_full = false;
  std::vector<std::string> messages;

  bool all_hold() const { return fast_stable && attracting_sliding && transversal; }
};

AssumptionReport check_assumptions(const NormalFormCoeffs& coeffs, double c_stab = 1e-6);

/// Full system that is exactly affine: constant f, g = g_x0 x + g_y0 y + eps g_eps0,
/// h = h_x0 x + h_y0 y + eps h_eps0, expanded about x = 0, y = 0.
FullSystemSpec make_affine_spec(const NormalFormCoeffs& coeffs, double eps);

/// Source strings for a nonlinear system written in the expression language.
struct ExprSystem {
  int n = 0;
  int m = 0;
  double eps = 0.0;
  std::vector<std::string> f_plus, f_minus, g;
  std::string h;
  Domain domain;
};

/// Parses all expressions and builds symbolic Jacobians.
FullSystemSpec make_expr_spec(const ExprSystem& sys);

}  // namespace sfslide
