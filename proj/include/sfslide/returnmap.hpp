#pragma once

#include <array>
#include <optional>
#include <vector>

#include <json.hpp>

#include "sfslide/error.hpp"
#include "sfslide/flows.hpp"

namespace sfslide {

struct CrossingPoint {
  Vec x, y;
  double p1 = 0.0;
  double p2 = 0.0;
};

CrossingPoint make_crossing(const NormalFormCoeffs& c, const Vec& x, const Vec& y);

/// Point of H0 with fast state y: x is the multiple of h_rd_x0^T that puts it on H0.
Vec x_on_H0(const NormalFormCoeffs& c, const Vec& y);

struct ReturnStep {
  Vec x, y;
  Vec y_mid;     // fast state at the intermediate switch
  double t_minus = 0.0;
  double t_plus = 0.0;
};

/// R(x, y) on H0+: one F_minus leg followed by one F_plus leg.
ReturnStep return_map(const NormalFormCoeffs& c, const Vec& x, const Vec& y);

struct OrbitRecord {
  std::vector<CrossingPoint> points;   // points[0] is the start
  std::vector<double> times_minus, times_plus;
  std::vector<double> T_ell_minus, T_ell_plus;
  std::vector<double> alpha_ell;
  std::vector<Vec> drift;              // (R_x^ell - x) / T_ell after each step
  std::optional<Error> error;          // set if iteration stopped early
  std::size_t failed_step = 0;

  std::size_t steps() const { return times_minus.size(); }
};

OrbitRecord iterate_orbit(const NormalFormCoeffs& c, const Vec& x, const Vec& y, std::size_t ell);

struct DriftEstimate {
  std::size_t ell = 0;
  Vec drift;
  double residual = 0.0;  // |drift - f_rd_s|
  double C = 0.0;         // constant of the O(1/ell) bound
  double bound = 0.0;     // C / ell
  double t_low = 0.0;
  double t_up = 0.0;
  double y_bound = 0.0;
};

/// Throws the error of the underlying orbit if it stops before ell steps.
DriftEstimate drift_estimate(const NormalFormCoeffs& c, const Vec& x, const Vec& y, std::size_t ell);
DriftEstimate drift_from_orbit(const NormalFormCoeffs& c, const OrbitRecord& orbit);

struct FixedPointOptions {
  int scan_points = 200;
  double left_offset = 1e-6;     // fraction of the interval width skipped at the tangency end
};

struct FixedPoint1D {
  double y_star = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double derivative = 0.0;
  double log_derivative = 0.0;         // log(dy2/dy0); finite even when the derivative underflows
  double alpha = 0.0;                  // t1 / (t1 + t2)
  std::array<double, 4> residuals{};   // period-1 conditions at the refined point
  int sign_changes = 0;                // candidates seen on the scan grid
};

/// Period-1 cycle for m = 1 on I0 = {p2 in (T-, S+]}.
/// Throws NotScalarFast, NoSignChange (with the scan table) or UnstableFixedPoint.
FixedPoint1D fixed_point_1d(const NormalFormCoeffs& c, const FixedPointOptions& opts = {});

/// y2(y0) for m = 1 (minus leg then plus leg, no H0+ check).
double map_1d(const NormalFormCoeffs& c, double y0);

/// dy2/dy0 from the product of the two leg derivatives.
double map_derivative_1d(const NormalFormCoeffs& c, double y0);
/// log(dy2/dy0), NaN if the derivative is not positive.
double map_log_derivative_1d(const NormalFormCoeffs& c, double y0);

/// Residuals of the four period-1 conditions with x0 placed on H0.
std::array<double, 4> period1_residual(const NormalFormCoeffs& c, double y0, double t1, double t2);

struct ReachResult {
  std::vector<FlowStep> trajectory;
  CrossingPoint point;
  double t_ini = 0.0;
};

/// Follows the admissible field(s) from (x, y) until the state is in H0+.
/// Inside the repelling segment the field on `escape_side` is used. Throws TimeCap.
ReachResult reach_crossing(const NormalFormCoeffs& c, const Vec& x, const Vec& y, Side escape_side = Side::Plus);

}  // namespace sfslide
