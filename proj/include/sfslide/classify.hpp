#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sfslide/systemdef.hpp"

namespace sfslide {

struct TSQuantities {
  double T_plus = 0.0;
  double T_minus = 0.0;
  double S_plus = 0.0;
  double S_minus = 0.0;
};

TSQuantities ts_quantities(const NormalFormCoeffs& coeffs);

/// Swapping the roles of f_plus0 and f_minus0 (and flipping the sign of h).
TSQuantities relabel(const TSQuantities& q);

enum class SlidingNature { Repelling, Attracting, Degenerate };

enum class Transition { PlusMinus, MinusPlus, Slide, SlidePlus, SlideMinus, PlusSlide, MinusSlide };

std::string to_string(SlidingNature s);
std::string to_string(Transition t);

struct Scenario {
  int row = 0;            // 1..6, or 0 for Degenerate
  std::string ordering;   // e.g. "S-<T-<T+<S+", or "Degenerate(T+,T-)"
  SlidingNature nature = SlidingNature::Degenerate;
  std::vector<Transition> transitions;
  std::pair<std::string, std::string> tied;  // set only when row == 0

  bool degenerate() const { return row == 0; }
  nlohmann::json to_json() const;
};

/// Default tie tolerance: 1e-9 * max(|T+|, |T-|, |S+|, |S-|, 1).
double default_tie_tol(const TSQuantities& q);

/// Throws AssumptionViolated unless T+ < S+ and S- < T-. A negative tie_tol
/// selects the default.
Scenario classify_scenario(const TSQuantities& q, double tie_tol = -1.0);
Scenario classify_scenario(const NormalFormCoeffs& coeffs, double tie_tol = -1.0);

/// Table row by number (1..6) with its ordering label, nature and transitions.
Scenario scenario_row(int row);

enum class SegmentNature { Attracting, Repelling, Empty };

std::string to_string(SegmentNature s);

/// Bounds on p2 = h_y0 y between the two tangency levels h_x0 f_pm0.
struct SlidingSegment {
  double lower = 0.0;
  double upper = 0.0;
  SegmentNature nature = SegmentNature::Empty;
};

SlidingSegment sliding_segment(const NormalFormCoeffs& coeffs, double tie_tol = -1.0);

struct PlanePoint {
  double p1 = 0.0;
  double p2 = 0.0;
};

/// p1 = h_rd_x0 x - h_y0 g_y0^{-1} y,  p2 = h_y0 y.
PlanePoint project(const NormalFormCoeffs& coeffs, const Vec& x, const Vec& y);

}  // namespace sfslide
