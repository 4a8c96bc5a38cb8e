#include "sfslide/classify.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sfslide/error.hpp"

namespace sfslide {

namespace {

using T = Transition;

struct RowInfo {
  const char* ordering;
  SlidingNature nature;
  std::vector<Transition> transitions;
};

const std::array<RowInfo, 6>& rows() {
  static const std::array<RowInfo, 6> table = {{
      {"S-<T-<T+<S+", SlidingNature::Repelling, {T::PlusMinus, T::MinusPlus}},
      {"S-<T+<T-<S+", SlidingNature::Attracting,
       {T::PlusMinus, T::MinusPlus, T::Slide, T::SlidePlus, T::SlideMinus, T::PlusSlide, T::MinusSlide}},
      {"T+<S-<T-<S+", SlidingNature::Attracting, {T::MinusSlide, T::SlideMinus, T::Slide}},
      {"T+<S-<S+<T-", SlidingNature::Attracting, {T::Slide}},
      {"T+<S+<S-<T-", SlidingNature::Attracting, {T::Slide}},
      {"S-<T+<S+<T-", SlidingNature::Attracting, {T::PlusSlide, T::SlidePlus, T::Slide}},
  }};
  return table;
}

}  // namespace

TSQuantities ts_quantities(const NormalFormCoeffs& c) { return {c.T_plus, c.T_minus, c.S_plus, c.S_minus}; }

TSQuantities relabel(const TSQuantities& q) { return {-q.T_minus, -q.T_plus, -q.S_minus, -q.S_plus}; }

std::string to_string(SlidingNature s) {
  switch (s) {
    case SlidingNature::Repelling: return "repelling";
    case SlidingNature::Attracting: return "attracting";
    case SlidingNature::Degenerate: return "degenerate";
  }
  return "?";
}

std::string to_string(Transition t) {
  switch (t) {
    case T::PlusMinus: return "+-";
    case T::MinusPlus: return "-+";
    case T::Slide: return "s";
    case T::SlidePlus: return "s+";
    case T::SlideMinus: return "s-";
    case T::PlusSlide: return "+s";
    case T::MinusSlide: return "-s";
  }
  return "?";
}

std::string to_string(SegmentNature s) {
  switch (s) {
    case SegmentNature::Attracting: return "attracting";
    case SegmentNature::Repelling: return "repelling";
    case SegmentNature::Empty: return "empty";
  }
  return "?";
}

nlohmann::json Scenario::to_json() const {
  nlohmann::json j;
  j["row"] = row;
  j["ordering"] = ordering;
  j["sliding_nature"] = to_string(nature);
  nlohmann::json tr = nlohmann::json::array();
  for (auto t : transitions) tr.push_back(to_string(t));
  j["transitions"] = tr;
  if (row == 0) j["tied"] = {tied.first, tied.second};
  return j;
}

double default_tie_tol(const TSQuantities& q) {
  return 1e-9 * std::max({std::abs(q.T_plus), std::abs(q.T_minus), std::abs(q.S_plus), std::abs(q.S_minus), 1.0});
}

Scenario scenario_row(int row) {
  if (row < 1 || row > 6) throw Error(ErrorKind::InvalidArgument, "table row must be 1..6", {{"row", row}});
  const RowInfo& info = rows()[static_cast<std::size_t>(row - 1)];
  Scenario s;
  s.row = row;
  s.ordering = info.ordering;
  s.nature = info.nature;
  s.transitions = info.transitions;
  return s;
}

Scenario classify_scenario(const TSQuantities& q, double tie_tol) {
  if (tie_tol < 0.0) tie_tol = default_tie_tol(q);
  if (!(q.T_plus < q.S_plus) || !(q.S_minus < q.T_minus)) {
    throw Error(ErrorKind::AssumptionViolated, "ordering requires T+ < S+ and S- < T-",
                {{"T_plus", q.T_plus}, {"T_minus", q.T_minus}, {"S_plus", q.S_plus}, {"S_minus", q.S_minus}});
  }
  const std::array<std::pair<const char*, double>, 4> vals = {
      {{"T+", q.T_plus}, {"T-", q.T_minus}, {"S+", q.S_plus}, {"S-", q.S_minus}}};
  for (std::size_t i = 0; i < vals.size(); ++i) {
    for (std::size_t j = i + 1; j < vals.size(); ++j) {
      if (std::abs(vals[i].second - vals[j].second) <= tie_tol) {
        Scenario s;
        s.row = 0;
        s.nature = SlidingNature::Degenerate;
        s.tied = {vals[i].first, vals[j].first};
        s.ordering = std::string("Degenerate(") + vals[i].first + "," + vals[j].first + ")";
        return s;
      }
    }
  }
  // T+ < S+ and S- < T- fix two relations; the remaining orderings are decided
  // by where T+ and S+ sit relative to S- and T-.
  const double tp = q.T_plus, tm = q.T_minus, sp = q.S_plus, sm = q.S_minus;
  int row = 0;
  if (tm < tp) {
    row = 1;  // S- < T- < T+ < S+
  } else if (sm < tp) {
    row = sp > tm ? 2 : 6;  // S- < T+ < T- < S+  or  S- < T+ < S+ < T-
  } else if (sp > tm) {
    row = 3;  // T+ < S- < T- < S+
  } else if (sp > sm) {
    row = 4;  // T+ < S- < S+ < T-
  } else {
    row = 5;  // T+ < S+ < S- < T-
  }
  return scenario_row(row);
}

Scenario classify_scenario(const NormalFormCoeffs& c, double tie_tol) { return classify_scenario(ts_quantities(c), tie_tol); }

SlidingSegment sliding_segment(const NormalFormCoeffs& c, double tie_tol) {
  const TSQuantities q = ts_quantities(c);
  if (tie_tol < 0.0) tie_tol = default_tie_tol(q);
  SlidingSegment s;
  s.lower = std::min(q.T_plus, q.T_minus);
  s.upper = std::max(q.T_plus, q.T_minus);
  if (s.upper - s.lower <= tie_tol) {
    s.nature = SegmentNature::Empty;
  } else {
    s.nature = q.T_plus < q.T_minus ? SegmentNature::Attracting : SegmentNature::Repelling;
  }
  return s;
}

PlanePoint project(const NormalFormCoeffs& c, const Vec& x, const Vec& y) {
  return {c.h_rd_x0.dot(x) - c.hy_gyinv.dot(y), c.h_y0.dot(y)};
}

}  // namespace sfslide
