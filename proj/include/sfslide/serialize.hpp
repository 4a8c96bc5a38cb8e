#pragma once

#include <ostream>

#include <json.hpp>

#include "sfslide/classify.hpp"
#include "sfslide/fullsim.hpp"
#include "sfslide/reduction.hpp"
#include "sfslide/returnmap.hpp"

namespace sfslide {

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const RowVec& v);
nlohmann::json to_json(const Mat& A);

nlohmann::json to_json(const NormalFormCoeffs& c);
nlohmann::json to_json(const AssumptionReport& r);
nlohmann::json to_json(const TSQuantities& q);
nlohmann::json to_json(const SlidingSegment& s);
nlohmann::json to_json(const ReducedSliding& r);
nlohmann::json to_json(const FixedPoint1D& f);
nlohmann::json to_json(const DriftEstimate& d);
nlohmann::json to_json(const OrbitRecord& o);
nlohmann::json to_json(const SimEvent& e);
nlohmann::json events_json(const SimTrajectory& t);

/// One row per crossing: ell, x1..xn, y1..ym, p1, p2, t_minus, t_plus, alpha_ell, drift1..driftn.
void write_orbit_csv(std::ostream& out, const OrbitRecord& o);

/// One row per sample: tau, t, mode, x1..xn, y1..ym, h.
void write_trajectory_csv(std::ostream& out, const SimTrajectory& t);

}  // namespace sfslide
