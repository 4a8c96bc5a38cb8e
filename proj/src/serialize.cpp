#include "sfslide/serialize.hpp"

#include <iomanip>

namespace sfslide {

using nlohmann::json;

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }
json to_json(const RowVec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Mat& A) {
  json out = json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json to_json(const NormalFormCoeffs& c) {
  return {{"n", c.n},
          {"m", c.m},
          {"f_plus0", to_json(c.f_plus0)},
          {"f_minus0", to_json(c.f_minus0)},
          {"g_x0", to_json(c.g_x0)},
          {"g_y0", to_json(c.g_y0)},
          {"h_x0", to_json(c.h_x0)},
          {"h_y0", to_json(c.h_y0)},
          {"h_rd_x0", to_json(c.h_rd_x0)},
          {"y_sl_plus", to_json(c.y_sl_plus)},
          {"y_sl_minus", to_json(c.y_sl_minus)},
          {"T_plus", c.T_plus},
          {"T_minus", c.T_minus},
          {"S_plus", c.S_plus},
          {"S_minus", c.S_minus},
          {"delta_x", to_json(c.delta_x)},
          {"delta_y", to_json(c.delta_y)},
          {"delta_h", c.delta_h},
          {"expansion_point", {{"x0", to_json(c.x0)}, {"y_c", to_json(c.y_c0)}}}};
}

json to_json(const AssumptionReport& r) {
  return {{"spectral_abscissa", r.spectral_abscissa},
          {"c_stab_margin", r.c_stab_margin},
          {"fast_stable", r.fast_stable},
          {"attracting_sliding", r.attracting_sliding},
          {"transversal", r.transversal},
          {"generic_full", r.generic_full},
          {"messages", r.messages}};
}

json to_json(const TSQuantities& q) {
  return {{"T_plus", q.T_plus}, {"T_minus", q.T_minus}, {"S_plus", q.S_plus}, {"S_minus", q.S_minus}};
}

json to_json(const SlidingSegment& s) {
  return {{"lower", s.lower}, {"upper", s.upper}, {"nature", to_string(s.nature)}};
}

json to_json(const ReducedSliding& r) {
  return {{"alpha_rd", r.alpha_rd}, {"f_rd_s", to_json(r.f_rd_s)}, {"h_rd_x", to_json(r.h_rd_x)}};
}

json to_json(const FixedPoint1D& f) {
  return {{"y_star", f.y_star},     {"t1", f.t1},
          {"t2", f.t2},             {"alpha", f.alpha},
          {"derivative", f.derivative}, {"log_derivative", f.log_derivative},
          {"residuals", f.residuals},
          {"sign_changes", f.sign_changes}};
}

json to_json(const DriftEstimate& d) {
  return {{"ell", d.ell},         {"drift", to_json(d.drift)}, {"residual", d.residual}, {"C", d.C},
          {"bound", d.bound},     {"t_low", d.t_low},          {"t_up", d.t_up},         {"y_bound", d.y_bound}};
}

json to_json(const OrbitRecord& o) {
  json pts = json::array();
  for (const auto& p : o.points) {
    pts.push_back({{"x", to_json(p.x)}, {"y", to_json(p.y)}, {"p1", p.p1}, {"p2", p.p2}});
  }
  json drift = json::array();
  for (const auto& d : o.drift) drift.push_back(to_json(d));
  json j = {{"points", pts},
            {"times_minus", o.times_minus},
            {"times_plus", o.times_plus},
            {"T_ell_minus", o.T_ell_minus},
            {"T_ell_plus", o.T_ell_plus},
            {"alpha_ell", o.alpha_ell},
            {"drift", drift}};
  if (o.error) {
    j["error"] = o.error->to_json();
    j["failed_step"] = o.failed_step;
  }
  return j;
}

json to_json(const SimEvent& e) {
  return {{"kind", to_string(e.kind)}, {"tau", e.tau},         {"from", to_string(e.from)}, {"to", to_string(e.to)},
          {"x", to_json(e.x)},         {"y", to_json(e.y)},    {"residual", e.residual}};
}

json events_json(const SimTrajectory& t) {
  json ev = json::array();
  for (const auto& e : t.events) ev.push_back(to_json(e));
  return {{"eps", t.eps},
          {"tau_end", t.tau_end},
          {"accepted_steps", t.accepted_steps},
          {"rejected_steps", t.rejected_steps},
          {"max_error_estimate", t.max_error_estimate},
          {"events", ev}};
}

void write_orbit_csv(std::ostream& out, const OrbitRecord& o) {
  if (o.points.empty()) return;
  const auto n = o.points.front().x.size();
  const auto m = o.points.front().y.size();
  out << "ell";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) out << ",y" << i + 1;
  out << ",p1,p2,t_minus,t_plus,alpha_ell";
  for (Eigen::Index i = 0; i < n; ++i) out << ",drift" << i + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < o.points.size(); ++k) {
    const auto& p = o.points[k];
    out << k;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << p.x[i];
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << p.y[i];
    out << ',' << p.p1 << ',' << p.p2;
    if (k == 0) {
      out << ",,,";
      for (Eigen::Index i = 0; i < n; ++i) out << ',';
    } else {
      out << ',' << o.times_minus[k - 1] << ',' << o.times_plus[k - 1] << ',' << o.alpha_ell[k - 1];
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << o.drift[k - 1][i];
    }
    out << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const SimTrajectory& t) {
  Eigen::Index n = 0, m = 0;
  for (const auto& seg : t.segments) {
    if (!seg.samples.empty()) {
      n = seg.samples.front().x.size();
      m = seg.samples.front().y.size();
      break;
    }
  }
  out << "tau,t,mode";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) out << ",y" << i + 1;
  out << ",h\n" << std::setprecision(17);
  for (const auto& seg : t.segments) {
    for (const auto& s : seg.samples) {
      out << s.tau << ',' << s.tau * t.eps << ',' << to_string(seg.mode);
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << s.x[i];
      for (Eigen::Index i = 0; i < m; ++i) out << ',' << s.y[i];
      out << ',' << s.h << '\n';
    }
  }
}

}  // namespace sfslide
