#include "sfslide/config.hpp"

#include <fstream>
#include <sstream>

#include "sfslide/error.hpp"
#include "sfslide/reduction.hpp"

namespace sfslide {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg, json details = json::object()) {
  throw Error(ErrorKind::ConfigError, msg, std::move(details));
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) config_error(where + ": missing field '" + key + "'", {{"field", key}});
  return *it;
}

double to_double(const json& v, const std::string& where) {
  if (!v.is_number()) config_error(where + ": expected a number", {{"field", where}});
  return v.get<double>();
}

Vec to_vec(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) config_error(where + ": expected a non-empty array of numbers", {{"field", where}});
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = to_double(v[i], where);
  return out;
}

RowVec to_row(const json& v, const std::string& where) { return to_vec(v, where).transpose(); }

/// Accepts a nested array (rows) or, for a single row or 1x1 matrix, a flat array / scalar.
Mat to_mat(const json& v, const std::string& where) {
  if (v.is_number()) return Mat::Constant(1, 1, v.get<double>());
  if (!v.is_array() || v.empty()) config_error(where + ": expected a matrix", {{"field", where}});
  if (!v.front().is_array()) return to_row(v, where);
  const auto rows = v.size();
  const auto cols = v.front().size();
  Mat out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) config_error(where + ": ragged matrix rows", {{"field", where}});
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = to_double(v[r][c], where);
    }
  }
  return out;
}

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }
json row_json(const RowVec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }
json mat_json(const Mat& A) {
  json out = json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(r, c));
    out.push_back(row);
  }
  return out;
}

std::vector<std::string> to_strings(const json& v, const std::string& where) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) config_error(where + ": expected an array of expression strings", {{"field", where}});
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) config_error(where + ": expected expression strings", {{"field", where}});
    out.push_back(e.get<std::string>());
  }
  return out;
}

int to_dim(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    config_error(where + ": expected a positive integer", {{"field", where}});
  }
  return v.get<int>();
}

AffineData parse_affine(const json& a, double& eps) {
  const std::string w = "affine";
  AffineData d;
  d.f_plus0 = to_vec(require(a, "f_plus0", w), "affine.f_plus0");
  d.f_minus0 = to_vec(require(a, "f_minus0", w), "affine.f_minus0");
  d.g_x0 = to_mat(require(a, "g_x0", w), "affine.g_x0");
  d.g_y0 = to_mat(require(a, "g_y0", w), "affine.g_y0");
  d.h_y0 = to_row(require(a, "h_y0", w), "affine.h_y0");
  const bool has_hx = a.contains("h_x0"), has_hrd = a.contains("h_rd_x0");
  if (has_hx == has_hrd) config_error("affine: give exactly one of 'h_x0' and 'h_rd_x0'");
  if (has_hx) d.h_x0 = to_row(a["h_x0"], "affine.h_x0");
  if (has_hrd) d.h_rd_x0 = to_row(a["h_rd_x0"], "affine.h_rd_x0");
  if (a.contains("g_eps0")) d.g_eps0 = to_vec(a["g_eps0"], "affine.g_eps0");
  if (a.contains("h_eps0")) d.h_eps0 = to_double(a["h_eps0"], "affine.h_eps0");
  if (a.contains("eps")) eps = to_double(a["eps"], "affine.eps");
  const auto n = d.f_plus0.size(), m = d.h_y0.size();
  auto dim = [&](const char* what, Eigen::Index got_r, Eigen::Index got_c, Eigen::Index r, Eigen::Index c) {
    if (got_r != r || got_c != c) {
      throw Error(ErrorKind::DimensionMismatch, std::string("affine.") + what + " has the wrong shape",
                  {{"which", what}, {"expected", {r, c}}, {"got", {got_r, got_c}}});
    }
  };
  dim("f_minus0", d.f_minus0.size(), 1, n, 1);
  dim("g_x0", d.g_x0.rows(), d.g_x0.cols(), m, n);
  dim("g_y0", d.g_y0.rows(), d.g_y0.cols(), m, m);
  if (d.h_x0) dim("h_x0", 1, d.h_x0->size(), 1, n);
  if (d.h_rd_x0) dim("h_rd_x0", 1, d.h_rd_x0->size(), 1, n);
  if (d.g_eps0.size()) dim("g_eps0", d.g_eps0.size(), 1, m, 1);
  return d;
}

}  // namespace

SystemConfig parse_config(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  SystemConfig c;
  if (j.contains("name")) c.name = j["name"].get<std::string>();
  if (j.contains("description")) c.description = j["description"].get<std::string>();
  const bool has_affine = j.contains("affine"), has_nl = j.contains("nonlinear");
  if (has_affine == has_nl) config_error("config needs exactly one of 'affine' and 'nonlinear'");
  int n = 0, m = 0;
  if (has_affine) {
    c.kind = SystemConfig::Kind::Affine;
    c.affine = parse_affine(j["affine"], c.affine_eps);
    n = static_cast<int>(c.affine.f_plus0.size());
    m = static_cast<int>(c.affine.h_y0.size());
  } else {
    c.kind = SystemConfig::Kind::Nonlinear;
    const json& nl = j["nonlinear"];
    const std::string w = "nonlinear";
    auto& s = c.nonlinear;
    s.n = n = to_dim(require(nl, "n", w), "nonlinear.n");
    s.m = m = to_dim(require(nl, "m", w), "nonlinear.m");
    s.eps = to_double(require(nl, "eps", w), "nonlinear.eps");
    s.f_plus = to_strings(require(nl, "f_plus", w), "nonlinear.f_plus");
    s.f_minus = to_strings(require(nl, "f_minus", w), "nonlinear.f_minus");
    s.g = to_strings(require(nl, "g", w), "nonlinear.g");
    const json& h = require(nl, "h", w);
    if (!h.is_string()) config_error("nonlinear.h: expected an expression string");
    s.h = h.get<std::string>();
    const json& dom = require(nl, "domain", w);
    s.domain.x_lower = to_vec(require(dom, "x_lower", "nonlinear.domain"), "nonlinear.domain.x_lower");
    s.domain.x_upper = to_vec(require(dom, "x_upper", "nonlinear.domain"), "nonlinear.domain.x_upper");
    s.domain.y_lower = to_vec(require(dom, "y_lower", "nonlinear.domain"), "nonlinear.domain.y_lower");
    s.domain.y_upper = to_vec(require(dom, "y_upper", "nonlinear.domain"), "nonlinear.domain.y_upper");
    c.expansion_point =
        nl.contains("expansion_point") ? to_vec(nl["expansion_point"], "nonlinear.expansion_point") : Vec::Zero(n);
    if (c.expansion_point.size() != n) {
      throw Error(ErrorKind::DimensionMismatch, "nonlinear.expansion_point has the wrong size",
                  {{"expected", n}, {"got", c.expansion_point.size()}});
    }
    // parse every expression now so errors surface at load time
    validate_spec(make_expr_spec(s));
  }
  if (j.contains("x0")) {
    c.x0 = to_vec(j["x0"], "x0");
    if (c.x0->size() != n) throw Error(ErrorKind::DimensionMismatch, "x0 has the wrong size", {{"expected", n}});
  }
  if (j.contains("y0")) {
    c.y0 = to_vec(j["y0"], "y0");
    if (c.y0->size() != m) throw Error(ErrorKind::DimensionMismatch, "y0 has the wrong size", {{"expected", m}});
  }
  if (j.contains("seeds")) c.seeds = j["seeds"];
  if (j.contains("expected")) c.expected = j["expected"];
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (t.contains("rtol")) c.tol.rtol = to_double(t["rtol"], "tolerances.rtol");
    if (t.contains("tie_tol")) c.tol.tie_tol = to_double(t["tie_tol"], "tolerances.tie_tol");
    if (t.contains("c_stab")) c.tol.c_stab = to_double(t["c_stab"], "tolerances.c_stab");
    if (t.contains("slide_tol")) c.tol.slide_tol = to_double(t["slide_tol"], "tolerances.slide_tol");
    if (t.contains("max_events")) c.tol.max_events = t["max_events"].get<std::size_t>();
  }
  if (!(c.eps() > 0.0)) config_error("eps must be positive", {{"eps", c.eps()}});
  return c;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file '" + path + "'", {{"path", path}});
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    config_error("config file '" + path + "' is not valid JSON: " + e.what(), {{"path", path}, {"byte", e.byte}});
  }
  return parse_config(j);
}

json config_to_json(const SystemConfig& c) {
  json j;
  if (!c.name.empty()) j["name"] = c.name;
  if (!c.description.empty()) j["description"] = c.description;
  if (c.kind == SystemConfig::Kind::Affine) {
    const AffineData& d = c.affine;
    json a;
    a["f_plus0"] = vec_json(d.f_plus0);
    a["f_minus0"] = vec_json(d.f_minus0);
    a["g_x0"] = mat_json(d.g_x0);
    a["g_y0"] = mat_json(d.g_y0);
    if (d.h_x0) a["h_x0"] = row_json(*d.h_x0);
    if (d.h_rd_x0) a["h_rd_x0"] = row_json(*d.h_rd_x0);
    a["h_y0"] = row_json(d.h_y0);
    if (d.g_eps0.size()) a["g_eps0"] = vec_json(d.g_eps0);
    if (d.h_eps0 != 0.0) a["h_eps0"] = d.h_eps0;
    a["eps"] = c.affine_eps;
    j["affine"] = a;
  } else {
    const ExprSystem& s = c.nonlinear;
    json nl;
    nl["n"] = s.n;
    nl["m"] = s.m;
    nl["eps"] = s.eps;
    nl["f_plus"] = s.f_plus;
    nl["f_minus"] = s.f_minus;
    nl["g"] = s.g;
    nl["h"] = s.h;
    nl["domain"] = {{"x_lower", vec_json(s.domain.x_lower)},
                    {"x_upper", vec_json(s.domain.x_upper)},
                    {"y_lower", vec_json(s.domain.y_lower)},
                    {"y_upper", vec_json(s.domain.y_upper)}};
    nl["expansion_point"] = vec_json(c.expansion_point);
    j["nonlinear"] = nl;
  }
  if (c.x0) j["x0"] = vec_json(*c.x0);
  if (c.y0) j["y0"] = vec_json(*c.y0);
  if (!c.seeds.empty()) j["seeds"] = c.seeds;
  if (!c.expected.empty()) j["expected"] = c.expected;
  j["tolerances"] = {{"rtol", c.tol.rtol},
                     {"tie_tol", c.tol.tie_tol},
                     {"c_stab", c.tol.c_stab},
                     {"slide_tol", c.tol.slide_tol},
                     {"max_events", c.tol.max_events}};
  return j;
}

json builtin_config(const std::string& name) {
  if (name == "example1") {
    return json::parse(R"cfg({
      "name": "example1",
      "description": "Repelling sliding, n = 2, m = 1. g_x0 = g_y0 * G with G = [-1, -1.5].",
      "affine": {
        "h_rd_x0": [1, 0],
        "f_minus0": [1.5, 1],
        "f_plus0": [-1, -0.5],
        "g_x0": [[2, 3]],
        "g_y0": [[-2]],
        "h_y0": [1],
        "eps": 0.001
      },
      "x0": [-0.25, 0],
      "y0": [0.5],
      "expected": {
        "ordering": "S-<T-<T+<S+",
        "T_plus": 0.75, "T_minus": -1.5, "S_plus": 1.75, "S_minus": -3.0,
        "alpha_rd": 0.4, "alpha_rd_tol": 1e-12,
        "t1": 1.4857, "t2": 2.2285, "t_tol": 1e-3,
        "alpha": 0.4, "alpha_tol": 1e-4
      }
    })cfg");
  }
  if (name == "example2") {
    return json::parse(R"cfg({
      "name": "example2",
      "description": "Same fields as example1 with h_rd_x0 = [1, 0.5] and G = [-1, -0.5]; h_x0 vanishes.",
      "affine": {
        "h_rd_x0": [1, 0.5],
        "f_minus0": [1.5, 1],
        "f_plus0": [-1, -0.5],
        "g_x0": [[2, 1]],
        "g_y0": [[-2]],
        "h_y0": [1],
        "eps": 0.001
      },
      "x0": [-0.25, 0],
      "y0": [0.5],
      "expected": {
        "ordering": "Degenerate(T+,T-)",
        "T_plus": 0.0, "T_minus": 0.0, "S_plus": 1.25, "S_minus": -2.0,
        "alpha_rd": 0.3846, "alpha_rd_tol": 1e-4,
        "t1": 0.0263, "t2": 0.0421, "t_tol": 1e-3,
        "alpha": 0.3846, "alpha_tol": 1e-3
      }
    })cfg");
  }
  config_error("unknown built-in config '" + name + "'", {{"name", name}});
}

NormalFormCoeffs coeffs_from_config(const SystemConfig& c) {
  if (c.kind == SystemConfig::Kind::Affine) return make_coeffs(c.affine);
  NormalFormOptions opts;
  opts.c_stab = c.tol.c_stab;
  return normal_form_at(make_expr_spec(c.nonlinear), c.expansion_point, opts);
}

FullSystemSpec spec_from_config(const SystemConfig& c) {
  if (c.kind == SystemConfig::Kind::Affine) return make_affine_spec(make_coeffs(c.affine), c.affine_eps);
  return make_expr_spec(c.nonlinear);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sfslide
