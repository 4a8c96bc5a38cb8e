#include "sfslide/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfslide/classify.hpp"
#include "sfslide/config.hpp"
#include "sfslide/error.hpp"
#include "sfslide/flows.hpp"
#include "sfslide/fullsim.hpp"
#include "sfslide/reduction.hpp"
#include "sfslide/returnmap.hpp"
#include "sfslide/serialize.hpp"

namespace sfslide::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Flags {
  std::string command;
  std::string config;
  std::string out;
  std::optional<double> rtol;
  std::optional<double> eps;
  std::optional<double> tie_tol;
  std::vector<std::size_t> ell;
  std::string escape_side = "plus";
  unsigned jobs = 1;
  double t_scaled = 20.0;
  bool gnuplot = false;
};

SystemConfig resolve_config(const std::string& ref) {
  if (ref.empty()) throw Error(ErrorKind::ConfigError, "no config given (positional argument or --config)");
  if (fs::exists(ref)) return load_config(ref);
  const std::string stem = fs::path(ref).stem().string();
  if (stem == "example1" || stem == "example2") return parse_config(builtin_config(stem));
  throw Error(ErrorKind::ConfigError, "config '" + ref + "' not found", {{"path", ref}});
}

void apply_overrides(SystemConfig& cfg, const Flags& f) {
  if (f.rtol) cfg.tol.rtol = *f.rtol;
  if (f.tie_tol) cfg.tol.tie_tol = *f.tie_tol;
  if (f.eps) {
    if (!(*f.eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "--eps must be positive", {{"eps", *f.eps}});
    if (cfg.kind == SystemConfig::Kind::Affine) {
      cfg.affine_eps = *f.eps;
    } else {
      cfg.nonlinear.eps = *f.eps;
    }
  }
}

Side escape_side(const Flags& f) {
  if (f.escape_side == "plus") return Side::Plus;
  if (f.escape_side == "minus") return Side::Minus;
  throw Error(ErrorKind::InvalidArgument, "--escape-side must be 'plus' or 'minus'", {{"got", f.escape_side}});
}

NormalFormCoeffs coeffs_unchecked(const SystemConfig& cfg) {
  if (cfg.kind == SystemConfig::Kind::Affine) return make_coeffs(cfg.affine);
  NormalFormOptions opts;
  opts.c_stab = cfg.tol.c_stab;
  opts.require_assumptions = false;
  return normal_form_at(make_expr_spec(cfg.nonlinear), cfg.expansion_point, opts);
}

/// Start point in normal-form coordinates; defaults to y = y_sl+ on H0.
NormalPoint start_point(const SystemConfig& cfg, const NormalFormCoeffs& c) {
  NormalPoint p;
  p.y = cfg.y0 ? *cfg.y0 : c.y_sl_plus;
  p.x = cfg.x0 ? *cfg.x0 : x_on_H0(c, p.y);
  return p;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return os.str();
}

class Output {
 public:
  Output(const Flags& f, const SystemConfig& cfg) : cfg_(cfg) {
    dir_ = f.out.empty() ? fs::path("out") / (f.command + "-" + timestamp()) : fs::path(f.out);
    fs::create_directories(dir_);
    command_ = f.command;
  }

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream os(dir_ / name);
    if (!os) throw Error(ErrorKind::ConfigError, "cannot write output file", {{"path", (dir_ / name).string()}});
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  void finish() {
    const std::string canonical = config_to_json(cfg_).dump();
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical);
    json manifest = {{"command", command_},
                     {"config_name", cfg_.name},
                     {"config_hash", "fnv1a64:" + hash.str()},
                     {"tolerances", config_to_json(cfg_)["tolerances"]},
                     {"eps", cfg_.eps()},
                     {"version", kVersion},
                     {"files", files_}};
    std::ofstream(dir_ / "manifest.json") << manifest.dump(2) << '\n';
  }

  const fs::path& dir() const { return dir_; }

 private:
  const SystemConfig& cfg_;
  fs::path dir_;
  std::string command_;
  std::vector<std::string> files_;
};

/// Runs body(i) for i in [0, count) on up to `jobs` threads; first error is rethrown.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += jobs) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void gnuplot_script(Output& o, const std::string& name, const std::string& body) {
  if (!body.empty()) o.open(name) << "set datafile separator ','\nset key autotitle columnhead\n" << body;
}

// ---- commands -------------------------------------------------------------

json cmd_check(const SystemConfig& cfg, Output& o) {
  const NormalFormCoeffs c = coeffs_unchecked(cfg);
  const AssumptionReport r = check_assumptions(c, cfg.tol.c_stab);
  json j = {{"report", to_json(r)}, {"all_hold", r.all_hold()}, {"coeffs", to_json(c)}};
  o.write_json("check.json", j);
  return {{"all_hold", r.all_hold()}, {"report", to_json(r)}};
}

json cmd_classify(const SystemConfig& cfg, Output& o) {
  const NormalFormCoeffs c = coeffs_unchecked(cfg);
  const TSQuantities q = ts_quantities(c);
  const Scenario s = classify_scenario(q, cfg.tol.tie_tol);
  const SlidingSegment seg = sliding_segment(c, cfg.tol.tie_tol);
  json j = {{"scenario", s.to_json()},
            {"label", s.ordering + " (" + to_string(s.nature) + ")"},
            {"ts", to_json(q)},
            {"segment", to_json(seg)}};
  o.write_json("classify.json", j);
  auto csv = o.open("ts.csv");
  csv << std::setprecision(17) << "quantity,value\nT+," << q.T_plus << "\nT-," << q.T_minus << "\nS+," << q.S_plus
      << "\nS-," << q.S_minus << '\n';
  return j;
}

json cmd_simulate(const SystemConfig& cfg, const Flags& f, Output& o) {
  const NormalFormCoeffs c = coeffs_unchecked(cfg);
  const FullSystemSpec spec = spec_from_config(cfg);
  const NormalPoint start = start_point(cfg, c);
  const NormalPoint orig = from_normal(c, spec.eps, start.x, start.y);
  SimOptions opts;
  opts.rtol = cfg.tol.rtol;
  opts.slide_tol = cfg.tol.slide_tol;
  opts.max_events = cfg.tol.max_events;
  opts.escape_side = escape_side(f);
  opts.center_x = c.x0;
  opts.center_y = c.y_c0;
  opts.scale = spec.eps;
  const SimTrajectory tr = integrate_full(spec, orig.x, orig.y, f.t_scaled * spec.eps, opts);
  auto csv = o.open("trajectory.csv");
  write_trajectory_csv(csv, tr);
  o.write_json("events.json", events_json(tr));
  if (f.gnuplot) {
    gnuplot_script(o, "trajectory.gp",
                   "set xlabel 'x1'\nset ylabel 'y1'\nplot 'trajectory.csv' using 'x1':'y1' with lines\npause -1\n");
  }
  return {{"tau_end", tr.tau_end},
          {"switches", tr.switch_count()},
          {"events", tr.events.size()},
          {"accepted_steps", tr.accepted_steps},
          {"x_end", to_json(tr.x_end)},
          {"y_end", to_json(tr.y_end)}};
}

/// Orbit start on H0+; reaches the surface first when the start lies off it.
CrossingPoint orbit_start(const SystemConfig& cfg, const NormalFormCoeffs& c, Side esc, double& t_ini) {
  const NormalPoint p = start_point(cfg, c);
  t_ini = 0.0;
  if (in_H0_plus(c, p.x, p.y)) return make_crossing(c, p.x, p.y);
  const ReachResult r = reach_crossing(c, p.x, p.y, esc);
  t_ini = r.t_ini;
  return r.point;
}

json cmd_return_map(const SystemConfig& cfg, const Flags& f, Output& o) {
  const NormalFormCoeffs c = coeffs_unchecked(cfg);
  double t_ini = 0.0;
  const CrossingPoint p = orbit_start(cfg, c, escape_side(f), t_ini);
  const std::size_t ell = f.ell.empty() ? 100 : f.ell.front();
  const OrbitRecord orbit = iterate_orbit(c, p.x, p.y, ell);
  auto csv = o.open("orbit.csv");
  write_orbit_csv(csv, orbit);
  json j = to_json(orbit);
  j["t_ini"] = t_ini;
  o.write_json("orbit.json", j);
  if (f.gnuplot) {
    gnuplot_script(o, "orbit.gp",
                   "set xlabel 'ell'\nset ylabel 'p2'\nplot 'orbit.csv' using 'ell':'p2' with linespoints\npause -1\n");
  }
  if (orbit.error) throw *orbit.error;
  json summary = {{"steps", orbit.steps()}, {"t_ini", t_ini}};
  if (!orbit.drift.empty()) summary["drift"] = to_json(orbit.drift.back());
  if (!orbit.alpha_ell.empty()) summary["alpha_ell"] = orbit.alpha_ell.back();
  return summary;
}

json cmd_fixed_point(const SystemConfig& cfg, const Flags& f, Output& o) {
  const NormalFormCoeffs c = coeffs_unchecked(cfg);
  const FixedPoint1D fp = fixed_point_1d(c);
  json j = to_json(fp);
  o.write_json("fixed_point.json", j);
  // map graph over the admissible interval for plotting
  auto csv = o.open("map.csv");
  csv << std::setprecision(17) << "p2,R\n";
  const double lo = c.T_minus, hi = c.S_plus, hy = c.h_y0[0];
  for (int i = 1; i <= 200; ++i) {
    const double p2 = lo + (hi - lo) * i / 200.0;
    try {
      csv << p2 << ',' << hy * map_1d(c, p2 / hy) << '\n';
    } catch (const Error&) {
      continue;
    }
  }
  if (f.gnuplot) {
    gnuplot_script(o, "map.gp",
                   "set xlabel 'p2'\nset ylabel 'R(p2)'\nplot 'map.csv' using 'p2':'R' with lines, x title 'identity'\n"
                   "pause -1\n");
  }
  return j;
}

json cmd_drift(const SystemConfig& cfg, const Flags& f, Output& o) {
  const NormalFormCoeffs c = coeffs_unchecked(cfg);
  double t_ini = 0.0;
  const CrossingPoint p = orbit_start(cfg, c, escape_side(f), t_ini);
  const std::vector<std::size_t> ells =
      f.ell.empty() ? std::vector<std::size_t>{10, 20, 50, 100, 200, 500, 1000} : f.ell;
  std::vector<DriftEstimate> rows(ells.size());
  parallel_for(ells.size(), f.jobs, [&](std::size_t i) { rows[i] = drift_estimate(c, p.x, p.y, ells[i]); });

  auto csv = o.open("drift.csv");
  const auto n = c.n;
  csv << "ell";
  for (int i = 0; i < n; ++i) csv << ",drift" << i + 1;
  csv << ",residual,bound,C\n" << std::setprecision(17);
  json arr = json::array();
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    csv << r.ell;
    for (int i = 0; i < n; ++i) csv << ',' << r.drift[i];
    csv << ',' << r.residual << ',' << r.bound << ',' << r.C << '\n';
    arr.push_back(to_json(r));
    if (r.residual > 0.0) {
      xs.push_back(static_cast<double>(r.ell));
      ys.push_back(r.residual);
    }
  }
  json j = {{"f_rd_s", to_json(reduced_sliding(c).f_rd_s)}, {"rows", arr}};
  if (xs.size() >= 2) j["loglog_slope"] = loglog_slope(xs, ys);
  o.write_json("drift.json", j);
  if (f.gnuplot) {
    gnuplot_script(o, "drift.gp",
                   "set logscale xy\nset xlabel 'ell'\nplot 'drift.csv' using 'ell':'residual' with linespoints, "
                   "'' using 'ell':'bound' with lines\npause -1\n");
  }
  return j;
}

json cmd_verify_theorem1(const SystemConfig& cfg, const Flags& f, Output& o) {
  const NormalFormCoeffs c = coeffs_unchecked(cfg);
  const FullSystemSpec spec = spec_from_config(cfg);
  const std::vector<double> eps_list =
      f.eps ? std::vector<double>{*f.eps} : std::vector<double>{1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};
  SimOptions opts;
  opts.rtol = cfg.tol.rtol;
  opts.slide_tol = cfg.tol.slide_tol;
  opts.max_events = cfg.tol.max_events;
  opts.escape_side = escape_side(f);
  opts.record_samples = false;
  std::vector<Theorem1Row> rows(eps_list.size());
  parallel_for(eps_list.size(), f.jobs, [&](std::size_t i) {
    rows[i] = verify_theorem1(spec, c.x0, c.delta_x, c.delta_y, {eps_list[i]}, f.t_scaled, opts).front();
  });
  auto csv = o.open("theorem1.csv");
  csv << "eps,r_norm,r_x_norm,r_y_norm,max_r_norm,events\n" << std::setprecision(17);
  json arr = json::array();
  for (const auto& r : rows) {
    csv << r.eps << ',' << r.r_norm << ',' << r.r_x_norm << ',' << r.r_y_norm << ',' << r.max_r_norm << ','
        << r.events << '\n';
    arr.push_back({{"eps", r.eps},
                   {"r_norm", r.r_norm},
                   {"r_x_norm", r.r_x_norm},
                   {"r_y_norm", r.r_y_norm},
                   {"max_r_norm", r.max_r_norm},
                   {"events", r.events}});
  }
  json j = {{"t_scaled", f.t_scaled}, {"rows", arr}};
  o.write_json("theorem1.json", j);
  if (f.gnuplot) {
    gnuplot_script(o, "theorem1.gp",
                   "set logscale xy\nset xlabel 'eps'\nplot 'theorem1.csv' using 'eps':'max_r_norm' with linespoints\n"
                   "pause -1\n");
  }
  return j;
}

struct Check {
  json record;
  bool pass = false;
};

Check near(const std::string& what, double got, double expected, double tol) {
  const bool ok = std::isfinite(got) && std::abs(got - expected) <= tol;
  return {{{"check", what}, {"expected", expected}, {"got", got}, {"tol", tol}, {"pass", ok}}, ok};
}

Check failed(const std::string& what, const Error& e) {
  return {{{"check", what}, {"pass", false}, {"error", e.to_json()}}, false};
}

json run_example(const std::string& name, bool& all_pass) {
  const SystemConfig cfg = parse_config(builtin_config(name));
  const json& ex = cfg.expected;
  std::vector<Check> checks;
  const NormalFormCoeffs c = make_coeffs(cfg.affine);

  const TSQuantities q = ts_quantities(c);
  const Scenario s = classify_scenario(q, cfg.tol.tie_tol);
  const bool ord_ok = s.ordering == ex.value("ordering", std::string());
  checks.push_back({{{"check", "ordering"}, {"expected", ex.value("ordering", "")}, {"got", s.ordering},
                     {"pass", ord_ok}},
                    ord_ok});
  for (const char* k : {"T_plus", "T_minus", "S_plus", "S_minus"}) {
    if (!ex.contains(k)) continue;
    const double got = std::string(k) == "T_plus"    ? q.T_plus
                       : std::string(k) == "T_minus" ? q.T_minus
                       : std::string(k) == "S_plus"  ? q.S_plus
                                                     : q.S_minus;
    checks.push_back(near(k, got, ex[k].get<double>(), 1e-9));
  }
  try {
    checks.push_back(near("alpha_rd", reduced_sliding(c).alpha_rd, ex.at("alpha_rd").get<double>(),
                          ex.at("alpha_rd_tol").get<double>()));
  } catch (const Error& e) {
    checks.push_back(failed("alpha_rd", e));
  }
  try {
    const FixedPoint1D fp = fixed_point_1d(c);
    checks.push_back(near("t1", fp.t1, ex.at("t1").get<double>(), ex.at("t_tol").get<double>()));
    checks.push_back(near("t2", fp.t2, ex.at("t2").get<double>(), ex.at("t_tol").get<double>()));
    checks.push_back(near("alpha", fp.alpha, ex.at("alpha").get<double>(), ex.at("alpha_tol").get<double>()));
  } catch (const Error& e) {
    for (const char* k : {"t1", "t2", "alpha"}) checks.push_back(failed(k, e));
  }

  json arr = json::array();
  bool pass = true;
  for (const auto& ch : checks) {
    arr.push_back(ch.record);
    pass = pass && ch.pass;
  }
  all_pass = all_pass && pass;
  return {{"name", name}, {"pass", pass}, {"checks", arr}};
}

json cmd_examples(Output& o, bool& all_pass) {
  json arr = json::array();
  for (const char* name : {"example1", "example2"}) arr.push_back(run_example(name, all_pass));
  json j = {{"pass", all_pass}, {"examples", arr}};
  o.write_json("examples.json", j);
  return j;
}

int emit_error(std::ostream& err, const Error& e) {
  err << e.to_json().dump() << '\n';
  return is_config_error(e.kind()) ? 2 : 3;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Slow-fast Filippov sliding analysis"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string positional;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("system", positional, "config file or built-in name (example1, example2)");
    sub->add_option("--config", f.config, "config file or built-in name");
    sub->add_option("--out", f.out, "output directory (default ./out/<command>-<timestamp>)");
    sub->add_option("--rtol", f.rtol, "relative tolerance for ODE integration");
    sub->add_option("--eps", f.eps, "singular perturbation parameter");
    sub->add_option("--ell", f.ell, "return-map iteration counts");
    sub->add_option("--escape-side", f.escape_side, "side taken when both fields leave the surface")
        ->check(CLI::IsMember({"plus", "minus"}));
    sub->add_option("--jobs", f.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--tie-tol", f.tie_tol, "classifier tie tolerance");
    sub->add_option("--t-scaled", f.t_scaled, "horizon in fast time tau = t / eps")->check(CLI::NonNegativeNumber);
    sub->add_flag("--gnuplot", f.gnuplot, "also write gnuplot scripts");
  };
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"check", "report on the standing assumptions"},
      {"classify", "switching scenario, sliding segment and T/S table"},
      {"simulate", "integrate the full Filippov system"},
      {"return-map", "iterate the return map and write the orbit"},
      {"fixed-point", "period-1 fixed point of the scalar return map"},
      {"drift", "mean slow drift against the reduced sliding field"},
      {"verify-theorem1", "full system against the reduced sliding flow over eps"},
      {"examples", "run the built-in examples against stored expectations"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    sub->callback([&f, n = name] { f.command = n; });
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    for (auto* sub : app.get_subcommands()) out << sub->help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "UsageError"}, {"message", e.what()}, {"details", json::object()}}.dump() << '\n';
    return 2;
  }
  if (f.config.empty()) f.config = positional;

  try {
    if (f.command == "examples") {
      SystemConfig cfg = parse_config(builtin_config("example1"));
      apply_overrides(cfg, f);
      Output o(f, cfg);
      bool all_pass = true;
      const json j = cmd_examples(o, all_pass);
      o.finish();
      out << j.dump(2) << '\n';
      return all_pass ? 0 : 1;
    }
    SystemConfig cfg = resolve_config(f.config);
    apply_overrides(cfg, f);
    Output o(f, cfg);
    json j;
    if (f.command == "check") j = cmd_check(cfg, o);
    else if (f.command == "classify") j = cmd_classify(cfg, o);
    else if (f.command == "simulate") j = cmd_simulate(cfg, f, o);
    else if (f.command == "return-map") j = cmd_return_map(cfg, f, o);
    else if (f.command == "fixed-point") j = cmd_fixed_point(cfg, f, o);
    else if (f.command == "drift") j = cmd_drift(cfg, f, o);
    else if (f.command == "verify-theorem1") j = cmd_verify_theorem1(cfg, f, o);
    o.finish();
    j["out_dir"] = o.dir().string();
    out << j.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    return emit_error(err, e);
  } catch (const fs::filesystem_error& e) {
    return emit_error(err, Error(ErrorKind::ConfigError, e.what()));
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace sfslide::cli
