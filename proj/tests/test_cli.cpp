#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfslide/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = sfslide::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sfslide_cli_" + name);
  fs::remove_all(p);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("classify example 1") {
    const auto dir = scratch("classify");
    const auto r = run({"classify", "example1", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["label"] == "S-<T-<T+<S+ (repelling)");
    CHECK(j["ts"]["T_plus"].get<double>() == doctest::Approx(0.75));
    CHECK(j["ts"]["S_minus"].get<double>() == doctest::Approx(-3.0));
    CHECK(fs::exists(dir / "ts.csv"));
    const json m = read_json(dir / "manifest.json");
    CHECK(m["command"] == "classify");
    CHECK(m["version"] == sfslide::cli::kVersion);
    CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
    CHECK(m["files"].size() == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("fixed point and determinism") {
    const auto a = scratch("fp_a"), b = scratch("fp_b");
    REQUIRE(run({"fixed-point", "example1", "--out", a.string()}).code == 0);
    REQUIRE(run({"fixed-point", "--config", "example1", "--out", b.string(), "--gnuplot"}).code == 0);
    const json ja = read_json(a / "fixed_point.json");
    CHECK(std::abs(ja["t1"].get<double>() - 1.4857) < 1e-3);
    CHECK(std::abs(ja["t2"].get<double>() - 2.2285) < 1e-3);
    CHECK(std::abs(ja["alpha"].get<double>() - 0.4) < 1e-4);
    CHECK(ja == read_json(b / "fixed_point.json"));
    CHECK(read_json(a / "manifest.json")["config_hash"] == read_json(b / "manifest.json")["config_hash"]);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("return map writes an orbit table") {
    const auto dir = scratch("orbit");
    REQUIRE(run({"return-map", "example1", "--ell", "5", "--escape-side", "minus", "--out", dir.string()}).code == 0);
    std::ifstream in(dir / "orbit.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "ell,x1,x2,y1,p1,p2,t_minus,t_plus,alpha_ell,drift1,drift2");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 6);
    fs::remove_all(dir);
  }

  TEST_CASE("exit codes") {
    const auto dir = scratch("errors");
    auto usage = run({"classify", "example1", "--escape-side", "sideways"});
    CHECK(usage.code == 2);
    CHECK(json::parse(usage.err)["error"] == "UsageError");
    CHECK(run({"no-such-command"}).code == 2);

    auto missing = run({"classify", (dir / "missing.json").string(), "--out", dir.string()});
    CHECK(missing.code == 2);
    CHECK(json::parse(missing.err)["error"] == "ConfigError");

    auto numeric = run({"fixed-point", "example2", "--out", dir.string()});
    CHECK(numeric.code == 3);
    CHECK(json::parse(numeric.err)["error"] == "NoSignChange");

    auto examples = run({"examples", "--out", dir.string()});
    CHECK(examples.code == 1);
    const json ex = json::parse(examples.out);
    CHECK(ex.dump().find("example1") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("version and help") {
    const auto v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(sfslide::cli::kVersion) != std::string::npos);
    const auto h = run({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("fixed-point") != std::string::npos);
  }
}
