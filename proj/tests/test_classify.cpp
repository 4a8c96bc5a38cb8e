#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fixtures.hpp"
#include "sfslide/classify.hpp"
#include "sfslide/error.hpp"

using namespace sfslide;
using fixture::vec;

namespace {

// Ordering label built by sorting the four values.
std::string sorted_label(const TSQuantities& q) {
  std::vector<std::pair<double, std::string>> v = {
      {q.T_plus, "T+"}, {q.T_minus, "T-"}, {q.S_plus, "S+"}, {q.S_minus, "S-"}};
  std::sort(v.begin(), v.end());
  return v[0].second + "<" + v[1].second + "<" + v[2].second + "<" + v[3].second;
}

std::set<std::string> labels(const Scenario& s) {
  std::set<std::string> out;
  for (auto t : s.transitions) out.insert(to_string(t));
  return out;
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("example quantities") {
    const auto q1 = ts_quantities(fixture::example1());
    CHECK(q1.T_plus == doctest::Approx(0.75));
    CHECK(q1.T_minus == doctest::Approx(-1.5));
    CHECK(q1.S_plus == doctest::Approx(1.75));
    CHECK(q1.S_minus == doctest::Approx(-3.0));
    const auto c2 = fixture::example2();
    CHECK(c2.h_x0.norm() <= 1e-15);
    const auto q2 = ts_quantities(c2);
    CHECK(q2.T_plus == doctest::Approx(0.0));
    CHECK(q2.T_minus == doctest::Approx(0.0));
    CHECK(q2.S_plus == doctest::Approx(1.25));
    CHECK(q2.S_minus == doctest::Approx(-2.0));
  }

  TEST_CASE("decoupled case") {
    AffineData d;
    d.f_plus0 = vec({-1.0, 2.0});
    d.f_minus0 = vec({1.0, 1.0});
    d.g_x0 = Mat::Zero(1, 2);
    d.g_y0 = -Mat::Identity(1, 1);
    d.h_x0 = fixture::row({1.0, 0.5});
    d.h_y0 = fixture::row({1.0});
    const auto q = ts_quantities(make_coeffs(d));
    CHECK(q.S_plus == 0.0);
    CHECK(q.S_minus == 0.0);
    CHECK(q.T_plus == doctest::Approx(0.0));
    CHECK(q.T_minus == doctest::Approx(1.5));
  }

  TEST_CASE("table rows") {
    const auto s1 = classify_scenario(fixture::example1());
    CHECK(s1.row == 1);
    CHECK(s1.ordering == "S-<T-<T+<S+");
    CHECK(s1.nature == SlidingNature::Repelling);
    CHECK(labels(s1) == std::set<std::string>{"+-", "-+"});

    const auto s2 = classify_scenario(TSQuantities{-1.0, 1.0, 2.0, -2.0});
    CHECK(s2.row == 2);
    CHECK(s2.ordering == "S-<T+<T-<S+");
    CHECK(s2.nature == SlidingNature::Attracting);
    CHECK(labels(s2) == std::set<std::string>{"+-", "-+", "s", "s+", "s-", "+s", "-s"});

    const auto s3 = classify_scenario(fixture::example2());
    CHECK(s3.degenerate());
    CHECK(s3.ordering == "Degenerate(T+,T-)");
    CHECK(s3.nature == SlidingNature::Degenerate);
    CHECK(s3.to_json()["tied"] == nlohmann::json::array({"T+", "T-"}));
  }

  TEST_CASE("assumption violation") {
    CHECK_THROWS_AS(classify_scenario(TSQuantities{2.0, 1.0, 1.0, -2.0}), Error);
    CHECK_THROWS_AS(classify_scenario(TSQuantities{-1.0, -3.0, 2.0, -2.0}), Error);
    CHECK_THROWS_AS(scenario_row(7), Error);
  }

  TEST_CASE("tie tolerance") {
    const TSQuantities q{-1.0, 1.0, 1.0 + 1e-12, -2.0};
    CHECK(classify_scenario(q).degenerate());
    CHECK(classify_scenario(q, 0.0).row == 2);
  }

  TEST_CASE("rows agree with a sorting oracle, relabel swaps rows 3 and 6") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    std::set<int> seen;
    for (int k = 0; k < 5000; ++k) {
      TSQuantities q{U(rng), U(rng), U(rng), U(rng)};
      if (!(q.T_plus < q.S_plus) || !(q.S_minus < q.T_minus)) continue;
      const auto s = classify_scenario(q, 0.0);
      REQUIRE(s.row >= 1);
      CHECK(s.ordering == sorted_label(q));
      CHECK((s.nature == SlidingNature::Repelling) == (s.row == 1));
      seen.insert(s.row);
      const auto r = classify_scenario(relabel(q), 0.0);
      const int expected = s.row == 3 ? 6 : s.row == 6 ? 3 : s.row;
      CHECK(r.row == expected);
    }
    CHECK(seen.size() == 6);
  }

  TEST_CASE("sliding segments") {
    const auto s1 = sliding_segment(fixture::example1());
    CHECK(s1.lower == doctest::Approx(-1.5));
    CHECK(s1.upper == doctest::Approx(0.75));
    CHECK(s1.nature == SegmentNature::Repelling);
    CHECK(sliding_segment(fixture::example2()).nature == SegmentNature::Empty);

    auto d = fixture::example1().affine();
    std::swap(d.f_plus0, d.f_minus0);
    const auto s2 = sliding_segment(make_coeffs(d));
    CHECK(s2.nature == SegmentNature::Attracting);
    CHECK(s2.lower <= s2.upper);
  }

  TEST_CASE("plane projection") {
    const auto c = fixture::example1();
    const auto p = project(c, vec({-0.25, 0.0}), vec({0.5}));
    CHECK(p.p1 == doctest::Approx(0.0));
    CHECK(p.p2 == doctest::Approx(0.5));
    const auto q = project(c, vec({0.3, 0.7}), vec({0.0}));
    CHECK(q.p2 == 0.0);
    CHECK(q.p1 == doctest::Approx(c.h_rd_x0.dot(vec({0.3, 0.7}))));
    const auto r = project(c, Vec::Zero(2), vec({c.S_plus / c.h_y0[0]}));
    CHECK(r.p2 == doctest::Approx(c.S_plus));
  }
}
