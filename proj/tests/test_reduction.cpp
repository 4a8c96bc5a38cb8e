#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sfslide/error.hpp"
#include "sfslide/reduction.hpp"

using namespace sfslide;
using fixture::vec;

namespace {

FullSystemSpec scalar_spec(const char* g, const char* h = "x1 - y1") {
  ExprSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.eps = 1e-3;
  sys.f_plus = {"-1"};
  sys.f_minus = {"1"};
  sys.g = {g};
  sys.h = h;
  return make_expr_spec(sys);
}

}  // namespace

TEST_SUITE("reduction") {
  TEST_CASE("slow manifold points") {
    const auto c = fixture::example1();
    const auto affine = make_affine_spec(c, 1e-3);
    CHECK(slow_manifold_point(affine, Vec::Zero(2), vec({0.7})).norm() <= 1e-12);

    const auto quad = scalar_spec("y1 - x1^2");
    CHECK(slow_manifold_point(quad, vec({2.0}), vec({1.0}))[0] == doctest::Approx(4.0).epsilon(1e-12));

    const auto th = scalar_spec("tanh(y1) - x1");
    const double y = slow_manifold_point(th, vec({0.5}), vec({0.0}))[0];
    const double ref = oracle::bisect([](double s) { return std::tanh(s) - 0.5; }, 0.0, 2.0);
    CHECK(y == doctest::Approx(ref).epsilon(1e-12));
    CHECK(y == doctest::Approx(0.5493).epsilon(1e-4));
  }

  TEST_CASE("slow manifold failure modes") {
    const auto flat = scalar_spec("x1 + 0*y1");
    CHECK_THROWS_AS(slow_manifold_point(flat, vec({1.0}), vec({0.0})), Error);
    const auto none = scalar_spec("y1^2 + 1");
    try {
      slow_manifold_point(none, vec({0.0}), vec({0.3}));
      FAIL("expected a failure");
    } catch (const Error& e) {
      CHECK((e.kind() == ErrorKind::NoConvergence || e.kind() == ErrorKind::SingularJacobian));
    }
  }

  TEST_CASE("reduced sliding for the examples") {
    const auto r1 = reduced_sliding(fixture::example1());
    CHECK(r1.alpha_rd == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r1.f_rd_s[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r1.f_rd_s[1] == doctest::Approx(0.1).epsilon(1e-12));
    const auto r2 = reduced_sliding(fixture::example2());
    CHECK(std::abs(r2.alpha_rd - 0.3846) < 5e-5);
  }

  TEST_CASE("sliding convexity and quotient form on random sets") {
    std::mt19937_64 rng(5);
    int accepted = 0;
    while (accepted < 1000) {
      const int n = 1 + accepted % 3;
      AffineData d;
      d.f_plus0 = oracle::random_mat(rng, n, 1);
      d.f_minus0 = oracle::random_mat(rng, n, 1);
      d.g_x0 = oracle::random_mat(rng, 1, n);
      d.g_y0 = oracle::random_stable(rng, 1);
      d.h_rd_x0 = RowVec(oracle::random_mat(rng, 1, n));
      d.h_y0 = oracle::random_mat(rng, 1, 1);
      const double a = d.h_rd_x0->dot(d.f_plus0), b = d.h_rd_x0->dot(d.f_minus0);
      if (!(a < 0.0 && b > 0.0)) continue;
      const auto c = make_coeffs(d);
      const auto r = reduced_sliding(c);
      CHECK(r.alpha_rd > 0.0);
      CHECK(r.alpha_rd < 1.0);
      CHECK(std::abs(c.h_rd_x0.dot(r.f_rd_s)) <= 1e-10 * (1.0 + r.f_rd_s.norm()));
      const Vec quotient = (b * d.f_plus0 - a * d.f_minus0) / (b - a);
      CHECK((quotient - r.f_rd_s).norm() <= 1e-12 * (1.0 + quotient.norm()));
      ++accepted;
    }
  }

  TEST_CASE("degenerate reduced denominator") {
    auto d = fixture::example1().affine();
    d.f_minus0 = d.f_plus0 + fixture::vec({0.0, 1.0});
    d.h_x0.reset();
    d.h_rd_x0 = fixture::row({1.0, 0.0});
    CHECK_THROWS_AS(reduced_sliding(make_coeffs(d)), Error);
  }

  TEST_CASE("affine truncation is lossless and idempotent") {
    const auto c = fixture::example1();
    const auto spec = make_affine_spec(c, 1e-3);
    const auto t = normal_form_at(spec, Vec::Zero(2));
    CHECK((t.f_plus0 - c.f_plus0).norm() <= 1e-12);
    CHECK((t.f_minus0 - c.f_minus0).norm() <= 1e-12);
    CHECK((t.g_x0 - c.g_x0).norm() <= 1e-9);
    CHECK((t.g_y0 - c.g_y0).norm() <= 1e-9);
    CHECK((t.h_x0 - c.h_x0).norm() <= 1e-9);
    CHECK((t.h_y0 - c.h_y0).norm() <= 1e-9);
    CHECK(t.T_plus == doctest::Approx(0.75));
    CHECK(t.T_minus == doctest::Approx(-1.5));
    CHECK(t.S_plus == doctest::Approx(1.75));
    CHECK(t.S_minus == doctest::Approx(-3.0));
    const auto again = normal_form_at(make_affine_spec(t, 1e-3), Vec::Zero(2));
    CHECK((again.g_y0 - t.g_y0).norm() <= 1e-12 * (1.0 + t.g_y0.norm()) + 1e-9);
    CHECK((again.h_rd_x0 - t.h_rd_x0).norm() <= 1e-9);
  }

  TEST_CASE("expansion point off the switching manifold") {
    ExprSystem sys;
    sys.n = 1;
    sys.m = 1;
    sys.eps = 1e-3;
    sys.f_plus = {"-1"};
    sys.f_minus = {"1"};
    sys.g = {"x1 - y1"};
    sys.h = "y1 + 0.1";
    const auto spec = make_expr_spec(sys);
    try {
      normal_form_at(spec, vec({0.0}));
      FAIL("expected OffManifold");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OffManifold);
    }
  }

  TEST_CASE("assumption failure at the expansion point") {
    ExprSystem sys;
    sys.n = 1;
    sys.m = 1;
    sys.eps = 1e-3;
    sys.f_plus = {"1"};
    sys.f_minus = {"-1"};
    sys.g = {"x1 - y1"};
    sys.h = "x1 + y1";
    const auto spec = make_expr_spec(sys);
    CHECK_THROWS_AS(normal_form_at(spec, vec({0.0})), Error);
    NormalFormOptions o;
    o.require_assumptions = false;
    CHECK_NOTHROW(normal_form_at(spec, vec({0.0}), o));
  }

  TEST_CASE("normal coordinates round trip") {
    const auto c = fixture::example1();
    const Vec x = vec({0.001, -0.002});
    const Vec y = vec({0.0005});
    const auto p = to_normal(c, 1e-3, x, y);
    const auto q = from_normal(c, 1e-3, p.x, p.y);
    CHECK((q.x - x).norm() <= 1e-15);
    CHECK((q.y - y).norm() <= 1e-15);
  }
}
