#pragma once

#include "sfslide/config.hpp"
#include "sfslide/systemdef.hpp"

namespace fixture {

inline sfslide::NormalFormCoeffs builtin(const char* name) {
  return sfslide::coeffs_from_config(sfslide::parse_config(sfslide::builtin_config(name)));
}

inline sfslide::NormalFormCoeffs example1() { return builtin("example1"); }
inline sfslide::NormalFormCoeffs example2() { return builtin("example2"); }

inline sfslide::Vec vec(std::initializer_list<double> v) {
  sfslide::Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

inline sfslide::RowVec row(std::initializer_list<double> v) { return vec(v).transpose(); }

inline sfslide::Mat mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
  sfslide::Mat out(r, c);
  auto it = v.begin();
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) out(i, j) = *it++;
  return out;
}

}  // namespace fixture
