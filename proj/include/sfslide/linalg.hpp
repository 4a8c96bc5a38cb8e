#pragma once

#include <Eigen/Dense>

namespace sfslide {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;

/// Which side of the switching surface a vector field belongs to.
enum class Side { Plus, Minus };

inline double side_sign(Side s) { return s == Side::Plus ? 1.0 : -1.0; }
inline Side opposite(Side s) { return s == Side::Plus ? Side::Minus : Side::Plus; }
inline const char* side_name(Side s) { return s == Side::Plus ? "plus" : "minus"; }

}  // namespace sfslide
