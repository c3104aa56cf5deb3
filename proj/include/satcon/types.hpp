#pragma once

#include <Eigen/Core>

namespace satcon {

using Index = Eigen::Index;

/// Dense dynamic-size types, templated on scalar.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// The library computes in double throughout.
using Mat = Matrix<double>;
using Vec = Vector<double>;

}  // namespace satcon
