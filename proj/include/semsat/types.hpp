#pragma once

#include <complex>

#include <Eigen/Dense>

namespace semsat {

using Scalar = double;
using Complex = std::complex<Scalar>;

static constexpr int Dynamic = Eigen::Dynamic;

template <int rows = Dynamic, int cols = rows>
using Matrix = Eigen::Matrix<Scalar, rows, cols>;

template <int rows = Dynamic>
using Vector = Matrix<rows, 1>;

using Vec2 = Vector<2>;
using Vec3 = Vector<3>;
using VecX = Vector<>;
using MatX = Matrix<>;

template <int rows = Dynamic>
using Ref = Eigen::Ref<Vector<rows>>;

template <int rows = Dynamic>
using ConstRef = const Eigen::Ref<const Vector<rows>>&;

}  // namespace semsat
