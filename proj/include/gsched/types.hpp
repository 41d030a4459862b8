#pragma once

#include <Eigen/Dense>

namespace gsched {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat62 = Eigen::Matrix<double, 6, 2>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Which induced/entrywise norm to report for closed-loop matrices.
enum class MatrixNorm { Spectral, Frobenius };

} // namespace gsched
