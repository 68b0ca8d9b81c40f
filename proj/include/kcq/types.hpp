#pragma once

#include <Eigen/Dense>

namespace kcq {

/// Row-major dense matrix: sample-major storage (one sample or one time row per row).
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace kcq
