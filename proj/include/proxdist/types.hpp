#pragma once

#include <Eigen/Core>

namespace proxdist {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace proxdist
