#pragma once

#include <Eigen/Dense>

namespace dmcc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace dmcc
