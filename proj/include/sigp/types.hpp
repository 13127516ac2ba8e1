#pragma once

#include <Eigen/Dense>

namespace sigp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Per-point Gaussian predictive marginals.
struct PredictiveDistribution {
  Vector mean;
  Vector variance;
};

}  // namespace sigp
