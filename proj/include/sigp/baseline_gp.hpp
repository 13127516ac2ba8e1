#pragma once

#include <string_view>
#include <vector>

#include "sigp/kernels.hpp"
#include "sigp/types.hpp"

namespace sigp {

enum class GpMean { zero, linear };
std::string_view to_string(GpMean mean);
GpMean gp_mean_from_string(std::string_view name);

/// Exact GP regression with a fixed kernel and a grid-searched noise level.
struct ExactGpModel {
  KernelSpec kernel;
  double noise2 = 1.0;
  double jitter = 0.0;       // added to the diagonal of K before factorisation
  Matrix x_train;
  Vector dual_weights;       // (K + (noise2 + jitter) I)^{-1} (y - mean(X))
  GpMean mean = GpMean::zero;
  Vector mean_coef;          // linear mean: intercept first, then one slope per input
  double log_marginal = 0.0;

  double mean_at(const Eigen::Ref<const Vector>& x) const;
};

/// 10^{-4}, ..., 10^0 in 7 log-spaced steps.
std::vector<double> default_noise_grid();

/// Exact log marginal likelihood of residual r under N(0, K + noise2 I).
double gp_log_marginal(const Matrix& k, const Vector& r, double noise2);

/// Fit by maximising the exact log marginal likelihood over `noise_grid`.
/// A jitter of 1e-8 trace(K)/n is added before factorisation. The linear
/// mean is profiled out by generalised least squares at each grid point.
ExactGpModel gp_fit(const GramCache& gram, const Vector& y,
                    const std::vector<double>& noise_grid = default_noise_grid(),
                    GpMean mean = GpMean::linear);

/// mean = kappa(Z, X) dual + m(Z),
/// var = kappa(z, z) - kappa(z, X)(K + noise2 I)^{-1} kappa(X, z) + noise2.
PredictiveDistribution gp_predict(const ExactGpModel& model, const Matrix& z);

/// Ordinary least squares with intercept.
struct LinearRegression {
  Vector coef;  // intercept first
  double sigma2 = 0.0;

  static LinearRegression fit(const Matrix& x, const Vector& y);
  Vector predict(const Matrix& x) const;
  /// Gaussian predictive with the residual variance (parameter uncertainty ignored).
  PredictiveDistribution predict_distribution(const Matrix& x) const;
};

}  // namespace sigp
