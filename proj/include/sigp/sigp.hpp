#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sigp/kernels.hpp"
#include "sigp/sdr.hpp"
#include "sigp/types.hpp"

namespace sigp {

/// A trained low-rank SIGP regression model.
///
/// The latent function is f(z) = Pi(z) beta with beta ~ N(0, Sigma_beta),
/// Pi(z) = (kappa(z, X) - row_means^T) W, and the mean function is
/// u(z) = Pi(z) alpha + c. `beta` and `delta` cache the posterior mean and
/// covariance of beta given the training data at the final parameters.
struct SigpModel {
  KernelSpec kernel;
  Matrix x_train;          // n x d
  Matrix W;                // n x m
  Matrix sigma_beta;       // m x m, PD
  double sigma2 = 1.0;
  Vector alpha;            // m
  double c = 0.0;
  Vector train_k_row_means;  // n
  Vector beta;             // m, posterior mean
  Matrix delta;            // m x m, posterior covariance

  Index n() const { return x_train.rows(); }
  Index dim() const { return x_train.cols(); }
  Index rank() const { return W.cols(); }

  /// Throws DomainError/DimensionError when an invariant is broken.
  void validate() const;
};

/// Variance components and mean parameters updated by EM.
struct EmState {
  Matrix sigma_beta;
  double sigma2 = 1.0;
  Vector alpha;
  double c = 0.0;
};

struct EmConfig {
  int max_iter = 500;
  double tol = 1e-6;   // stop when |delta loglik| < tol * (1 + |loglik|)
  double xi = 1e-4;    // ridge on the mean-function coefficients
  std::optional<EmState> init;
  /// Form V^{-1} as an explicit n x n matrix each iteration (O(n^2 m)), as the
  /// reference algorithm does. When false only the O(n m) Woodbury operator
  /// is applied. Both give the same iterates up to rounding.
  bool dense_v_inverse = true;
};

struct EmTrace {
  std::vector<double> loglik;        // observed-data log marginal, index 0 = initial
  std::vector<double> joint_loglik;  // complete-data objective at the MAP beta
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> notes;    // jitter, sigma2 floor, rejected updates
};

struct EmResult {
  SigpModel model;
  EmTrace trace;
};

/// Everything one EM sweep produces, for inspection and testing.
struct EmSweep {
  EmState next;
  Vector alpha;
  double c = 0.0;
  Matrix delta;
  Vector beta;
  double trace_v_inverse = 0.0;
  bool sigma2_floored = false;
  bool sigma_beta_jittered = false;
};

/// One EM sweep from `state`:
/// V^{-1} by Woodbury, GLS centering L, alpha and c from the ridge-penalised
/// GLS problem, Delta = (Sigma_beta^{-1} + Pi^T Pi / sigma2)^{-1},
/// beta = Delta Pi^T r / sigma2, Sigma_beta <- beta beta^T + Delta and
/// sigma2 <- sigma2 + (|r - Pi beta|^2 - sigma2^2 tr V^{-1}) / n.
/// `wkw` is W^T K W (the ridge metric for alpha).
EmSweep em_sweep(const Matrix& pi, const Matrix& wkw, const Vector& y, const EmState& state,
                 double xi, bool dense_v_inverse = true);

/// Pi(Z) = (kappa(Z, X) - 1 row_means^T) W.
Matrix projection(const GramCache& gram, const Matrix& W, const Matrix& z);
Matrix projection(const SigpModel& model, const Matrix& z);

/// Pi(X) on the training inputs, Gamma_n K W.
Matrix training_projection(const GramCache& gram, const Matrix& W);

/// log N(f | 0, n^{-2p} K^p K_nu K^p). A jitter of 1e-10 trace/n is added if
/// the covariance is not numerically PD; throws SingularityError if that fails.
double sigp_prior_log_density(const GramCache& gram, const Matrix& k_nu, double p,
                              const Vector& f);

/// Default initial state: Sigma_beta = var(y) I_m, sigma2 = var(y)/2, alpha = 0,
/// c = mean(y). A constant response uses unit variance instead.
EmState default_em_init(const Vector& y, Index m);

/// Train variance components and mean parameters for a fixed SDR basis.
EmResult em_fit(const GramCache& gram, const Vector& y, const SdrBasis& basis,
                const EmConfig& config = {});

/// log N(y | Pi alpha + c 1, Pi Sigma_beta Pi^T + sigma2 I), O(n m^2).
double marginal_loglik(const SigpModel& model, const GramCache& gram, const Vector& y);

struct PosteriorBeta {
  Vector mean;
  Matrix cov;
};

/// beta | y ~ N(Sigma_beta Pi^T V^{-1} r, Sigma_beta - Sigma_beta Pi^T V^{-1} Pi Sigma_beta),
/// r = y - u(X).
PosteriorBeta posterior_beta(const SigpModel& model, const GramCache& gram, const Vector& y);

/// Copy of `model` with beta and delta recomputed from the training data.
SigpModel with_posterior(SigpModel model, const GramCache& gram, const Vector& y);

/// mean_i = Pi(z_i)(alpha + beta) + c, variance_i = |Pi(z_i) Delta^{1/2}|^2 + sigma2.
PredictiveDistribution predict(const SigpModel& model, const Matrix& z);

/// One-vs-rest classifier: one SIGP head per label, all sharing the basis W.
struct OneVsRestModel {
  std::vector<double> labels;
  std::vector<SigpModel> heads;
};

struct OneVsRestResult {
  OneVsRestModel model;
  std::vector<EmTrace> traces;
};

/// Fit one head per distinct label on +/-1 targets.
OneVsRestResult fit_one_vs_rest(const GramCache& gram, const Vector& labels, const SdrBasis& basis,
                                const EmConfig& config = {});

/// t x k matrix of predictive means, one column per head.
Matrix one_vs_rest_scores(const OneVsRestModel& model, const Matrix& z);

/// Label of the head with the largest predictive mean.
Vector one_vs_rest_predict(const OneVsRestModel& model, const Matrix& z);

}  // namespace sigp
