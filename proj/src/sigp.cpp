#include "sigp/sigp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "sigp/errors.hpp"
#include "sigp/linalg.hpp"

namespace sigp {

namespace {

constexpr double kSigma2Floor = 1e-12;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool is_pd(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  return llt.info() == Eigen::Success;
}

// Delta = (Sigma_beta^{-1} + Lambda / sigma2)^{-1}, written with Sigma_beta = L L^T
// as L (I + L^T Lambda L / sigma2)^{-1} L^T so that a nearly singular Sigma_beta
// never has to be inverted.
Matrix posterior_cov(const Matrix& sigma_beta, const Matrix& lambda, double sigma2) {
  const Matrix l = psd_factor(sigma_beta);
  Matrix inner = l.transpose() * lambda * l / sigma2;
  inner.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(sym(inner));
  if (llt.info() != Eigen::Success) throw SingularityError("posterior covariance: inner system not PD");
  return sym(l * llt.solve(l.transpose()));
}

double gaussian_loglik(const WoodburyInverse& vinv, const Vector& r) {
  const double n = static_cast<double>(r.size());
  return -0.5 * (n * kLog2Pi + vinv.log_det() + r.dot(vinv.apply(r)));
}

void check_state(const EmState& s, Index m) {
  if (s.sigma_beta.rows() != m || s.sigma_beta.cols() != m) {
    throw DimensionError("EM state: Sigma_beta must be m x m");
  }
  if (s.alpha.size() != m) throw DimensionError("EM state: alpha must have length m");
  if (!(s.sigma2 > 0.0)) throw DomainError("EM state: sigma2 must be positive");
}

double residual_loglik(const Matrix& pi, const Vector& y, const EmState& s) {
  const WoodburyInverse vinv(s.sigma2, pi, s.sigma_beta);
  const Vector r = (y - pi * s.alpha).array() - s.c;
  return gaussian_loglik(vinv, r);
}

// Complete-data objective at the MAP beta:
// -1/2 log det Sigma_beta - n/2 log sigma2 - 1/2 beta^T Sigma_beta^{-1} beta - |eps|^2 / (2 sigma2).
double joint_loglik(const Matrix& pi, const Vector& y, const EmState& s) {
  const Index n = y.size();
  const Matrix lambda = pi.transpose() * pi;
  const Matrix delta = posterior_cov(s.sigma_beta, lambda, s.sigma2);
  const Vector r = (y - pi * s.alpha).array() - s.c;
  const Vector beta = delta * (pi.transpose() * r) / s.sigma2;
  const Vector eps = r - pi * beta;
  Eigen::LLT<Matrix> llt(s.sigma_beta);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(s.sigma2) -
         0.5 * beta.dot(llt.solve(beta)) - eps.squaredNorm() / (2.0 * s.sigma2);
}

}  // namespace

void SigpModel::validate() const {
  kernel.validate();
  const Index nn = n();
  const Index m = rank();
  if (W.rows() != nn) throw DimensionError("SigpModel: W must have n rows");
  if (m < 1 || m > nn) throw DimensionError("SigpModel: rank must satisfy 1 <= m <= n");
  if (sigma_beta.rows() != m || sigma_beta.cols() != m) {
    throw DimensionError("SigpModel: Sigma_beta must be m x m");
  }
  if (alpha.size() != m) throw DimensionError("SigpModel: alpha must have length m");
  if (train_k_row_means.size() != nn) {
    throw DimensionError("SigpModel: train_K_row_means must have length n");
  }
  if (beta.size() != m || delta.rows() != m || delta.cols() != m) {
    throw DimensionError("SigpModel: posterior beta/delta have the wrong shape");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("SigpModel: sigma2 must be positive");
  if (!is_pd(sigma_beta)) throw DomainError("SigpModel: Sigma_beta must be positive definite");
}

EmSweep em_sweep(const Matrix& pi, const Matrix& wkw, const Vector& y, const EmState& state,
                 double xi, bool dense_v_inverse) {
  const Index n = pi.rows();
  const Index m = pi.cols();
  if (y.size() != n) throw DimensionError("em_sweep: y length does not match Pi");
  if (wkw.rows() != m || wkw.cols() != m) throw DimensionError("em_sweep: W^T K W must be m x m");
  if (!(xi > 0.0)) throw DomainError("em_sweep: xi must be positive");
  check_state(state, m);
  const double nd = static_cast<double>(n);
  const double s2 = state.sigma2;

  // V^{-1} applied to [1, Pi, y]; everything below needs only these columns.
  const WoodburyInverse wood(s2, pi, state.sigma_beta);
  Matrix rhs(n, m + 2);
  rhs.col(0).setOnes();
  rhs.middleCols(1, m) = pi;
  rhs.col(m + 1) = y;
  double trace_vinv = 0.0;
  Matrix vr;
  if (dense_v_inverse) {
    vr = wood.apply_dense(rhs, &trace_vinv);
  } else {
    vr = wood.apply(rhs);
    trace_vinv = wood.trace();
  }
  const Vector v1 = vr.col(0);
  const double s1 = v1.sum();

  // L = I - 1 1^T V^{-1} / (1^T V^{-1} 1), so V^{-1} L x = V^{-1} x - V^{-1} 1 (v1^T x) / s1.
  const Matrix vlpi = vr.middleCols(1, m) - v1 * (v1.transpose() * pi) / s1;
  const Vector vly = vr.col(m + 1) - v1 * (v1.dot(y) / s1);

  // alpha = (Pi^T V^{-1} L Pi + n xi W^T K W)^{-1} Pi^T V^{-1} L y.
  const Matrix a = pi.transpose() * vlpi + nd * xi * wkw;
  const Vector rhs_alpha = pi.transpose() * vly;
  const Vector alpha = sym(a).ldlt().solve(rhs_alpha);

  // c = (y - Pi alpha)^T V^{-1} 1 / (1^T V^{-1} 1).
  const Vector ypa = y - pi * alpha;
  const double c = ypa.dot(v1) / s1;

  // Delta, beta.
  const Matrix lambda = pi.transpose() * pi;
  const Matrix delta = posterior_cov(state.sigma_beta, lambda, s2);
  const Vector r = ypa.array() - c;
  const Vector beta = delta * (pi.transpose() * r) / s2;

  EmSweep out;
  out.alpha = alpha;
  out.c = c;
  out.delta = delta;
  out.beta = beta;
  out.trace_v_inverse = trace_vinv;

  // Sigma_beta <- beta beta^T + Delta.
  Matrix sb = sym(beta * beta.transpose() + delta);
  if (!is_pd(sb)) {
    const double jitter = 1e-10 * std::max(sb.trace(), 0.0) / static_cast<double>(m);
    sb.diagonal().array() += jitter > 0.0 ? jitter : 1e-300;
    out.sigma_beta_jittered = true;
  }

  // sigma2 <- sigma2 + (|y - Pi(beta + alpha) - 1 c|^2 - sigma2^2 tr V^{-1}) / n.
  double s2_new = s2 + ((r - pi * beta).squaredNorm() - s2 * s2 * trace_vinv) / nd;
  if (!(s2_new > kSigma2Floor)) {
    s2_new = kSigma2Floor;
    out.sigma2_floored = true;
  }

  out.next.sigma_beta = sb;
  out.next.sigma2 = s2_new;
  out.next.alpha = alpha;
  out.next.c = c;
  return out;
}

Matrix projection(const GramCache& gram, const Matrix& W, const Matrix& z) {
  if (W.rows() != gram.n()) throw DimensionError("projection: W must have n rows");
  if (z.cols() != gram.x().cols()) {
    throw DimensionError("projection: Z has " + std::to_string(z.cols()) + " columns, training data has " +
                         std::to_string(gram.x().cols()));
  }
  Matrix kz = sigp::gram(gram.spec(), z, gram.x());
  kz.rowwise() -= gram.row_means().transpose();
  return kz * W;
}

Matrix projection(const SigpModel& model, const Matrix& z) {
  if (z.cols() != model.dim()) {
    throw DimensionError("projection: Z has " + std::to_string(z.cols()) + " columns, model expects " +
                         std::to_string(model.dim()));
  }
  Matrix kz = gram(model.kernel, z, model.x_train);
  kz.rowwise() -= model.train_k_row_means.transpose();
  return kz * model.W;
}

Matrix training_projection(const GramCache& gram, const Matrix& W) {
  if (W.rows() != gram.n()) throw DimensionError("training_projection: W must have n rows");
  return gram.centered_left() * W;
}

double sigp_prior_log_density(const GramCache& gram, const Matrix& k_nu, double p, const Vector& f) {
  const Index n = gram.n();
  if (f.size() != n) throw DimensionError("sigp_prior_log_density: f must have length n");
  Matrix cov = igp_covariance(gram, k_nu, p);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * cov.trace() / static_cast<double>(n);
    if (jitter > 0.0) cov.diagonal().array() += jitter;
    llt.compute(cov);
    if (llt.info() != Eigen::Success || !(jitter > 0.0)) {
      throw SingularityError("sigp_prior_log_density: prior covariance is singular after jitter");
    }
  }
  const Matrix lfac = llt.matrixL();
  const double logdet = 2.0 * lfac.diagonal().array().log().sum();
  const Vector z = llt.matrixL().solve(f);
  return -0.5 * (static_cast<double>(n) * kLog2Pi + logdet + z.squaredNorm());
}

EmState default_em_init(const Vector& y, Index m) {
  if (y.size() == 0) throw DomainError("default_em_init: empty response");
  const double mean = y.mean();
  double var = y.size() > 1 ? (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1) : 0.0;
  if (!(var > 0.0) || !std::isfinite(var)) var = 1.0;
  EmState s;
  s.sigma_beta = var * Matrix::Identity(m, m);
  s.sigma2 = 0.5 * var;
  s.alpha = Vector::Zero(m);
  s.c = mean;
  return s;
}

EmResult em_fit(const GramCache& gram, const Vector& y, const SdrBasis& basis, const EmConfig& config) {
  const Index n = gram.n();
  const Matrix& W = basis.W;
  const Index m = W.cols();
  if (y.size() != n) throw DimensionError("em_fit: y must have length n");
  if (W.rows() != n || m < 1) throw DimensionError("em_fit: W must be n x m with m >= 1");
  if (!(config.xi > 0.0)) throw DomainError("em_fit: xi must be positive");
  if (config.max_iter < 0) throw DomainError("em_fit: max_iter must be non-negative");

  const Matrix pi = training_projection(gram, W);
  const Matrix wkw = sym(W.transpose() * gram.K() * W);

  EmState state = config.init ? *config.init : default_em_init(y, m);
  check_state(state, m);
  if (!is_pd(state.sigma_beta)) throw DomainError("em_fit: initial Sigma_beta must be PD");

  EmTrace trace;
  double ll = residual_loglik(pi, y, state);
  trace.loglik.push_back(ll);
  trace.joint_loglik.push_back(joint_loglik(pi, y, state));

  for (int it = 1; it <= config.max_iter; ++it) {
    const EmSweep sweep = em_sweep(pi, wkw, y, state, config.xi, config.dense_v_inverse);
    if (sweep.sigma_beta_jittered) {
      trace.notes.push_back("iteration " + std::to_string(it) + ": Sigma_beta jittered to stay PD");
    }
    if (sweep.sigma2_floored) {
      trace.notes.push_back("iteration " + std::to_string(it) + ": sigma2 floored at 1e-12");
    }
    EmState next = sweep.next;
    double ll_next = residual_loglik(pi, y, next);
    if (!(ll_next >= ll)) {
      EmState keep = next;
      keep.sigma2 = state.sigma2;
      const double ll_keep = residual_loglik(pi, y, keep);
      if (ll_keep > ll_next || std::isnan(ll_next)) {
        next = keep;
        ll_next = ll_keep;
        trace.notes.push_back("iteration " + std::to_string(it) +
                              ": sigma2 update lowered the likelihood, previous sigma2 kept");
      }
    }
    if (!(ll_next >= ll)) {
      trace.notes.push_back("iteration " + std::to_string(it) +
                            ": update lowered the likelihood, stopped at previous parameters");
      trace.converged = true;
      break;
    }
    const double change = ll_next - ll;
    state = std::move(next);
    ll = ll_next;
    trace.loglik.push_back(ll);
    trace.joint_loglik.push_back(joint_loglik(pi, y, state));
    trace.iterations = it;
    if (std::abs(change) < config.tol * (1.0 + std::abs(ll))) {
      trace.converged = true;
      break;
    }
  }

  SigpModel model;
  if (gram.has_inputs()) {
    model.kernel = gram.spec();
    model.x_train = gram.x();
  }
  model.W = W;
  model.sigma_beta = state.sigma_beta;
  model.sigma2 = state.sigma2;
  model.alpha = state.alpha;
  model.c = state.c;
  model.train_k_row_means = gram.row_means();
  model = with_posterior(std::move(model), gram, y);
  return {std::move(model), std::move(trace)};
}

double marginal_loglik(const SigpModel& model, const GramCache& gram, const Vector& y) {
  if (y.size() != gram.n()) throw DimensionError("marginal_loglik: y must have length n");
  const Matrix pi = training_projection(gram, model.W);
  return residual_loglik(pi, y, {model.sigma_beta, model.sigma2, model.alpha, model.c});
}

PosteriorBeta posterior_beta(const SigpModel& model, const GramCache& gram, const Vector& y) {
  if (y.size() != gram.n()) throw DimensionError("posterior_beta: y must have length n");
  const Matrix pi = training_projection(gram, model.W);
  const WoodburyInverse vinv(model.sigma2, pi, model.sigma_beta);
  const Vector r = (y - pi * model.alpha).array() - model.c;
  const Matrix sp = model.sigma_beta * pi.transpose();  // m x n
  PosteriorBeta out;
  out.mean = sp * vinv.apply(r);
  out.cov = sym(model.sigma_beta - sp * vinv.apply(Matrix(sp.transpose())));
  return out;
}

SigpModel with_posterior(SigpModel model, const GramCache& gram, const Vector& y) {
  if (y.size() != gram.n()) throw DimensionError("with_posterior: y must have length n");
  const Matrix pi = training_projection(gram, model.W);
  model.delta = posterior_cov(model.sigma_beta, pi.transpose() * pi, model.sigma2);
  const Vector r = (y - pi * model.alpha).array() - model.c;
  model.beta = model.delta * (pi.transpose() * r) / model.sigma2;
  return model;
}

PredictiveDistribution predict(const SigpModel& model, const Matrix& z) {
  const Matrix p = projection(model, z);
  PredictiveDistribution out;
  out.mean = (p * (model.alpha + model.beta)).array() + model.c;
  const Matrix half = p * psd_factor(model.delta);
  out.variance = half.rowwise().squaredNorm().array() + model.sigma2;
  return out;
}

OneVsRestResult fit_one_vs_rest(const GramCache& gram, const Vector& labels, const SdrBasis& basis,
                                const EmConfig& config) {
  if (labels.size() != gram.n()) throw DimensionError("fit_one_vs_rest: labels must have length n");
  std::map<double, int> distinct;
  for (Index i = 0; i < labels.size(); ++i) distinct[labels(i)] = 0;
  if (distinct.size() < 2) throw DomainError("fit_one_vs_rest: need at least two classes");
  OneVsRestResult out;
  for (const auto& [label, unused] : distinct) {
    (void)unused;
    const Vector target = (labels.array() == label).select(Vector::Ones(labels.size()), -1.0);
    EmResult fit = em_fit(gram, target, basis, config);
    out.model.labels.push_back(label);
    out.model.heads.push_back(std::move(fit.model));
    out.traces.push_back(std::move(fit.trace));
  }
  return out;
}

Matrix one_vs_rest_scores(const OneVsRestModel& model, const Matrix& z) {
  if (model.heads.empty()) throw DomainError("one_vs_rest_scores: model has no heads");
  Matrix scores(z.rows(), static_cast<Index>(model.heads.size()));
  for (std::size_t k = 0; k < model.heads.size(); ++k) {
    scores.col(static_cast<Index>(k)) = predict(model.heads[k], z).mean;
  }
  return scores;
}

Vector one_vs_rest_predict(const OneVsRestModel& model, const Matrix& z) {
  const Matrix scores = one_vs_rest_scores(model, z);
  Vector out(scores.rows());
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    out(i) = model.labels[static_cast<std::size_t>(best)];
  }
  return out;
}

}  // namespace sigp
