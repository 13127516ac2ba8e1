#include "sigp/baseline_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sigp/errors.hpp"

namespace sigp {

namespace {

Matrix design(const Matrix& x) {
  Matrix h(x.rows(), x.cols() + 1);
  h.col(0).setOnes();
  h.rightCols(x.cols()) = x;
  return h;
}

Eigen::LLT<Matrix> factor(const Matrix& k, double diag) {
  Matrix c = k;
  c.diagonal().array() += diag;
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) throw SingularityError("exact GP: K + noise I is not positive definite");
  return llt;
}

double log_marginal_from(const Eigen::LLT<Matrix>& llt, const Vector& r) {
  const double n = static_cast<double>(r.size());
  const Matrix l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const Vector z = llt.matrixL().solve(r);
  return -0.5 * z.squaredNorm() - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace

std::string_view to_string(GpMean mean) { return mean == GpMean::zero ? "zero" : "linear"; }

GpMean gp_mean_from_string(std::string_view name) {
  if (name == "zero") return GpMean::zero;
  if (name == "linear") return GpMean::linear;
  throw DomainError("unknown GP mean '" + std::string(name) + "'");
}

double ExactGpModel::mean_at(const Eigen::Ref<const Vector>& x) const {
  if (mean == GpMean::zero) return 0.0;
  return mean_coef(0) + mean_coef.tail(mean_coef.size() - 1).dot(x);
}

std::vector<double> default_noise_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 6; ++k) grid.push_back(std::pow(10.0, -4.0 + 4.0 * k / 6.0));
  return grid;
}

double gp_log_marginal(const Matrix& k, const Vector& r, double noise2) {
  if (k.rows() != r.size() || k.cols() != r.size()) throw DimensionError("gp_log_marginal: size mismatch");
  return log_marginal_from(factor(k, noise2), r);
}

ExactGpModel gp_fit(const GramCache& gram, const Vector& y, const std::vector<double>& noise_grid,
                    GpMean mean) {
  if (noise_grid.empty()) throw DomainError("gp_fit: noise grid is empty");
  const Index n = gram.n();
  if (y.size() != n) throw DimensionError("gp_fit: y must have length n");
  const Matrix& k = gram.K();
  const double jitter = n > 0 ? 1e-8 * k.trace() / static_cast<double>(n) : 0.0;

  ExactGpModel best;
  best.log_marginal = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double s2 : noise_grid) {
    if (!(s2 > 0.0)) throw DomainError("gp_fit: noise levels must be positive");
    const Eigen::LLT<Matrix> llt = factor(k, s2 + jitter);
    Vector coef;
    Vector r = y;
    if (mean == GpMean::linear) {
      if (!gram.has_inputs()) throw DomainError("gp_fit: linear mean needs training inputs");
      const Matrix h = design(gram.x());
      const Matrix cih = llt.solve(h);
      coef = (h.transpose() * cih).ldlt().solve(cih.transpose() * y);
      r = y - h * coef;
    }
    const double ll = log_marginal_from(llt, r);
    if (!found || ll > best.log_marginal) {
      found = true;
      best.noise2 = s2;
      best.log_marginal = ll;
      best.dual_weights = llt.solve(r);
      best.mean_coef = coef;
    }
  }
  best.kernel = gram.has_inputs() ? gram.spec() : KernelSpec{};
  best.x_train = gram.x();
  best.jitter = jitter;
  best.mean = mean;
  return best;
}

PredictiveDistribution gp_predict(const ExactGpModel& model, const Matrix& z) {
  if (z.cols() != model.x_train.cols()) throw DimensionError("gp_predict: dimension mismatch");
  const Matrix kzx = gram(model.kernel, z, model.x_train);
  const Eigen::LLT<Matrix> llt = factor(gram(model.kernel, model.x_train), model.noise2 + model.jitter);
  const Matrix v = llt.matrixL().solve(kzx.transpose());  // n x t

  PredictiveDistribution out;
  out.mean = kzx * model.dual_weights;
  out.variance.resize(z.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    out.mean(i) += model.mean_at(z.row(i).transpose());
    const double prior = model.kernel(z.row(i).transpose(), z.row(i).transpose());
    const double latent = std::clamp(prior - v.col(i).squaredNorm(), 0.0, std::max(prior, 0.0));
    out.variance(i) = latent + model.noise2;
  }
  return out;
}

LinearRegression LinearRegression::fit(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw DimensionError("LinearRegression: row count mismatch");
  if (x.rows() <= x.cols() + 1) throw DomainError("LinearRegression: need more rows than coefficients");
  const Matrix h = design(x);
  LinearRegression out;
  out.coef = h.colPivHouseholderQr().solve(y);
  const double dof = static_cast<double>(x.rows() - h.cols());
  out.sigma2 = (y - h * out.coef).squaredNorm() / dof;
  return out;
}

Vector LinearRegression::predict(const Matrix& x) const {
  if (x.cols() + 1 != coef.size()) throw DimensionError("LinearRegression: dimension mismatch");
  return design(x) * coef;
}

PredictiveDistribution LinearRegression::predict_distribution(const Matrix& x) const {
  return {predict(x), Vector::Constant(x.rows(), sigma2)};
}

}  // namespace sigp
