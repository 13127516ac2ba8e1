#include "sigp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sigp/errors.hpp"

namespace sigp {

namespace {

void require_square(const Matrix& a, const char* name) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(name) + " must be square, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void require_symmetric(const Matrix& a, const char* name) {
  require_square(a, name);
  const double scale = a.norm();
  if ((a - a.transpose()).norm() > 1e-10 * scale) {
    throw DimensionError(std::string(name) + " is not symmetric");
  }
}

// Largest-magnitude entry of each column made positive; first index wins ties.
void normalize_signs(Matrix& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (v.rows() > 0 && v(best, j) < 0.0) v.col(j) = -v.col(j);
  }
}

SymEig eig_descending(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw SingularityError("symmetric eigensolver failed to converge");
  }
  SymEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  normalize_signs(out.vectors);
  return out;
}

}  // namespace

Matrix SymEig::reconstruct() const {
  return vectors * values.asDiagonal() * vectors.transpose();
}

SymEig sym_eig(const Matrix& a) {
  require_symmetric(a, "sym_eig input");
  if (a.rows() == 0) return SymEig{Vector(0), Matrix(0, 0)};
  const Matrix sym = 0.5 * (a + a.transpose());
  return eig_descending(sym);
}

Matrix matrix_power(const SymEig& eig, double p) {
  if (!(p >= 0.5 && p <= 1.0)) {
    throw DomainError("matrix_power: p must lie in [0.5, 1], got " + std::to_string(p));
  }
  const Index n = eig.values.size();
  if (n == 0) return Matrix(0, 0);
  const double lambda_max = std::max(eig.values(0), 0.0);
  Vector powered(n);
  for (Index i = 0; i < n; ++i) {
    const double v = eig.values(i);
    if (v < -1e-10 * lambda_max) {
      throw DomainError("matrix_power: matrix is not positive semidefinite (eigenvalue " +
                        std::to_string(v) + ")");
    }
    powered(i) = v > 0.0 ? std::pow(v, p) : 0.0;
  }
  Matrix out = eig.vectors * powered.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix matrix_power(const Matrix& a, double p) {
  if (!(p >= 0.5 && p <= 1.0)) {
    throw DomainError("matrix_power: p must lie in [0.5, 1], got " + std::to_string(p));
  }
  return matrix_power(sym_eig(a), p);
}

GenEigBasis gen_eig_top(const Matrix& b, const Matrix& a, Index m) {
  require_symmetric(a, "gen_eig_top A");
  require_symmetric(b, "gen_eig_top B");
  const Index n = a.rows();
  if (b.rows() != n) throw DimensionError("gen_eig_top: A and B sizes differ");
  if (m < 0 || m > n) throw DimensionError("gen_eig_top: m must satisfy 0 <= m <= n");

  const SymEig ea = eig_descending(0.5 * (a + a.transpose()));
  const double lambda_max = n > 0 ? ea.values(0) : 0.0;
  const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                       std::abs(lambda_max);
  if (n > 0 && (lambda_max <= 0.0 || ea.values(n - 1) <= floor)) {
    throw SingularityError(
        "gen_eig_top: A is not positive definite; increase the regularizer zeta");
  }
  const Vector inv_sqrt = ea.values.array().rsqrt();
  const Matrix whiten = ea.vectors * inv_sqrt.asDiagonal() * ea.vectors.transpose();
  Matrix bt = whiten * b * whiten;
  bt = 0.5 * (bt + bt.transpose());
  const SymEig eb = eig_descending(bt);

  GenEigBasis out;
  out.values = eb.values.head(m);
  out.vectors = whiten * eb.vectors.leftCols(m);
  normalize_signs(out.vectors);
  return out;
}

RangeGenEig gen_eig_top_on_range(const Matrix& b, const Matrix& a, Index m, double rel_tol) {
  require_symmetric(a, "gen_eig_top_on_range A");
  require_symmetric(b, "gen_eig_top_on_range B");
  const Index n = a.rows();
  if (b.rows() != n) throw DimensionError("gen_eig_top_on_range: A and B sizes differ");
  if (m < 0 || m > n) throw DimensionError("gen_eig_top_on_range: m must satisfy 0 <= m <= n");

  const SymEig ea = eig_descending(0.5 * (a + a.transpose()));
  if (n == 0 || ea.values(0) <= 0.0) {
    throw SingularityError("gen_eig_top_on_range: A has no positive eigenvalues");
  }
  const double cut = 100.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() * ea.values(0);
  Index r = 0;
  while (r < n && ea.values(r) > cut) ++r;

  // Q = U_r D_r^{-1/2}; Q^T A Q = I_r.
  const Matrix q = ea.vectors.leftCols(r) * ea.values.head(r).array().rsqrt().matrix().asDiagonal();
  Matrix bt = q.transpose() * b * q;
  bt = 0.5 * (bt + bt.transpose());
  const SymEig eb = eig_descending(bt);

  const double top = r > 0 ? std::max(eb.values(0), 0.0) : 0.0;
  Index b_rank = 0;
  while (b_rank < r && eb.values(b_rank) > rel_tol * top && top > 0.0) ++b_rank;
  if (m > b_rank) {
    throw RankError("requested " + std::to_string(m) + " directions but the numerical rank is " +
                        std::to_string(b_rank),
                    static_cast<std::size_t>(b_rank));
  }

  RangeGenEig out;
  out.range_rank = r;
  out.b_rank = b_rank;
  out.basis.values = eb.values.head(m);
  out.basis.vectors = q * eb.vectors.leftCols(m);
  normalize_signs(out.basis.vectors);
  return out;
}

double log_det_pd(const Matrix& a) {
  require_square(a, "log_det_pd input");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw SingularityError("matrix is not positive definite");
  const Matrix& l = llt.matrixLLT();
  double s = 0.0;
  for (Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

double log_det_quotient(const Matrix& s, const Matrix& m, const Matrix& n) {
  if (m.rows() != s.rows() || n.rows() != s.rows()) {
    throw DimensionError("log_det_quotient: size mismatch");
  }
  const Matrix pm = s.transpose() * m * s;
  const Matrix pn = s.transpose() * n * s;
  try {
    return log_det_pd(0.5 * (pm + pm.transpose())) - log_det_pd(0.5 * (pn + pn.transpose()));
  } catch (const SingularityError&) {
    throw SingularityError("projected matrices S^T M S or S^T N S are singular");
  }
}

double det_quotient(const Matrix& s, const Matrix& m, const Matrix& n) {
  return std::exp(log_det_quotient(s, m, n));
}

Matrix det_quotient_argmin(const Matrix& m, const Matrix& n, Index count) {
  return gen_eig_top(n, m, count).vectors;
}

Matrix psd_factor(const Matrix& a) {
  require_square(a, "psd_factor input");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const SymEig e = eig_descending(0.5 * (a + a.transpose()));
  const Vector root = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * root.asDiagonal();
}

WoodburyInverse::WoodburyInverse(double sigma2, const Matrix& pi, const Matrix& sigma_beta)
    : sigma2_(sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("WoodburyInverse: sigma2 must be positive");
  if (sigma_beta.rows() != pi.cols() || sigma_beta.cols() != pi.cols()) {
    throw DimensionError("WoodburyInverse: Sigma_beta must be m x m with m = cols(Pi)");
  }
  p_ = pi * psd_factor(sigma_beta);
  Matrix inner = p_.transpose() * p_;
  inner.diagonal().array() += sigma2_;
  inner_.compute(inner);
  if (inner_.info() != Eigen::Success) {
    throw SingularityError("WoodburyInverse: inner m x m system is not positive definite");
  }
}

Vector WoodburyInverse::apply(const Vector& v) const {
  if (v.size() != p_.rows()) throw DimensionError("WoodburyInverse::apply: size mismatch");
  return (v - p_ * inner_.solve(p_.transpose() * v)) / sigma2_;
}

Matrix WoodburyInverse::apply(const Matrix& v) const {
  if (v.rows() != p_.rows()) throw DimensionError("WoodburyInverse::apply: size mismatch");
  return (v - p_ * inner_.solve(p_.transpose() * v)) / sigma2_;
}

Matrix WoodburyInverse::dense() const {
  Matrix out = -(p_ * inner_.solve(p_.transpose()));
  out.diagonal().array() += 1.0;
  return out / sigma2_;
}

Matrix WoodburyInverse::apply_dense(const Matrix& rhs, double* trace, Index block_rows) const {
  const Index n = p_.rows();
  if (rhs.rows() != n) throw DimensionError("WoodburyInverse::apply_dense: size mismatch");
  if (block_rows < 1) throw DomainError("WoodburyInverse::apply_dense: block_rows must be positive");
  const Matrix q = inner_.solve(p_.transpose());  // m x n
  Matrix out(n, rhs.cols());
  Matrix buf(std::min(block_rows, std::max<Index>(n, 1)), n);
  double tr = 0.0;
  for (Index r0 = 0; r0 < n; r0 += block_rows) {
    const Index b = std::min(block_rows, n - r0);
    auto blk = buf.topRows(b);
    blk.noalias() = -p_.middleRows(r0, b) * q;
    for (Index i = 0; i < b; ++i) blk(i, r0 + i) += 1.0;
    blk /= sigma2_;
    for (Index i = 0; i < b; ++i) tr += blk(i, r0 + i);
    out.middleRows(r0, b).noalias() = blk * rhs;
  }
  if (trace) *trace = tr;
  return out;
}

double WoodburyInverse::trace() const {
  const Index n = p_.rows();
  const Matrix ptp = p_.transpose() * p_;
  return (static_cast<double>(n) - inner_.solve(ptp).trace()) / sigma2_;
}

double WoodburyInverse::log_det() const {
  const Index n = p_.rows();
  const Index m = p_.cols();
  const Matrix& l = inner_.matrixLLT();
  double s = 0.0;
  for (Index i = 0; i < m; ++i) s += std::log(l(i, i));
  return static_cast<double>(n - m) * std::log(sigma2_) + 2.0 * s;
}

}  // namespace sigp
