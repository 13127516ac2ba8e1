#pragma once

#include "sigp/types.hpp"

namespace sigp {

/// Symmetric eigendecomposition A = U diag(values) U^T.
///
/// Eigenvalues are sorted non-increasing and each eigenvector column is
/// sign-normalised so that its largest-magnitude entry is positive (first
/// such entry on ties). This makes the decomposition reproducible for simple
/// spectra, which matters for serialised models.
struct SymEig {
  Vector values;
  Matrix vectors;

  Matrix reconstruct() const;
};

/// Top-m solutions of B w = tau A w, tau descending.
struct GenEigBasis {
  Matrix vectors;  // n x m
  Vector values;   // m
};

/// Symmetric eigendecomposition. Throws DimensionError for non-square input
/// or when ||A - A^T||_F > 1e-10 ||A||_F.
SymEig sym_eig(const Matrix& a);

/// U diag(d^p) U^T for a PSD matrix, p in [0.5, 1]. Eigenvalues above
/// -1e-10 * lambda_max are clamped to zero; anything more negative is a
/// DomainError.
Matrix matrix_power(const Matrix& a, double p);
Matrix matrix_power(const SymEig& eig, double p);

/// Top-m generalized eigenpairs of B w = tau A w for symmetric B and symmetric
/// positive definite A, computed by whitening with A^{-1/2}. Columns are
/// A-orthonormal (W^T A W = I). Throws SingularityError when A is not PD.
GenEigBasis gen_eig_top(const Matrix& b, const Matrix& a, Index m);

/// Result of a generalized eigenproblem solved on the numerical range of A.
struct RangeGenEig {
  GenEigBasis basis;
  Index range_rank = 0;  // numerical rank of A
  Index b_rank = 0;      // numerical rank of the whitened B
};

/// Same as gen_eig_top for a PSD A whose null space is also annihilated by B
/// (B = K X K, A = K Y K + c K share the null space of K). Eigen-directions of
/// A at rounding level (<= 100 n eps lambda_max(A)) are discarded before
/// whitening. The numerical rank of the whitened B counts eigenvalues above
/// rel_tol times its largest; a RankError is thrown when m exceeds it.
RangeGenEig gen_eig_top_on_range(const Matrix& b, const Matrix& a, Index m,
                                 double rel_tol = 1e-10);

/// det(S^T M S) / det(S^T N S).
double det_quotient(const Matrix& s, const Matrix& m, const Matrix& n);

/// log det(S^T M S) - log det(S^T N S), computed through Cholesky factors.
double log_det_quotient(const Matrix& s, const Matrix& m, const Matrix& n);

/// Minimiser of det(S^T M S) / det(S^T N S) over full-rank n x m matrices S:
/// the leading eigenvectors of M^{-1} N, returned M-orthonormal.
Matrix det_quotient_argmin(const Matrix& m, const Matrix& n, Index count);

/// Factor L with L L^T = A for a symmetric PSD matrix. Tries Cholesky first
/// and falls back to an eigen square root (negative eigenvalues clamped).
Matrix psd_factor(const Matrix& a);

/// log det of a symmetric PD matrix via Cholesky. Throws SingularityError.
double log_det_pd(const Matrix& a);

/// Applies V^{-1} for V = Pi Sigma_beta Pi^T + sigma2 I through the Woodbury
/// identity. With Sigma_beta = L L^T and P = Pi L,
///   V^{-1} = sigma2^{-1} [I - P (sigma2 I + P^T P)^{-1} P^T],
/// which equals sigma2^{-1}[I - Pi (sigma2 Sigma_beta^{-1} + Pi^T Pi)^{-1} Pi^T]
/// but stays defined when Sigma_beta is close to singular.
///
/// Setup costs O(n m^2 + m^3); each application costs O(n m).
class WoodburyInverse {
 public:
  WoodburyInverse(double sigma2, const Matrix& pi, const Matrix& sigma_beta);

  Vector apply(const Vector& v) const;
  Matrix apply(const Matrix& v) const;

  /// The full n x n inverse (O(n^2 m)).
  Matrix dense() const;

  /// V^{-1} rhs computed by forming every entry of V^{-1} explicitly, one
  /// block of `block_rows` rows at a time, and multiplying it into `rhs`.
  /// Cost O(n^2 (m + k)) for k right-hand sides with an O(block_rows n)
  /// working set. The trace of V^{-1} is accumulated into `trace` if given.
  Matrix apply_dense(const Matrix& rhs, double* trace = nullptr, Index block_rows = 64) const;

  double trace() const;
  /// log det V by the matrix determinant lemma.
  double log_det() const;

  Index size() const { return p_.rows(); }
  double sigma2() const { return sigma2_; }

 private:
  double sigma2_;
  Matrix p_;                       // Pi L
  Eigen::LLT<Matrix> inner_;       // sigma2 I + P^T P
};

}  // namespace sigp
