#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "sigp/kernels.hpp"
#include "sigp/types.hpp"

namespace sigp {

/// Partition of the sample into slices of the sorted response.
struct SlicePlan {
  std::vector<Index> ordering;                     // original indices, sorted by y (stable)
  std::vector<std::pair<Index, Index>> boundaries; // [begin, end) into `ordering`
  std::vector<Index> sizes;

  Index n() const { return static_cast<Index>(ordering.size()); }
  Index slices() const { return static_cast<Index>(sizes.size()); }
  /// slice id of every point, indexed by original position
  std::vector<Index> assignment() const;
};

/// Equal-count slicing: sort y ascending (ties by original index) and cut into
/// s contiguous slices whose sizes differ by at most one, larger slices first.
/// Throws DomainError unless 1 <= s <= n.
SlicePlan make_slices(const Vector& y, Index s);

/// One slice per distinct response value (for class labels).
SlicePlan make_class_slices(const Vector& y);

/// M (regularised expected conditional variance) and N (total variance), both
/// scaled by n and expressed on the representer coefficients.
struct SdrMatrices {
  Matrix M;
  Matrix N;
};

/// M = K blockdiag(Gamma_{n_i}) K + n zeta K and N = K Gamma_n K.
///
/// The block-diagonal within-slice centering is assembled directly in the
/// original point order, which equals permuting K into slice order, building
/// the block diagonal, and permuting back. W therefore stays indexed like the
/// training inputs.
SdrMatrices sdr_matrices_sliced(const GramCache& gram, const SlicePlan& plan, double zeta);

/// Slicing-free variant with a response kernel:
///   M = K [Gamma_n - (Kc_Y + n zeta1 I)^{-1} Kc_Y] K + n zeta K,  Kc_Y = Gamma_n K_Y Gamma_n
///   N = K Gamma_n K.
/// M is symmetrised explicitly (the two factors commute, so this only removes
/// rounding asymmetry).
SdrMatrices sdr_matrices_response_kernel(const GramCache& gram, const Matrix& ky, double zeta,
                                         double zeta1);

enum class SdrMethod { sliced, response_kernel };
std::string_view to_string(SdrMethod method);
SdrMethod sdr_method_from_string(std::string_view name);

/// Estimated basis of the SDR subspace of the span of training representers.
///
/// `raw` holds the generalized eigenvalues tau' of N w = tau' M w (the
/// variance-ratio scale, >= 1 without regularisation); `tau` is the reported
/// explained-variance scale tau = 1 - 1/tau', which lies in (0, 1) for the
/// informative directions.
struct SdrBasis {
  Matrix W;
  Vector tau;
  Vector raw;
  double zeta = 0.0;
  SdrMethod method = SdrMethod::sliced;
  std::vector<Index> slice_sizes;
  Index detected_rank = 0;  // numerical rank of N on the range of M

  Index rank() const { return W.cols(); }
};

/// Leading m directions maximising g(W) = -(n/2) log det(W^T M W)/det(W^T N W).
/// W is M-orthonormal. Throws RankError when m exceeds the numerical rank of N.
SdrBasis estimate_basis(const Matrix& M, const Matrix& N, Index m);
SdrBasis estimate_basis(const SdrMatrices& mats, Index m);

/// g(W) = -(n/2) log det(W^T M W)/det(W^T N W); basis invariant.
double sdr_loglik(const Matrix& W, const Matrix& M, const Matrix& N);

/// Lower bound on tau at the true SDR rank, holding with probability >= 1 - delta:
///   1/n - sqrt((8/n^3) log(2/delta)).
double rank_bound(Index n, double delta);

/// Number of tau values strictly above rank_bound(n, delta).
Index suggest_rank(const Vector& tau, Index n, double delta);

/// zeta = 1e-4 trace(K)/n.
double default_zeta(const Matrix& k);

/// RBF Gram matrix of the standardised response with median-heuristic bandwidth.
Matrix response_gram(const Vector& y);

}  // namespace sigp
