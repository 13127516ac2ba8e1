#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "sigp/linalg.hpp"
#include "sigp/types.hpp"

namespace sigp {

enum class KernelFamily { rbf, linear, brownian_bridge };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Kernel family plus its hyper-parameters.
///   rbf:             s * exp(-|x - z|^2 / (2 l^2))
///   linear:          s * <x, z>
///   brownian_bridge: s * (min(x, z) - x z), scalar inputs in [0, 1]
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double lengthscale = 1.0;
  double variance_scale = 1.0;

  static KernelSpec rbf(double lengthscale, double variance_scale = 1.0) {
    return {KernelFamily::rbf, lengthscale, variance_scale};
  }
  static KernelSpec linear(double variance_scale = 1.0) {
    return {KernelFamily::linear, 1.0, variance_scale};
  }
  static KernelSpec brownian_bridge(double variance_scale = 1.0) {
    return {KernelFamily::brownian_bridge, 1.0, variance_scale};
  }

  /// Throws DomainError on non-positive lengthscale or variance_scale.
  void validate() const;

  double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z) const;
};

/// kappa(X, Z): entry (i, j) = kappa(X_i:, Z_j:). Entries below 1e-300 in
/// magnitude are flushed to zero. Rows are computed in parallel (capped by the
/// SIGP_THREADS environment variable); every entry is computed independently,
/// so the result does not depend on scheduling.
Matrix gram(const KernelSpec& spec, const Matrix& x, const Matrix& z);

/// Symmetric kappa(X, X); the upper triangle is mirrored so the result is
/// exactly symmetric.
Matrix gram(const KernelSpec& spec, const Matrix& x);

/// Median pairwise Euclidean distance between rows (the usual RBF bandwidth
/// heuristic). Returns 1 for fewer than two rows or all-identical rows.
double median_heuristic(const Matrix& x);

/// Gamma_n = I - 1 1^T / n.
Matrix centering_matrix(Index n);

/// Kernel matrix on the training inputs together with its eigendecomposition.
/// Immutable once built; every consumer reads from the same cache.
class GramCache {
 public:
  GramCache(const KernelSpec& spec, const Matrix& x);

  /// Wrap a precomputed symmetric PSD matrix (no inputs or kernel attached).
  static GramCache from_matrix(const Matrix& k);

  const Matrix& K() const { return k_; }
  const SymEig& eig() const { return eig_; }
  Index n() const { return k_.rows(); }

  bool has_inputs() const { return spec_.has_value(); }
  /// Throws Error when built from a bare matrix.
  const KernelSpec& spec() const;
  const Matrix& x() const { return x_; }

  /// Column means of K, (1/n) 1^T K.
  const Vector& row_means() const { return row_means_; }

  /// Gamma_n K.
  Matrix centered_left() const;
  /// Gamma_n K Gamma_n.
  Matrix double_centered() const;

 private:
  GramCache() = default;
  void finish();

  std::optional<KernelSpec> spec_;
  Matrix x_;
  Matrix k_;
  SymEig eig_;
  Vector row_means_;
};

/// Sample-level covariance of the integral GP: n^{-2p} K^p K_nu K^p.
Matrix igp_covariance(const GramCache& gram, const Matrix& k_nu, double p);

struct BridgeEigenpair {
  double eigenvalue;
  double eigenfunction;
};

/// Closed-form eigensystem of the Brownian bridge kernel on [0, 1] under the
/// Lebesgue measure: lambda_j = 1/(pi^2 j^2), e_j(x) = sqrt(2) sin(j pi x).
BridgeEigenpair brownian_bridge_eigensystem(int j, double x);

}  // namespace sigp
