#include "sigp/sdr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sigp/errors.hpp"
#include "sigp/linalg.hpp"

namespace sigp {

namespace {

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

SlicePlan plan_from_cuts(std::vector<Index> ordering, const std::vector<Index>& sizes) {
  SlicePlan plan;
  plan.ordering = std::move(ordering);
  plan.sizes = sizes;
  Index begin = 0;
  for (Index s : sizes) {
    plan.boundaries.emplace_back(begin, begin + s);
    begin += s;
  }
  return plan;
}

std::vector<Index> stable_order(const Vector& y) {
  std::vector<Index> order(static_cast<std::size_t>(y.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return y(a) < y(b); });
  return order;
}

}  // namespace

std::vector<Index> SlicePlan::assignment() const {
  std::vector<Index> slice_of(ordering.size(), 0);
  for (std::size_t s = 0; s < boundaries.size(); ++s) {
    for (Index k = boundaries[s].first; k < boundaries[s].second; ++k) {
      slice_of[static_cast<std::size_t>(ordering[static_cast<std::size_t>(k)])] =
          static_cast<Index>(s);
    }
  }
  return slice_of;
}

SlicePlan make_slices(const Vector& y, Index s) {
  const Index n = y.size();
  if (s < 1 || s > n) {
    throw DomainError("make_slices: need 1 <= s <= n (s=" + std::to_string(s) +
                      ", n=" + std::to_string(n) + ")");
  }
  std::vector<Index> sizes(static_cast<std::size_t>(s), n / s);
  for (Index i = 0; i < n % s; ++i) ++sizes[static_cast<std::size_t>(i)];
  return plan_from_cuts(stable_order(y), sizes);
}

SlicePlan make_class_slices(const Vector& y) {
  if (y.size() == 0) throw DomainError("make_class_slices: empty response");
  std::vector<Index> order = stable_order(y);
  std::vector<Index> sizes;
  Index run = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && y(order[k]) != y(order[k - 1])) {
      sizes.push_back(run);
      run = 0;
    }
    ++run;
  }
  sizes.push_back(run);
  return plan_from_cuts(std::move(order), sizes);
}

SdrMatrices sdr_matrices_sliced(const GramCache& gram, const SlicePlan& plan, double zeta) {
  if (!(zeta > 0.0)) throw DomainError("sdr_matrices_sliced: zeta must be positive");
  const Index n = gram.n();
  if (plan.n() != n) throw DimensionError("sdr_matrices_sliced: slice plan does not match K");
  const Matrix& k = gram.K();

  // C K with C = blockdiag(Gamma_{n_i}) in original order: subtract each
  // slice's mean row from its members.
  Matrix ck = k;
  for (const auto& [begin, end] : plan.boundaries) {
    Vector mean = Vector::Zero(n);
    for (Index t = begin; t < end; ++t) mean += k.row(plan.ordering[static_cast<std::size_t>(t)]).transpose();
    mean /= static_cast<double>(end - begin);
    for (Index t = begin; t < end; ++t) ck.row(plan.ordering[static_cast<std::size_t>(t)]) -= mean.transpose();
  }

  const double nd = static_cast<double>(n);
  SdrMatrices out;
  out.M = symmetrized(k * ck) + nd * zeta * k;
  out.N = symmetrized(k * gram.centered_left());
  return out;
}

SdrMatrices sdr_matrices_response_kernel(const GramCache& gram, const Matrix& ky, double zeta,
                                         double zeta1) {
  if (!(zeta > 0.0)) throw DomainError("sdr_matrices_response_kernel: zeta must be positive");
  if (!(zeta1 > 0.0)) throw DomainError("sdr_matrices_response_kernel: zeta1 must be positive");
  const Index n = gram.n();
  if (ky.rows() != n || ky.cols() != n) {
    throw DimensionError("sdr_matrices_response_kernel: K_Y must be n x n");
  }
  const double nd = static_cast<double>(n);
  const Matrix& k = gram.K();

  const Vector ky_means = ky.colwise().mean();
  Matrix kc = ky.rowwise() - ky_means.transpose();
  const Vector kc_rows = kc.rowwise().mean();
  kc = kc.colwise() - kc_rows;
  kc = symmetrized(kc);

  Matrix reg = kc;
  reg.diagonal().array() += nd * zeta1;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw SingularityError(
        "sdr_matrices_response_kernel: centered response Gram plus n*zeta1*I is singular; "
        "increase zeta1");
  }
  Matrix middle = centering_matrix(n) - llt.solve(kc);

  SdrMatrices out;
  out.M = symmetrized(k * middle * k) + nd * zeta * k;
  out.N = symmetrized(k * gram.centered_left());
  return out;
}

std::string_view to_string(SdrMethod method) {
  return method == SdrMethod::sliced ? "sliced" : "ykernel";
}

SdrMethod sdr_method_from_string(std::string_view name) {
  if (name == "sliced") return SdrMethod::sliced;
  if (name == "ykernel" || name == "response_kernel") return SdrMethod::response_kernel;
  throw DomainError("unknown SDR method '" + std::string(name) + "'");
}

SdrBasis estimate_basis(const Matrix& M, const Matrix& N, Index m) {
  if (m < 1) throw DomainError("estimate_basis: rank must be at least 1");
  const RangeGenEig solved = gen_eig_top_on_range(N, M, m);
  SdrBasis out;
  out.W = solved.basis.vectors;
  out.raw = solved.basis.values;
  out.tau = (1.0 - out.raw.array().inverse()).matrix();
  out.detected_rank = solved.b_rank;
  return out;
}

SdrBasis estimate_basis(const SdrMatrices& mats, Index m) { return estimate_basis(mats.M, mats.N, m); }

double sdr_loglik(const Matrix& W, const Matrix& M, const Matrix& N) {
  return -0.5 * static_cast<double>(M.rows()) * log_det_quotient(W, M, N);
}

double rank_bound(Index n, double delta) {
  if (n < 1) throw DomainError("rank_bound: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("rank_bound: delta must lie in (0, 1)");
  const double nd = static_cast<double>(n);
  return 1.0 / nd - std::sqrt(8.0 / (nd * nd * nd) * std::log(2.0 / delta));
}

Index suggest_rank(const Vector& tau, Index n, double delta) {
  const double bound = rank_bound(n, delta);
  return static_cast<Index>((tau.array() > bound).count());
}

double default_zeta(const Matrix& k) {
  const Index n = k.rows();
  if (n == 0) return 1e-4;
  const double z = 1e-4 * k.trace() / static_cast<double>(n);
  return z > 0.0 ? z : 1e-4;
}

Matrix response_gram(const Vector& y) {
  const Index n = y.size();
  Matrix ys(n, 1);
  if (n > 0) {
    const double mean = y.mean();
    const double sd = n > 1 ? std::sqrt((y.array() - mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    ys.col(0) = (y.array() - mean) / (sd > 0.0 ? sd : 1.0);
  }
  return gram(KernelSpec::rbf(median_heuristic(ys)), ys);
}

}  // namespace sigp
