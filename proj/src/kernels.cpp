#include "sigp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "sigp/errors.hpp"

namespace sigp {

namespace {

constexpr double kFlushBelow = 1e-300;

unsigned thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SIGP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

// Runs fn(row) for row in [0, rows), split in contiguous blocks.
template <typename Fn>
void parallel_rows(Index rows, Index work_per_row, Fn&& fn) {
  const unsigned cap = thread_cap();
  const Index total = rows * std::max<Index>(work_per_row, 1);
  const unsigned workers =
      total < 200000 ? 1u : std::min<unsigned>(cap, static_cast<unsigned>(rows));
  if (workers <= 1) {
    for (Index i = 0; i < rows; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const Index block = (rows + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const Index lo = static_cast<Index>(w) * block;
    const Index hi = std::min(rows, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (Index i = lo; i < hi; ++i) fn(i);
    });
  }
}

double flush(double v) { return std::abs(v) < kFlushBelow ? 0.0 : v; }

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::rbf:
      return "rbf";
    case KernelFamily::linear:
      return "linear";
    case KernelFamily::brownian_bridge:
      return "brownian_bridge";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "rbf") return KernelFamily::rbf;
  if (name == "linear") return KernelFamily::linear;
  if (name == "brownian_bridge") return KernelFamily::brownian_bridge;
  throw DomainError("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw DomainError("kernel lengthscale must be positive");
  }
  if (!(variance_scale > 0.0) || !std::isfinite(variance_scale)) {
    throw DomainError("kernel variance_scale must be positive");
  }
}

double KernelSpec::operator()(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& z) const {
  switch (family) {
    case KernelFamily::rbf:
      return variance_scale * std::exp(-(x - z).squaredNorm() / (2.0 * lengthscale * lengthscale));
    case KernelFamily::linear:
      return variance_scale * x.dot(z);
    case KernelFamily::brownian_bridge: {
      const double a = x(0);
      const double b = z(0);
      return variance_scale * (std::min(a, b) - a * b);
    }
  }
  return 0.0;
}

namespace {

void check_inputs(const KernelSpec& spec, const Matrix& x, const Matrix& z) {
  spec.validate();
  if (x.cols() != z.cols()) {
    throw DimensionError("gram: inputs have " + std::to_string(x.cols()) + " and " +
                         std::to_string(z.cols()) + " columns");
  }
  if (spec.family == KernelFamily::brownian_bridge) {
    if (x.cols() != 1) throw DomainError("brownian_bridge kernel needs scalar inputs");
    auto in_unit = [](const Matrix& m) {
      return m.size() == 0 || (m.minCoeff() >= 0.0 && m.maxCoeff() <= 1.0);
    };
    if (!in_unit(x) || !in_unit(z)) {
      throw DomainError("brownian_bridge kernel inputs must lie in [0, 1]");
    }
  }
}

}  // namespace

Matrix gram(const KernelSpec& spec, const Matrix& x, const Matrix& z) {
  check_inputs(spec, x, z);
  Matrix out(x.rows(), z.rows());
  parallel_rows(x.rows(), z.rows() * std::max<Index>(x.cols(), 1), [&](Index i) {
    const Vector xi = x.row(i).transpose();
    for (Index j = 0; j < z.rows(); ++j) out(i, j) = flush(spec(xi, z.row(j).transpose()));
  });
  return out;
}

Matrix gram(const KernelSpec& spec, const Matrix& x) {
  check_inputs(spec, x, x);
  const Index n = x.rows();
  Matrix out(n, n);
  parallel_rows(n, n * std::max<Index>(x.cols(), 1), [&](Index i) {
    const Vector xi = x.row(i).transpose();
    for (Index j = i; j < n; ++j) out(i, j) = flush(spec(xi, x.row(j).transpose()));
  });
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) out(i, j) = out(j, i);
  }
  return out;
}

double median_heuristic(const Matrix& x) {
  const Index n = x.rows();
  if (n < 2) return 1.0;
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  }
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) {
    const double lower = *std::max_element(d.begin(), mid);
    med = 0.5 * (med + lower);
  }
  return med > 0.0 ? med : 1.0;
}

Matrix centering_matrix(Index n) {
  Matrix g = Matrix::Constant(n, n, -1.0 / static_cast<double>(n));
  g.diagonal().array() += 1.0;
  return g;
}

GramCache::GramCache(const KernelSpec& spec, const Matrix& x)
    : spec_(spec), x_(x), k_(gram(spec, x)) {
  finish();
}

GramCache GramCache::from_matrix(const Matrix& k) {
  GramCache out;
  out.k_ = 0.5 * (k + k.transpose());
  if (k.rows() != k.cols() || (k - k.transpose()).norm() > 1e-10 * k.norm()) {
    throw DimensionError("GramCache::from_matrix needs a symmetric matrix");
  }
  out.finish();
  return out;
}

void GramCache::finish() {
  eig_ = sym_eig(k_);
  const Index n = k_.rows();
  row_means_ = n > 0 ? Vector(k_.colwise().mean().transpose()) : Vector(0);
}

const KernelSpec& GramCache::spec() const {
  if (!spec_) throw Error("GramCache was built from a bare matrix and has no kernel");
  return *spec_;
}

Matrix GramCache::centered_left() const {
  return k_.rowwise() - row_means_.transpose();
}

Matrix GramCache::double_centered() const {
  Matrix left = centered_left();
  const Vector col_means = left.rowwise().mean();
  return left.colwise() - col_means;
}

Matrix igp_covariance(const GramCache& gram, const Matrix& k_nu, double p) {
  const Index n = gram.n();
  if (k_nu.rows() != n || k_nu.cols() != n) {
    throw DimensionError("igp_covariance: K_nu must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  const Matrix kp = matrix_power(gram.eig(), p);
  Matrix out = std::pow(static_cast<double>(n), -2.0 * p) * (kp * k_nu * kp);
  return 0.5 * (out + out.transpose());
}

BridgeEigenpair brownian_bridge_eigensystem(int j, double x) {
  if (j < 1) throw DomainError("brownian_bridge_eigensystem: index must be >= 1");
  const double pi = std::numbers::pi;
  const double jd = static_cast<double>(j);
  return {1.0 / (pi * pi * jd * jd), std::numbers::sqrt2 * std::sin(jd * pi * x)};
}

}  // namespace sigp
