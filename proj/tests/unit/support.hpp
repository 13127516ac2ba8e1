#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace testing {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }
  Vector vector(Eigen::Index n) { return matrix(n, 1).col(0); }

  Matrix symmetric(Eigen::Index n) {
    const Matrix a = matrix(n, n);
    return 0.5 * (a + a.transpose());
  }

  // G G^T + shift I, well conditioned for moderate n.
  Matrix spd(Eigen::Index n, double shift = 0.5) {
    const Matrix g = matrix(n, n);
    Matrix a = g * g.transpose() / static_cast<double>(n);
    a.diagonal().array() += shift;
    return a;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

// log N(x | mu, cov) by an explicit dense inverse and determinant.
inline double dense_gaussian_logpdf(const Vector& x, const Vector& mu, const Matrix& cov) {
  const double n = static_cast<double>(x.size());
  const Vector r = x - mu;
  const Matrix inv = cov.inverse();
  return -0.5 * n * std::log(2.0 * 3.14159265358979323846) - 0.5 * std::log(cov.determinant()) -
         0.5 * r.dot(inv * r);
}

}  // namespace testing
