#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sigp/errors.hpp"
#include "sigp/sigp.hpp"
#include "support.hpp"

using namespace sigp;
using testing::Random;
using testing::rel_err;

namespace {

// Dense reference for one EM sweep: explicit V^{-1}, L and Delta, no Woodbury.
struct DenseSweep {
  Vector alpha;
  double c;
  Matrix delta;
  Vector beta;
  Matrix sigma_beta;
  double sigma2;
};

DenseSweep dense_sweep(const Matrix& pi, const Matrix& wkw, const Vector& y, const EmState& s, double xi) {
  const Index n = pi.rows();
  const Vector one = Vector::Ones(n);
  Matrix v = pi * s.sigma_beta * pi.transpose();
  v.diagonal().array() += s.sigma2;
  const Matrix vinv = v.inverse();
  const double s1 = one.dot(vinv * one);
  const Matrix l = Matrix::Identity(n, n) - one * (one.transpose() * vinv) / s1;
  const Matrix a = pi.transpose() * vinv * l * pi + static_cast<double>(n) * xi * wkw;
  DenseSweep out;
  out.alpha = a.inverse() * (pi.transpose() * vinv * l * y);
  out.c = (y - pi * out.alpha).dot(vinv * one) / s1;
  out.delta = (s.sigma_beta.inverse() + pi.transpose() * pi / s.sigma2).inverse();
  const Vector r = (y - pi * out.alpha).array() - out.c;
  out.beta = out.delta * pi.transpose() * r / s.sigma2;
  out.sigma_beta = out.beta * out.beta.transpose() + out.delta;
  out.sigma2 = s.sigma2 + ((r - pi * out.beta).squaredNorm() - s.sigma2 * s.sigma2 * vinv.trace()) / n;
  return out;
}

struct Problem {
  GramCache gram;
  Vector y;
  SdrBasis basis;
};

Problem random_problem(Random& rng, Index n, Index m, double noise = 0.1) {
  const Matrix x = rng.matrix(n, 2);
  GramCache g(KernelSpec::rbf(1.2), x);
  Vector y = (x.col(0).array().sin() + 0.5 * x.col(1).array()).matrix() + noise * rng.vector(n);
  SdrBasis b;
  b.W = rng.matrix(n, m) / std::sqrt(static_cast<double>(n));
  return {std::move(g), std::move(y), std::move(b)};
}

EmState random_state(Random& rng, Index m) {
  EmState s;
  s.sigma_beta = rng.spd(m, 0.3);
  s.sigma2 = rng.uniform(0.05, 0.5);
  s.alpha = rng.vector(m);
  s.c = rng.normal();
  return s;
}

}  // namespace

TEST_SUITE("sigp") {
  TEST_CASE("projection examples") {
    Random rng(1);
    const Matrix x = rng.matrix(3, 1);
    const GramCache g(KernelSpec::rbf(1.0), x);
    const Matrix p = projection(g, Matrix::Identity(3, 3), x);
    CHECK(rel_err(p, centering_matrix(3) * g.K()) < 1e-14);
    CHECK(projection(g, Matrix::Zero(3, 2), x).norm() == 0.0);

    Matrix z(2, 1);
    z << 0.3, -1.2;
    Matrix w(3, 1);
    w << 0.5, -1.0, 2.0;
    const Matrix got = projection(g, w, z);
    for (Index t = 0; t < 2; ++t) {
      double expect = 0.0;
      for (Index j = 0; j < 3; ++j) {
        double colmean = 0.0;
        for (Index i = 0; i < 3; ++i) colmean += std::exp(-0.5 * std::pow(x(i, 0) - x(j, 0), 2)) / 3.0;
        expect += (std::exp(-0.5 * std::pow(z(t, 0) - x(j, 0), 2)) - colmean) * w(j, 0);
      }
      CHECK(got(t, 0) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(projection(g, w, Matrix::Zero(2, 2)), DimensionError);
  }

  TEST_CASE("prior log density") {
    const GramCache id = GramCache::from_matrix(Matrix::Identity(2, 2));
    Vector f(2);
    f << 1.0, 0.0;
    const double expect = -std::log(2.0 * std::numbers::pi) + std::log(4.0) - 2.0;
    CHECK(sigp_prior_log_density(id, Matrix::Identity(2, 2), 1.0, f) == doctest::Approx(expect));

    Random rng(2);
    const GramCache g = GramCache::from_matrix(rng.spd(4));
    const Matrix knu = rng.spd(4);
    const Matrix cov = igp_covariance(g, knu, 0.75);
    const Vector zero = Vector::Zero(4);
    CHECK(sigp_prior_log_density(g, knu, 0.75, zero) ==
          doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant())));
    const Vector v = rng.vector(4);
    CHECK(sigp_prior_log_density(g, knu, 0.75, v) ==
          doctest::Approx(testing::dense_gaussian_logpdf(v, zero, cov)).epsilon(1e-10));

    CHECK_THROWS_AS(sigp_prior_log_density(GramCache::from_matrix(Matrix::Zero(3, 3)), Matrix::Identity(3, 3), 1.0,
                                           Vector::Ones(3)),
                    SingularityError);
  }

  TEST_CASE("one EM sweep against the dense reference") {
    Random rng(3);
    SUBCASE("n = 3, m = 1") {
      const Matrix pi = rng.matrix(3, 1);
      Matrix wkw(1, 1);
      wkw(0, 0) = 0.7;
      const Vector y = rng.vector(3);
      EmState s;
      s.sigma_beta = Matrix::Constant(1, 1, 0.8);
      s.sigma2 = 0.3;
      s.alpha = Vector::Constant(1, 0.2);
      s.c = 0.1;
      // scalar arithmetic throughout
      const double p0 = pi(0, 0), p1 = pi(1, 0), p2 = pi(2, 0);
      const double pp = p0 * p0 + p1 * p1 + p2 * p2;
      const double sb = 0.8, s2 = 0.3, xi = 0.5;
      const double k = sb / (s2 + sb * pp);  // V^{-1} = (I - k p p^T) / s2
      const double p[3] = {p0, p1, p2};
      double vinv[3][3];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) vinv[i][j] = ((i == j ? 1.0 : 0.0) - k * p[i] * p[j]) / s2;
      double v1[3] = {0, 0, 0}, s1 = 0.0, tr = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) v1[i] += vinv[i][j];
        s1 += v1[i];
        tr += vinv[i][i];
      }
      // V^{-1} L x = V^{-1} x - v1 (v1 . x) / s1
      const auto vl = [&](const double* x, double* out) {
        double d = 0.0;
        for (int i = 0; i < 3; ++i) d += v1[i] * x[i];
        for (int i = 0; i < 3; ++i) {
          out[i] = -v1[i] * d / s1;
          for (int j = 0; j < 3; ++j) out[i] += vinv[i][j] * x[j];
        }
      };
      const double yy[3] = {y(0), y(1), y(2)};
      double vlp[3], vly[3];
      vl(p, vlp);
      vl(yy, vly);
      double a = 3.0 * xi * 0.7, b = 0.0;
      for (int i = 0; i < 3; ++i) {
        a += p[i] * vlp[i];
        b += p[i] * vly[i];
      }
      const double alpha = b / a;
      double c = 0.0;
      for (int i = 0; i < 3; ++i) c += (yy[i] - p[i] * alpha) * v1[i];
      c /= s1;
      const double delta = 1.0 / (1.0 / sb + pp / s2);
      double pr = 0.0;
      double r[3];
      for (int i = 0; i < 3; ++i) {
        r[i] = yy[i] - p[i] * alpha - c;
        pr += p[i] * r[i];
      }
      const double beta = delta * pr / s2;
      double eps2 = 0.0;
      for (int i = 0; i < 3; ++i) eps2 += (r[i] - p[i] * beta) * (r[i] - p[i] * beta);
      const double s2_new = s2 + (eps2 - s2 * s2 * tr) / 3.0;

      for (bool dense : {true, false}) {
        const EmSweep e = em_sweep(pi, wkw, y, s, xi, dense);
        CHECK(e.alpha(0) == doctest::Approx(alpha).epsilon(1e-10));
        CHECK(e.c == doctest::Approx(c).epsilon(1e-10));
        CHECK(e.delta(0, 0) == doctest::Approx(delta).epsilon(1e-10));
        CHECK(e.beta(0) == doctest::Approx(beta).epsilon(1e-10));
        CHECK(e.trace_v_inverse == doctest::Approx(tr).epsilon(1e-10));
        CHECK(e.next.sigma_beta(0, 0) == doctest::Approx(beta * beta + delta).epsilon(1e-10));
        CHECK(e.next.sigma2 == doctest::Approx(s2_new).epsilon(1e-10));
      }
    }
    SUBCASE("random n = 15, m = 3") {
      for (int trial = 0; trial < 10; ++trial) {
        const Matrix pi = rng.matrix(15, 3);
        const Matrix wkw = rng.spd(3);
        const Vector y = rng.vector(15);
        const EmState s = random_state(rng, 3);
        const DenseSweep d = dense_sweep(pi, wkw, y, s, 1e-2);
        const EmSweep e = em_sweep(pi, wkw, y, s, 1e-2);
        CHECK(rel_err(e.alpha, d.alpha) < 1e-8);
        CHECK(e.c == doctest::Approx(d.c).epsilon(1e-8));
        CHECK(rel_err(e.delta, d.delta) < 1e-8);
        CHECK(rel_err(e.beta, d.beta) < 1e-8);
        CHECK(rel_err(e.next.sigma_beta, d.sigma_beta) < 1e-8);
        CHECK(e.next.sigma2 == doctest::Approx(d.sigma2).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("em_sweep argument checks") {
    const Matrix pi = Matrix::Ones(4, 1);
    EmState s;
    s.sigma_beta = Matrix::Identity(1, 1);
    s.alpha = Vector::Zero(1);
    CHECK_THROWS_AS(em_sweep(pi, Matrix::Identity(1, 1), Vector::Zero(3), s, 1e-4), DimensionError);
    CHECK_THROWS_AS(em_sweep(pi, Matrix::Identity(1, 1), Vector::Zero(4), s, 0.0), DomainError);
    s.sigma2 = -1.0;
    CHECK_THROWS_AS(em_sweep(pi, Matrix::Identity(1, 1), Vector::Zero(4), s, 1e-4), DomainError);
  }

  TEST_CASE("marginal likelihood against a dense Gaussian") {
    Random rng(4);
    Problem pr = random_problem(rng, 10, 2);
    const EmResult fit = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 3});
    const SigpModel& m = fit.model;
    const Matrix pi = training_projection(pr.gram, m.W);
    Matrix v = pi * m.sigma_beta * pi.transpose();
    v.diagonal().array() += m.sigma2;
    const Vector mu = (pi * m.alpha).array() + m.c;
    CHECK(marginal_loglik(m, pr.gram, pr.y) ==
          doctest::Approx(testing::dense_gaussian_logpdf(pr.y, mu, v)).epsilon(1e-10));

    SigpModel flat = m;
    flat.W.setZero();
    const Vector c1 = Vector::Constant(10, flat.c);
    CHECK(marginal_loglik(flat, pr.gram, pr.y) ==
          doctest::Approx(testing::dense_gaussian_logpdf(pr.y, c1, flat.sigma2 * Matrix::Identity(10, 10))));
  }

  TEST_CASE("posterior of beta") {
    Random rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      Problem pr = random_problem(rng, 8, 2);
      SigpModel m = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 2}).model;
      const Matrix pi = training_projection(pr.gram, m.W);
      const PosteriorBeta post = posterior_beta(m, pr.gram, pr.y);
      const Matrix delta = (m.sigma_beta.inverse() + pi.transpose() * pi / m.sigma2).inverse();
      CHECK((post.cov - delta).norm() <= 1e-9 * delta.norm());
      CHECK((m.delta - delta).norm() <= 1e-9 * delta.norm());
      const Vector r = (pr.y - pi * m.alpha).array() - m.c;
      const Vector beta_opt = delta * pi.transpose() * r / m.sigma2;
      CHECK((post.mean - beta_opt).norm() <= 1e-9 * std::max(1.0, beta_opt.norm()));
      CHECK((m.beta - beta_opt).norm() <= 1e-9 * std::max(1.0, beta_opt.norm()));

      // y = u(X): zero mean
      const Vector u = (pi * m.alpha).array() + m.c;
      CHECK(posterior_beta(m, pr.gram, u).mean.norm() < 1e-10);

      SigpModel tiny = m;
      tiny.sigma_beta *= 1e-12;
      CHECK(posterior_beta(tiny, pr.gram, pr.y).mean.norm() < 1e-8);
    }
  }

  TEST_CASE("predictive variance: all forms agree") {
    Random rng(6);
    for (int trial = 0; trial < 10; ++trial) {
      Problem pr = random_problem(rng, 12, 2);
      const SigpModel m = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 5}).model;
      const Matrix z = rng.matrix(3, 2);
      const Matrix pt = projection(m, z);
      const Matrix px = training_projection(pr.gram, m.W);
      const Matrix stt = pt * m.sigma_beta * pt.transpose();
      const Matrix stx = pt * m.sigma_beta * px.transpose();
      Matrix v = px * m.sigma_beta * px.transpose();
      v.diagonal().array() += m.sigma2;
      const Matrix id = Matrix::Identity(3, 3);

      const Matrix f1 = stt - stx * v.inverse() * stx.transpose() + m.sigma2 * id;
      const Matrix f2 =
          pt * (m.sigma_beta - m.sigma_beta * px.transpose() * v.inverse() * px * m.sigma_beta) * pt.transpose() +
          m.sigma2 * id;
      const Matrix delta = (m.sigma_beta.inverse() + px.transpose() * px / m.sigma2).inverse();
      const Matrix f3 = pt * delta * pt.transpose() + m.sigma2 * id;
      const PredictiveDistribution f4 = predict(m, z);

      CHECK(rel_err(f2, f1) < 1e-8);
      CHECK(rel_err(f3, f1) < 1e-8);
      CHECK(rel_err(f4.variance, f1.diagonal()) < 1e-8);
      for (Index i = 0; i < 3; ++i) CHECK(f4.variance(i) >= m.sigma2 - 1e-10);

      // predictive mean = u(z) + Pi(z) beta with beta from the dense posterior
      const Vector r = (pr.y - px * m.alpha).array() - m.c;
      const Vector mean = (pt * m.alpha).array() + m.c + (stx * v.inverse() * r).array();
      CHECK(rel_err(f4.mean, mean) < 1e-8);
    }
  }

  TEST_CASE("predict with a forced zero Delta") {
    Random rng(7);
    Problem pr = random_problem(rng, 10, 2);
    SigpModel m = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 3}).model;
    m.delta.setZero();
    const PredictiveDistribution d = predict(m, rng.matrix(5, 2));
    for (Index i = 0; i < 5; ++i) CHECK(d.variance(i) == doctest::Approx(m.sigma2));
    CHECK_THROWS_AS(predict(m, Matrix::Zero(2, 3)), DimensionError);
  }

  TEST_CASE("predictions are invariant to a change of basis") {
    Random rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      Problem pr = random_problem(rng, 15, 2);
      const SigpModel m = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 10}).model;
      const Matrix r = rng.matrix(2, 2) + 2.0 * Matrix::Identity(2, 2);
      const Matrix ri = r.inverse();
      SigpModel t = m;
      t.W = m.W * r;
      t.sigma_beta = ri * m.sigma_beta * ri.transpose();
      t.alpha = ri * m.alpha;
      t = with_posterior(t, pr.gram, pr.y);
      const Matrix z = rng.matrix(6, 2);
      const PredictiveDistribution a = predict(m, z);
      const PredictiveDistribution b = predict(t, z);
      CHECK(rel_err(b.mean, a.mean) < 1e-8);
      CHECK(rel_err(b.variance, a.variance) < 1e-8);
      CHECK(marginal_loglik(t, pr.gram, pr.y) == doctest::Approx(marginal_loglik(m, pr.gram, pr.y)).epsilon(1e-10));
    }
  }

  TEST_CASE("EM log-likelihood is non-decreasing") {
    Random rng(9);
    int guarded = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const Index n = rng.integer(10, 40);
      const Index m = rng.integer(1, 3);
      Problem pr = random_problem(rng, n, m, rng.uniform(0.01, 0.5));
      const EmResult fit = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 100});
      const auto& ll = fit.trace.loglik;
      CHECK(ll.size() == static_cast<std::size_t>(fit.trace.iterations) + 1);
      CHECK(fit.trace.joint_loglik.size() == ll.size());
      for (std::size_t i = 1; i < ll.size(); ++i) CHECK(ll[i] >= ll[i - 1] - 1e-8);
      CHECK(ll.back() == doctest::Approx(marginal_loglik(fit.model, pr.gram, pr.y)).epsilon(1e-12));
      CHECK_NOTHROW(fit.model.validate());
      guarded += static_cast<int>(fit.trace.notes.size());
    }
    MESSAGE("guard notes over 50 fits: " << guarded);
  }

  TEST_CASE("dense and operator V inverse give the same iterates") {
    Random rng(10);
    Problem pr = random_problem(rng, 30, 2);
    const EmResult a = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 20, .dense_v_inverse = true});
    const EmResult b = em_fit(pr.gram, pr.y, pr.basis, {.max_iter = 20, .dense_v_inverse = false});
    REQUIRE(a.trace.loglik.size() == b.trace.loglik.size());
    for (std::size_t i = 0; i < a.trace.loglik.size(); ++i)
      CHECK(a.trace.loglik[i] == doctest::Approx(b.trace.loglik[i]).epsilon(1e-9));
    CHECK(rel_err(a.model.sigma_beta, b.model.sigma_beta) < 1e-6);
    CHECK(a.model.sigma2 == doctest::Approx(b.model.sigma2).epsilon(1e-6));
  }

  TEST_CASE("constant response") {
    Random rng(11);
    Problem pr = random_problem(rng, 20, 2);
    const Vector y = Vector::Constant(20, 3.5);
    const EmResult fit = em_fit(pr.gram, y, pr.basis, {.max_iter = 500});
    CHECK(fit.model.beta.norm() < 1e-6);
    CHECK(fit.model.c + (training_projection(pr.gram, fit.model.W) * fit.model.alpha).mean() ==
          doctest::Approx(3.5).epsilon(1e-6));
    CHECK(fit.model.sigma2 < 1e-3);
  }

  TEST_CASE("noiseless fit reproduces the training responses") {
    Random rng(12);
    const Index n = 40;
    const Matrix x = rng.matrix(n, 1);
    const GramCache g(KernelSpec::rbf(1.0), x);
    SdrBasis b;
    b.W = Matrix::Zero(n, 1);
    b.W.col(0) = rng.vector(n);
    const Vector y = training_projection(g, b.W).col(0) * 2.0;
    const EmResult fit = em_fit(g, y, b, {.max_iter = 500});
    const PredictiveDistribution d = predict(fit.model, x);
    CHECK((d.mean - y).norm() <= 1e-3 * y.norm());
  }

  TEST_CASE("one-vs-rest") {
    Random rng(13);
    const Index n = 30;
    Matrix x = rng.matrix(n, 2) * 0.2;
    Vector labels(n);
    for (Index i = 0; i < n; ++i) {
      labels(i) = static_cast<double>(i % 3);
      x(i, 0) += labels(i) * 2.0;
    }
    const GramCache g(KernelSpec::rbf(1.0), x);
    SdrBasis b;
    b.W = training_projection(g, Matrix::Identity(n, n)).leftCols(2);
    const OneVsRestResult r = fit_one_vs_rest(g, labels, b, {.max_iter = 50});
    CHECK(r.model.labels == std::vector<double>{0.0, 1.0, 2.0});
    CHECK(r.traces.size() == 3);
    CHECK(one_vs_rest_scores(r.model, x).cols() == 3);
    const Vector pred = one_vs_rest_predict(r.model, x);
    CHECK((pred - labels).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(fit_one_vs_rest(g, Vector::Zero(n), b), DomainError);
  }
}
