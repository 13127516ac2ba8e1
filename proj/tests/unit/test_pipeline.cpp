#include <doctest.h>

#include "sigp/errors.hpp"
#include "sigp/eval.hpp"
#include "sigp/pipeline.hpp"
#include "support.hpp"

using namespace sigp;

TEST_SUITE("pipeline") {
  TEST_CASE("task inference") {
    Vector r(4);
    r << 0.1, 0.2, 0.3, 0.4;
    CHECK(infer_task(r) == Task::regression);
    Vector b(4);
    b << 0, 1, 0, 1;
    CHECK(infer_task(b) == Task::binary);
    Vector m(6);
    m << 1, 2, 3, 3, 2, 1;
    CHECK(infer_task(m) == Task::multiclass);
  }

  TEST_CASE("regression training is deterministic and converges") {
    const Dataset ds = synth_sinusoid(60, default_sinusoid_ranges(), 0.01, 1);
    TrainOptions opt;
    opt.rank = 1;
    opt.seed = 4;
    TrainReport r1, r2;
    const SigpBundle a = train_sigp(ds, opt, &r1);
    const SigpBundle b = train_sigp(ds, opt, &r2);
    CHECK(serialize(a) == serialize(b));
    CHECK(r1.converged.at(0));
    CHECK(r1.cv.size() == opt.cv_multipliers.size());
    CHECK(r1.cv_metric == "nlpd");
    CHECK(r1.tau.size() >= 1);
    CHECK(r1.tau(0) < 1.0);
    CHECK(r1.rank_bound == doctest::Approx(rank_bound(60, 0.05)));
    CHECK(format_report(r1).find("rank_bound") != std::string::npos);

    const BundlePrediction p = predict_bundle(a, ds.X);
    CHECK(mse(p.dist.mean, ds.y) < 0.05);
    for (Index i = 0; i < ds.n(); ++i) CHECK(p.dist.variance(i) >= a.heads[0].sigma2 - 1e-10);
  }

  TEST_CASE("response-kernel SDR") {
    const Dataset ds = synth_sinusoid(50, default_sinusoid_ranges(), 0.01, 2);
    TrainOptions opt;
    opt.lengthscale = 1.0;
    opt.sdr = SdrMethod::response_kernel;
    TrainReport rep;
    const SigpBundle b = train_sigp(ds, opt, &rep);
    CHECK(rep.sdr == SdrMethod::response_kernel);
    CHECK(rep.zeta1 > 0.0);
    CHECK(mse(predict_bundle(b, ds.X).dist.mean, ds.y) < 0.05);
  }

  TEST_CASE("binary classification keeps the original labels") {
    testing::Random rng(3);
    Dataset ds;
    ds.X = rng.matrix(60, 2);
    ds.y = Vector(60);
    for (Index i = 0; i < 60; ++i) {
      ds.y(i) = i % 2 == 0 ? 5.0 : 7.0;
      ds.X(i, 0) += ds.y(i) == 7.0 ? 2.0 : -2.0;
    }
    ds.label_kind = LabelKind::binary;
    TrainOptions opt;
    TrainReport rep;
    const SigpBundle b = train_sigp(ds, opt, &rep);
    CHECK(b.task == Task::binary);
    CHECK(rep.cv_metric == "f1");
    CHECK(b.labels == std::vector<double>{5.0, 7.0});
    const BundlePrediction p = predict_bundle(b, ds.X);
    CHECK(accuracy(p.labels, ds.y) >= 0.95);
  }

  TEST_CASE("multiclass uses one head per class") {
    const Dataset ds = synth_four_class(20, 1);
    TrainOptions opt;
    opt.rank = 2;
    opt.standardize = false;
    TrainReport rep;
    const SigpBundle b = train_sigp(ds, opt, &rep);
    CHECK(b.task == Task::multiclass);
    CHECK(b.heads.size() == 4);
    CHECK(rep.cv_metric == "accuracy");
    const BundlePrediction p = predict_bundle(b, ds.X);
    CHECK(p.scores.cols() == 4);
    CHECK(accuracy(p.labels, ds.y) == 1.0);
  }

  TEST_CASE("rank beyond the data is reported") {
    const Dataset ds = synth_sinusoid(12, default_sinusoid_ranges(), 0.01, 3);
    TrainOptions opt;
    opt.lengthscale = 1.0;
    opt.rank = 12;
    opt.slices = 3;
    CHECK_THROWS_AS(train_sigp(ds, opt), RankError);
  }

  TEST_CASE("exact GP baseline") {
    const Dataset ds = synth_sinusoid(60, default_sinusoid_ranges(), 0.01, 5);
    const GpBundle g = train_gp(ds, {});
    const PredictiveDistribution d = predict_gp_bundle(g, ds.X);
    CHECK(mse(d.mean, ds.y) < 0.05);
  }

  TEST_CASE("bench rows") {
    const auto rows = bench_em({60}, 2, 3, 0);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 60);
    CHECK(rows[0].m == 2);
    CHECK(rows[0].iterations == 3);
    CHECK(rows[0].seconds_per_iteration > 0.0);
  }
}
