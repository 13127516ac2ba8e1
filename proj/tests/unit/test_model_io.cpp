#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sigp/errors.hpp"
#include "sigp/model_io.hpp"
#include "sigp/pipeline.hpp"
#include "support.hpp"

using namespace sigp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sigp_unit_model_io";
  fs::create_directories(dir);
  return dir / name;
}

void check_same(const SigpModel& a, const SigpModel& b) {
  CHECK(a.kernel.family == b.kernel.family);
  CHECK(a.kernel.lengthscale == b.kernel.lengthscale);
  CHECK(a.kernel.variance_scale == b.kernel.variance_scale);
  CHECK(a.x_train == b.x_train);
  CHECK(a.W == b.W);
  CHECK(a.sigma_beta == b.sigma_beta);
  CHECK(a.sigma2 == b.sigma2);
  CHECK(a.alpha == b.alpha);
  CHECK(a.c == b.c);
  CHECK(a.train_k_row_means == b.train_k_row_means);
  CHECK(a.beta == b.beta);
  CHECK(a.delta == b.delta);
}

SigpBundle small_bundle() {
  const Dataset ds = synth_sinusoid(40, default_sinusoid_ranges(), 0.01, 7);
  TrainOptions opt;
  opt.lengthscale = 0.9;
  opt.rank = 2;
  return train_sigp(ds, opt);
}

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("sigp bundle round trip is bitwise") {
    const SigpBundle b = small_bundle();
    const std::string text = serialize(b);
    const SigpBundle back = deserialize_sigp(text);
    CHECK(back.task == b.task);
    REQUIRE(back.heads.size() == 1);
    check_same(back.heads[0], b.heads[0]);
    REQUIRE(back.standardizer.has_value());
    CHECK(back.standardizer->means == b.standardizer->means);
    CHECK(back.standardizer->stds == b.standardizer->stds);
    CHECK(back.tau == b.tau);
    CHECK(serialize(back) == text);

    const Matrix z = Vector::LinSpaced(9, -5.0, 5.0);
    const BundlePrediction p = predict_bundle(b, z);
    const BundlePrediction q = predict_bundle(back, z);
    CHECK(p.dist.mean == q.dist.mean);
    CHECK(p.dist.variance == q.dist.variance);
  }

  TEST_CASE("files and format tags") {
    const SigpBundle b = small_bundle();
    const fs::path path = scratch("m.json");
    save_model(path, b);
    CHECK(model_format(path) == "sigp-model");
    check_same(load_sigp_model(path).heads[0], b.heads[0]);
    CHECK_THROWS_AS(load_gp_model(path), DataError);

    const Dataset ds = synth_sinusoid(30, default_sinusoid_ranges(), 0.01, 8);
    TrainOptions opt;
    opt.lengthscale = 1.0;
    const GpBundle g = train_gp(ds, opt);
    const fs::path gpath = scratch("g.json");
    save_model(gpath, g);
    CHECK(model_format(gpath) == "exact-gp-model");
    const GpBundle gb = load_gp_model(gpath);
    CHECK(gb.model.dual_weights == g.model.dual_weights);
    CHECK(gb.model.noise2 == g.model.noise2);
    CHECK(gb.model.mean_coef == g.model.mean_coef);
    CHECK_THROWS_AS(load_sigp_model(gpath), DataError);
  }

  TEST_CASE("malformed files are rejected") {
    CHECK_THROWS_AS(deserialize_sigp("not json"), DataError);
    CHECK_THROWS_AS(deserialize_sigp("{}"), DataError);
    const std::string good = serialize(small_bundle());

    std::string wrong_version = good;
    const std::string tag = "\"format_version\":1";
    const auto pos = wrong_version.find(tag);
    REQUIRE(pos != std::string::npos);
    wrong_version.replace(pos, tag.size(), "\"format_version\":99");
    CHECK_THROWS_AS(deserialize_sigp(wrong_version), DataError);

    std::string truncated = good.substr(0, good.size() / 2);
    CHECK_THROWS_AS(deserialize_sigp(truncated), DataError);
    CHECK_THROWS_AS(load_sigp_model(scratch("missing.json")), DataError);
  }

  TEST_CASE("task names") {
    for (Task t : {Task::regression, Task::binary, Task::multiclass}) CHECK(task_from_string(to_string(t)) == t);
    CHECK_THROWS(task_from_string("ranking"));
  }
}
