#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sigp/data_io.hpp"
#include "sigp/errors.hpp"
#include "support.hpp"

using namespace sigp;
namespace fs = std::filesystem;

namespace {

Dataset parse(const std::string& text, const CsvOptions& opt = {}) {
  std::istringstream in(text);
  return parse_csv(in, opt);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sigp_unit_data_io";
  fs::create_directories(dir);
  return dir / name;
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_SUITE("data_io") {
  TEST_CASE("parse small files") {
    const Dataset a = parse("1,2,3\n4,5,6\n7,8,9\n", {.header = false});
    CHECK(a.n() == 3);
    CHECK(a.dim() == 2);
    CHECK(a.y(2) == 9.0);
    CHECK(a.X(1, 0) == 4.0);

    const Dataset b = parse("a,b,target\n1,2,3\n\n4,5,6\n");
    CHECK(b.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(b.label_name == "target");
    CHECK(b.y(1) == 6.0);

    const Dataset c = parse("a,b\n1,2\n3,4\n", {.label_column = -2});
    CHECK(c.dim() == 2);
    CHECK(c.y.size() == 0);

    const Dataset d = parse("y,x\n1,2\n3,4\n", {.label_column = 0});
    CHECK(d.y(1) == 3.0);
    CHECK(d.X(1, 0) == 4.0);

    const Dataset e = parse("\xEF\xBB\xBFx;y\n1.5e-3;-2\n", {.delimiter = ';'});
    CHECK(e.feature_names[0] == "x");
    CHECK(e.X(0, 0) == 1.5e-3);
  }

  TEST_CASE("parse errors carry the line number") {
    CHECK(error_line("a,b\n1,2\n3,x\n") == 3);
    CHECK(error_line("a,b\n1,2\n3\n") == 3);
    CHECK(error_line("a,b\n1,nan\n") == 2);
    CHECK(error_line("a,b\n1,inf\n") == 2);
    CHECK_THROWS_AS(parse(""), DataError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
  }

  TEST_CASE("housing data") {
    const Dataset h = load_csv(fs::path(SIGP_DATA_DIR) / "housing.csv");
    CHECK(h.n() == 506);
    CHECK(h.dim() == 13);
    CHECK(h.label_kind == LabelKind::real);
    const auto [train, test] = split(h, 106, 0);
    CHECK(test.n() == 106);
    CHECK(train.n() == 400);
  }

  TEST_CASE("save then load is the identity") {
    testing::Random rng(1);
    Dataset ds;
    ds.X = rng.matrix(7, 3) * 1e3;
    ds.X(0, 0) = 1.0 / 3.0;
    ds.X(1, 1) = 1e-300;
    ds.y = rng.vector(7);
    ds.feature_names = {"p", "q", "r"};
    ds.label_name = "t";
    const fs::path path = scratch("roundtrip.csv");
    save_csv(path, ds);
    const Dataset back = load_csv(path);
    CHECK(back.X == ds.X);
    CHECK(back.y == ds.y);
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.label_name == "t");
    CHECK(!fs::exists(path.string() + ".tmp"));
    CHECK(format_real(0.1) == "0.10000000000000001");
  }

  TEST_CASE("standardization") {
    testing::Random rng(2);
    Matrix x = rng.matrix(50, 4) * 5.0;
    x.col(2).setConstant(7.0);
    const Standardizer s = Standardizer::fit(x);
    CHECK(s.kept == std::vector<Index>{0, 1, 3});
    const Matrix z = s.apply(x);
    CHECK(z.cols() == 3);
    for (Index j = 0; j < 3; ++j) {
      const double mean = z.col(j).mean();
      const double sd = std::sqrt((z.col(j).array() - mean).square().sum() / 49.0);
      CHECK(std::abs(mean) <= 1e-10);
      CHECK(std::abs(sd - 1.0) <= 1e-10);
    }
    Dataset ds;
    ds.X = x;
    ds.y = Vector::Zero(50);
    ds.feature_names = {"a", "b", "c", "d"};
    const Dataset t = standardize(ds, s);
    CHECK(t.feature_names == std::vector<std::string>{"a", "b", "d"});
    CHECK(!t.notes.empty());
    CHECK_THROWS_AS(Standardizer::fit(x.topRows(1)), DomainError);
    CHECK_THROWS_AS(s.apply(x.leftCols(3)), DimensionError);
  }

  TEST_CASE("label kinds") {
    Vector r(4);
    r << 0.5, 1.0, 2.0, 3.0;
    CHECK(detect_label_kind(r) == LabelKind::real);
    Vector b(4);
    b << 0, 1, 1, 0;
    CHECK(detect_label_kind(b) == LabelKind::binary);
    Vector m(6);
    m << 1, 2, 3, 1, 2, 3;
    CHECK(detect_label_kind(m) == LabelKind::multiclass);
    Vector u(3);
    u << 1, 2, 3;
    CHECK(detect_label_kind(u) == LabelKind::real);
    const Vector pm = to_plus_minus_one(b);
    CHECK(pm(0) == -1.0);
    CHECK(pm(1) == 1.0);
    CHECK(distinct_values(m) == std::vector<double>{1, 2, 3});
  }

  TEST_CASE("rng is reproducible and in range") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
      const double x = a.uniform();
      CHECK(x == b.uniform());
      differs = differs || x != c.uniform();
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
      const std::uint64_t k = a.below(7);
      CHECK(k == b.below(7));
      CHECK(k < 7);
      CHECK(a.normal() == b.normal());
      c.below(7);
      c.normal();
    }
    CHECK(differs);
    Rng d(5);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double z = d.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / 20000.0) < 0.05);
    CHECK(std::abs(sq / 20000.0 - 1.0) < 0.05);
  }

  TEST_CASE("split") {
    Dataset ds;
    ds.X = Matrix(20, 1);
    ds.y = Vector(20);
    for (Index i = 0; i < 20; ++i) ds.X(i, 0) = ds.y(i) = static_cast<double>(i);
    const auto [tr1, te1] = split(ds, 5, 9);
    const auto [tr2, te2] = split(ds, 5, 9);
    CHECK(te1.y == te2.y);
    CHECK(tr1.y == tr2.y);
    std::set<double> all;
    for (Index i = 0; i < 5; ++i) all.insert(te1.y(i));
    for (Index i = 0; i < 15; ++i) all.insert(tr1.y(i));
    CHECK(all.size() == 20);
    CHECK(std::is_sorted(te1.y.data(), te1.y.data() + 5));
    const auto [tr0, te0] = split(ds, 0, 1);
    CHECK(te0.n() == 0);
    CHECK(tr0.n() == 20);
    CHECK_THROWS_AS(split(ds, 20, 1), DomainError);
  }

  TEST_CASE("sinusoid generator") {
    const Dataset clean = synth_sinusoid(50, default_sinusoid_ranges(), 0.0, 1);
    for (Index i = 0; i < 50; ++i) {
      CHECK(clean.y(i) == std::sin(clean.X(i, 0)));
      const double x = clean.X(i, 0);
      CHECK(((x >= -4.0 && x < -1.0) || (x >= 1.0 && x < 4.0)));
    }
    const Dataset noisy = synth_sinusoid(2000, default_sinusoid_ranges(), 0.01, 2);
    const Vector resid = noisy.y - noisy.X.col(0).array().sin().matrix();
    const double var = (resid.array() - resid.mean()).square().sum() / 1999.0;
    const double se = 0.01 * std::sqrt(2.0 / 1999.0);
    CHECK(std::abs(var - 0.01) <= 3.0 * se);
    CHECK_THROWS_AS(synth_sinusoid(10, {}, 0.01, 1), DomainError);
    CHECK_THROWS_AS(synth_sinusoid(10, default_sinusoid_ranges(), -1.0, 1), DomainError);
  }

  TEST_CASE("four-class generator") {
    const Dataset one = synth_four_class(1, 0);
    CHECK(one.n() == 4);
    CHECK(distinct_values(one.y) == std::vector<double>{1, 2, 3, 4});
    const Dataset ds = synth_four_class(25, 3);
    CHECK(ds.label_kind == LabelKind::multiclass);
    for (double label : {1.0, 2.0, 3.0, 4.0}) CHECK((ds.y.array() == label).count() == 25);
    for (Index i = 0; i < ds.n(); ++i) {
      const double sx = ds.X(i, 0) * ds.X(i, 1);
      if (ds.y(i) <= 2.0) CHECK(sx > 0.0);
      else CHECK(sx < 0.0);
    }
  }
}
