#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>

#include "sigp/errors.hpp"
#include "sigp/eval.hpp"
#include "sigp/pipeline.hpp"

namespace py = pybind11;
using namespace sigp;

namespace {

struct PyModel {
  SigpBundle bundle;
  std::string report;
};

Dataset make_dataset(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw DimensionError("X and y have different numbers of rows");
  Dataset ds;
  ds.X = x;
  ds.y = y;
  for (Index j = 0; j < x.cols(); ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
  ds.label_kind = detect_label_kind(y);
  return ds;
}

std::pair<Matrix, Vector> as_arrays(const Dataset& ds) { return {ds.X, ds.y}; }

TrainOptions make_options(const std::string& kernel, std::optional<double> lengthscale, Index rank,
                          const std::string& sdr, std::optional<Index> slices, std::optional<double> zeta,
                          std::optional<double> zeta1, std::optional<std::string> task, bool standardize,
                          std::uint64_t seed, int max_iter, double tol, int cv_folds, bool dense_v_inverse) {
  TrainOptions o;
  o.kernel = kernel_family_from_string(kernel);
  o.lengthscale = lengthscale;
  o.rank = rank;
  o.sdr = sdr_method_from_string(sdr);
  o.slices = slices;
  o.zeta = zeta;
  o.zeta1 = zeta1;
  if (task) o.task = task_from_string(*task);
  o.standardize = standardize;
  o.seed = seed;
  o.em.max_iter = max_iter;
  o.em.tol = tol;
  o.em.dense_v_inverse = dense_v_inverse;
  o.cv_folds = cv_folds;
  return o;
}

const SigpModel& head(const PyModel& m, std::size_t i) {
  if (i >= m.bundle.heads.size()) throw py::index_error("head index out of range");
  return m.bundle.heads[i];
}

}  // namespace

PYBIND11_MODULE(_sigp, m) {
  m.doc() = "Inverse Gaussian process regression on a supervised low-rank basis.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error);
  py::register_exception<DomainError>(m, "DomainError", error);
  py::register_exception<SingularityError>(m, "SingularityError", error);
  py::register_exception<RankError>(m, "RankError", error);
  py::register_exception<DataError>(m, "DataError", error);

  py::class_<KernelSpec>(m, "KernelSpec")
      .def(py::init([](const std::string& family, double lengthscale, double variance_scale) {
             KernelSpec k{kernel_family_from_string(family), lengthscale, variance_scale};
             k.validate();
             return k;
           }),
           py::arg("family") = "rbf", py::arg("lengthscale") = 1.0, py::arg("variance_scale") = 1.0)
      .def_property_readonly("family", [](const KernelSpec& k) { return std::string(to_string(k.family)); })
      .def_readonly("lengthscale", &KernelSpec::lengthscale)
      .def_readonly("variance_scale", &KernelSpec::variance_scale)
      .def("__repr__", [](const KernelSpec& k) {
        return "KernelSpec(family='" + std::string(to_string(k.family)) +
               "', lengthscale=" + format_real(k.lengthscale) +
               ", variance_scale=" + format_real(k.variance_scale) + ")";
      });

  m.def(
      "gram",
      [](const KernelSpec& spec, const Matrix& x, std::optional<Matrix> z) {
        return z ? gram(spec, x, *z) : gram(spec, x);
      },
      py::arg("spec"), py::arg("x"), py::arg("z") = py::none(), "Kernel matrix between the rows of x and z.");
  m.def("median_heuristic", &median_heuristic, py::arg("x"));

  py::class_<SdrBasis>(m, "SdrBasis")
      .def_readonly("W", &SdrBasis::W)
      .def_readonly("tau", &SdrBasis::tau)
      .def_readonly("raw", &SdrBasis::raw)
      .def_readonly("zeta", &SdrBasis::zeta)
      .def_readonly("detected_rank", &SdrBasis::detected_rank)
      .def_property_readonly("rank", &SdrBasis::rank);

  m.def("estimate_basis", py::overload_cast<const Matrix&, const Matrix&, Index>(&estimate_basis),
        py::arg("M"), py::arg("N"), py::arg("m"),
        "Leading m generalized eigenvectors of N w = t M w on the range of M.");
  m.def("rank_bound", &rank_bound, py::arg("n"), py::arg("delta") = 0.05);
  m.def("suggest_rank", &suggest_rank, py::arg("tau"), py::arg("n"), py::arg("delta") = 0.05);

  py::class_<TrainOptions>(m, "TrainOptions")
      .def(py::init(&make_options), py::kw_only(), py::arg("kernel") = "rbf",
           py::arg("lengthscale") = py::none(), py::arg("rank") = 2, py::arg("sdr") = "sliced",
           py::arg("slices") = py::none(), py::arg("zeta") = py::none(), py::arg("zeta1") = py::none(),
           py::arg("task") = py::none(), py::arg("standardize") = true, py::arg("seed") = 0,
           py::arg("max_iter") = 500, py::arg("tol") = 1e-6, py::arg("cv_folds") = 5,
           py::arg("dense_v_inverse") = true)
      .def_readwrite("lengthscale", &TrainOptions::lengthscale)
      .def_readwrite("rank", &TrainOptions::rank)
      .def_readwrite("seed", &TrainOptions::seed);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("task", [](const PyModel& p) { return std::string(to_string(p.bundle.task)); })
      .def_property_readonly("heads", [](const PyModel& p) { return p.bundle.heads.size(); })
      .def_property_readonly("tau", [](const PyModel& p) { return p.bundle.tau; })
      .def_property_readonly("labels", [](const PyModel& p) { return p.bundle.labels; })
      .def_property_readonly("report", [](const PyModel& p) { return p.report; })
      .def("kernel", [](const PyModel& p, std::size_t i) { return head(p, i).kernel; }, py::arg("head") = 0)
      .def("W", [](const PyModel& p, std::size_t i) { return head(p, i).W; }, py::arg("head") = 0)
      .def("sigma2", [](const PyModel& p, std::size_t i) { return head(p, i).sigma2; }, py::arg("head") = 0)
      .def("sigma_beta", [](const PyModel& p, std::size_t i) { return head(p, i).sigma_beta; },
           py::arg("head") = 0)
      .def(
          "predict",
          [](const PyModel& p, const Matrix& x) {
            BundlePrediction r;
            {
              py::gil_scoped_release release;
              r = predict_bundle(p.bundle, x);
            }
            return py::make_tuple(r.dist.mean, r.dist.variance);
          },
          py::arg("X"), "Predictive mean and variance (head 0 for multiclass).")
      .def(
          "predict_labels",
          [](const PyModel& p, const Matrix& x) {
            if (p.bundle.task == Task::regression) throw DomainError("regression models have no labels");
            return predict_bundle(p.bundle, x).labels;
          },
          py::arg("X"))
      .def("scores", [](const PyModel& p, const Matrix& x) { return predict_bundle(p.bundle, x).scores; },
           py::arg("X"))
      .def("to_json", [](const PyModel& p) { return serialize(p.bundle); })
      .def_static("from_json", [](const std::string& text) { return PyModel{deserialize_sigp(text), {}}; })
      .def("save", [](const PyModel& p, const std::string& path) { save_model(path, p.bundle); }, py::arg("path"));

  py::class_<GpBundle>(m, "GpModel")
      .def_property_readonly("noise2", [](const GpBundle& g) { return g.model.noise2; })
      .def_property_readonly("kernel", [](const GpBundle& g) { return g.model.kernel; })
      .def_property_readonly("log_marginal", [](const GpBundle& g) { return g.model.log_marginal; })
      .def(
          "predict",
          [](const GpBundle& g, const Matrix& x) {
            const PredictiveDistribution d = predict_gp_bundle(g, x);
            return py::make_tuple(d.mean, d.variance);
          },
          py::arg("X"))
      .def("to_json", [](const GpBundle& g) { return serialize(g); })
      .def("save", [](const GpBundle& g, const std::string& path) { save_model(path, g); }, py::arg("path"));

  m.def(
      "train",
      [](const Matrix& x, const Vector& y, std::optional<TrainOptions> options) {
        const Dataset ds = make_dataset(x, y);
        const TrainOptions o = options.value_or(TrainOptions{});
        py::gil_scoped_release release;
        TrainReport report;
        SigpBundle b = train_sigp(ds, o, &report);
        return PyModel{std::move(b), format_report(report)};
      },
      py::arg("X"), py::arg("y"), py::arg("options") = py::none(),
      "Fit the SDR basis and the EM variance components; the task follows the labels.");

  m.def(
      "train_gp",
      [](const Matrix& x, const Vector& y, std::optional<TrainOptions> options, const std::string& mean) {
        const Dataset ds = make_dataset(x, y);
        const TrainOptions o = options.value_or(TrainOptions{});
        const GpMean gm = gp_mean_from_string(mean);
        py::gil_scoped_release release;
        return train_gp(ds, o, gm);
      },
      py::arg("X"), py::arg("y"), py::arg("options") = py::none(), py::arg("mean") = "linear");

  m.def(
      "load_model",
      [](const std::string& path) -> py::object {
        if (model_format(path) == "exact-gp-model") return py::cast(load_gp_model(path));
        return py::cast(PyModel{load_sigp_model(path), {}});
      },
      py::arg("path"));

  m.def(
      "sinusoid",
      [](Index n, double noise_var, std::uint64_t seed, std::optional<std::vector<std::pair<double, double>>> ranges) {
        return as_arrays(synth_sinusoid(n, ranges.value_or(default_sinusoid_ranges()), noise_var, seed));
      },
      py::arg("n") = 100, py::arg("noise_var") = 0.01, py::arg("seed") = 0, py::arg("ranges") = py::none());
  m.def(
      "four_class",
      [](Index n_per_class, std::uint64_t seed, double cluster_std) {
        return as_arrays(synth_four_class(n_per_class, seed, cluster_std));
      },
      py::arg("n_per_class") = 20, py::arg("seed") = 0, py::arg("cluster_std") = 0.1);

  m.def("mse", &mse, py::arg("pred"), py::arg("truth"));
  m.def("f1", &f1, py::arg("pred"), py::arg("truth"));
  m.def("accuracy", &accuracy, py::arg("pred"), py::arg("truth"));
  m.def(
      "nlpd",
      [](const Vector& mean, const Vector& variance, const Vector& truth) {
        return nlpd(PredictiveDistribution{mean, variance}, truth);
      },
      py::arg("mean"), py::arg("variance"), py::arg("truth"));
}
