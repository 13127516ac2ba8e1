// sigp: train, predict, evaluate and inspect SIGP models from the command line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigp/baseline_gp.hpp"
#include "sigp/data_io.hpp"
#include "sigp/errors.hpp"
#include "sigp/eval.hpp"
#include "sigp/model_io.hpp"
#include "sigp/pipeline.hpp"

namespace {

using namespace sigp;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataFlags {
  std::string path;
  int label_column = -1;
  bool no_header = false;
  std::string delimiter = ",";

  void add(CLI::App* app, bool required = true) {
    auto* opt = app->add_option("--data", path, "CSV file");
    if (required) opt->required();
    app->add_option("--label-column", label_column, "0-based label column, -1 = last, -2 = none");
    app->add_flag("--no-header", no_header, "first line is data");
    app->add_option("--delimiter", delimiter, "field separator");
  }

  Dataset load() const {
    if (delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    CsvOptions o;
    o.header = !no_header;
    o.label_column = label_column;
    o.delimiter = delimiter[0];
    return load_csv(path, o);
  }
};

struct TrainFlags {
  std::string kernel = "rbf";
  std::string lengthscale = "cv";
  Index rank = 2;
  std::string sdr = "sliced";
  std::optional<Index> slices;
  std::optional<double> zeta;
  std::optional<double> zeta1;
  double xi = 1e-4;
  int max_iter = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string task = "auto";
  bool no_standardize = false;
  int folds = 5;

  void add(CLI::App* app) {
    app->add_option("--kernel", kernel, "rbf | linear")->check(CLI::IsMember({"rbf", "linear"}));
    app->add_option("--lengthscale", lengthscale, "RBF lengthscale, or 'cv' for the cross-validated grid");
    app->add_option("--rank", rank, "SDR rank m");
    app->add_option("--sdr", sdr, "sliced | ykernel")->check(CLI::IsMember({"sliced", "ykernel"}));
    app->add_option("--slices", slices, "number of slices (sliced SDR)");
    app->add_option("--zeta", zeta, "SDR regulariser (default 1e-4 trace(K)/n)");
    app->add_option("--zeta1", zeta1, "response-kernel regulariser (ykernel SDR)");
    app->add_option("--xi", xi, "mean-function ridge");
    app->add_option("--max-iter", max_iter, "EM iteration cap");
    app->add_option("--tol", tol, "relative log-likelihood tolerance");
    app->add_option("--seed", seed, "seed for cross-validation folds");
    app->add_option("--task", task, "auto | regression | binary | multiclass")
        ->check(CLI::IsMember({"auto", "regression", "binary", "multiclass"}));
    app->add_flag("--no-standardize", no_standardize, "use raw features");
    app->add_option("--folds", folds, "cross-validation folds");
  }

  TrainOptions options() const {
    if (rank < 1) throw UsageError("--rank must be at least 1");
    if (sdr == "sliced" && zeta1) throw UsageError("--zeta1 only applies to --sdr ykernel");
    if (sdr == "ykernel" && slices) throw UsageError("--slices only applies to --sdr sliced");
    if (kernel == "linear" && lengthscale != "cv") throw UsageError("--lengthscale does not apply to the linear kernel");
    if (slices && *slices < 1) throw UsageError("--slices must be positive");
    if (zeta && !(*zeta > 0.0)) throw UsageError("--zeta must be positive");
    if (zeta1 && !(*zeta1 > 0.0)) throw UsageError("--zeta1 must be positive");
    if (!(xi > 0.0)) throw UsageError("--xi must be positive");
    if (max_iter < 0) throw UsageError("--max-iter must be non-negative");
    if (!(tol > 0.0)) throw UsageError("--tol must be positive");

    TrainOptions o;
    o.kernel = kernel_family_from_string(kernel);
    if (lengthscale != "cv") {
      double v = 0.0;
      std::istringstream in(lengthscale);
      if (!(in >> v) || !(in >> std::ws).eof() || !(v > 0.0)) {
        throw UsageError("--lengthscale must be a positive number or 'cv'");
      }
      o.lengthscale = v;
    }
    o.rank = rank;
    o.sdr = sdr_method_from_string(sdr);
    o.slices = slices;
    o.zeta = zeta;
    o.zeta1 = zeta1;
    o.em.xi = xi;
    o.em.max_iter = max_iter;
    o.em.tol = tol;
    o.seed = seed;
    o.standardize = !no_standardize;
    o.cv_folds = folds;
    if (task != "auto") o.task = task_from_string(task);
    return o;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::string predictions_csv(const PredictiveDistribution& dist, const Vector* labels) {
  std::ostringstream out;
  out << "mean,variance" << (labels ? ",label" : "") << '\n';
  for (Index i = 0; i < dist.mean.size(); ++i) {
    out << format_real(dist.mean(i)) << ',' << format_real(dist.variance(i));
    if (labels) out << ',' << format_real((*labels)(i));
    out << '\n';
  }
  return out.str();
}

int cmd_train(const DataFlags& data, const TrainFlags& flags, const std::string& model_path,
              const std::string& report_path) {
  const TrainOptions options = flags.options();
  const Dataset ds = data.load();
  TrainReport report;
  const SigpBundle bundle = train_sigp(ds, options, &report);
  save_model(model_path, bundle);
  write_text(report_path, format_report(report));
  return kOk;
}

int cmd_baseline(const DataFlags& data, const TrainFlags& flags, const std::string& mean,
                 const std::string& model_path) {
  const TrainOptions options = flags.options();
  const Dataset ds = data.load();
  const GpBundle bundle = train_gp(ds, options, gp_mean_from_string(mean));
  save_model(model_path, bundle);
  std::cout << "noise2: " << format_real(bundle.model.noise2) << '\n'
            << "lengthscale: " << format_real(bundle.model.kernel.lengthscale) << '\n'
            << "log_marginal: " << format_real(bundle.model.log_marginal) << '\n';
  return kOk;
}

// Without --label-column, a file with exactly one column more than the model
// expects is taken to carry its label last.
Matrix model_inputs(const Dataset& ds, Index expected, bool label_given) {
  if (!label_given && ds.dim() == expected + 1) return ds.X.leftCols(expected);
  return ds.X;
}

int cmd_predict(const std::string& model_path, const DataFlags& data, bool label_given, const std::string& out_path) {
  const Dataset ds = data.load();
  if (model_format(model_path) == "exact-gp-model") {
    const GpBundle gp = load_gp_model(model_path);
    const Index expected = gp.standardizer ? gp.standardizer->input_dim : gp.model.x_train.cols();
    write_text(out_path, predictions_csv(predict_gp_bundle(gp, model_inputs(ds, expected, label_given)), nullptr));
    return kOk;
  }
  const SigpBundle bundle = load_sigp_model(model_path);
  const Index expected = bundle.standardizer ? bundle.standardizer->input_dim : bundle.heads.front().dim();
  const BundlePrediction pred = predict_bundle(bundle, model_inputs(ds, expected, label_given));
  write_text(out_path, predictions_csv(pred.dist, bundle.task == Task::regression ? nullptr : &pred.labels));
  return kOk;
}

int cmd_eval(const std::string& pred_path, const DataFlags& truth_flags, const std::string& metric) {
  CsvOptions po;
  po.label_column = -2;
  const Dataset preds = load_csv(pred_path, po);
  const Dataset truth = truth_flags.load();
  if (truth.y.size() == 0) throw DataError("truth file has no label column");
  if (preds.n() != truth.n()) {
    throw DataError("predictions have " + std::to_string(preds.n()) + " rows, truth has " +
                    std::to_string(truth.n()));
  }
  auto column = [&](const std::string& name) -> std::optional<Vector> {
    for (std::size_t j = 0; j < preds.feature_names.size(); ++j) {
      if (preds.feature_names[j] == name) return Vector(preds.X.col(static_cast<Index>(j)));
    }
    return std::nullopt;
  };
  const auto mean = column("mean");
  if (!mean) throw DataError("predictions file needs a 'mean' column");
  double value = 0.0;
  if (metric == "mse") {
    value = mse(*mean, truth.y);
  } else if (metric == "nlpd") {
    const auto var = column("variance");
    if (!var) throw DataError("predictions file needs a 'variance' column for nlpd");
    value = nlpd({*mean, *var}, truth.y);
  } else {
    const auto labels = column("label");
    const auto values = distinct_values(truth.y);
    if (values.size() != 2) throw DataError("f1 needs a binary truth column");
    const Vector pm_truth = to_plus_minus_one(truth.y);
    const Vector pm_pred = labels ? Vector((labels->array() == values[1]).select(Vector::Ones(labels->size()), -1.0))
                                  : sign_labels(*mean);
    value = f1(pm_pred, pm_truth);
  }
  std::cout << format_real(value) << '\n';
  return kOk;
}

std::vector<Index> parse_n_list(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v < 2) throw std::invalid_argument("n");
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw UsageError("--n-list must be a comma-separated list of integers >= 2");
    }
  }
  if (out.empty()) throw UsageError("--n-list is empty");
  return out;
}

int cmd_bench(const std::string& n_list, Index rank, int iterations, std::uint64_t seed, const std::string& out) {
  if (rank < 1) throw UsageError("--rank must be at least 1");
  if (iterations < 1) throw UsageError("--iterations must be at least 1");
  const auto rows = bench_em(parse_n_list(n_list), rank, iterations, seed);
  std::ostringstream csv;
  csv << "n,m,iterations,seconds_per_iteration,setup_seconds\n";
  for (const auto& r : rows) {
    csv << r.n << ',' << r.m << ',' << r.iterations << ',' << format_real(r.seconds_per_iteration) << ','
        << format_real(r.setup_seconds) << '\n';
  }
  write_text(out, csv.str());
  return kOk;
}

int cmd_gen(const std::string& experiment, Index n, double noise, std::uint64_t seed, const std::string& out) {
  if (n < 1) throw UsageError("--n must be positive");
  if (experiment == "sinusoid") {
    if (!(noise >= 0.0)) throw UsageError("--noise must be non-negative");
    save_csv(out, synth_sinusoid(n, default_sinusoid_ranges(), noise, seed));
  } else {
    save_csv(out, synth_four_class(n, seed));
  }
  return kOk;
}

int cmd_sdr(const DataFlags& data, const TrainFlags& flags, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("--delta must lie in (0, 1)");
  TrainOptions options = flags.options();
  options.em.max_iter = 0;
  const Dataset ds = data.load();
  TrainReport report;
  train_sigp(ds, options, &report);
  const double bound = rank_bound(ds.n(), delta);
  std::cout << "n: " << ds.n() << '\n' << "tau:";
  for (Index i = 0; i < report.tau.size(); ++i) std::cout << ' ' << format_real(report.tau(i));
  std::cout << '\n'
            << "rank_bound: " << format_real(std::max(bound, 0.0)) << '\n'
            << "suggested_rank: " << suggest_rank(report.tau, ds.n(), delta) << '\n';
  return kOk;
}

int cmd_plotdata(const std::string& experiment, const std::string& model_path, const std::string& baseline_path,
                 Index grid, double lo, double hi, const std::string& out_path) {
  if (grid < 2) throw UsageError("--grid must be at least 2");
  if (!(hi > lo)) throw UsageError("--range needs hi > lo");
  const SigpBundle model = load_sigp_model(model_path);
  std::optional<GpBundle> gp;
  if (!baseline_path.empty()) gp = load_gp_model(baseline_path);

  std::ostringstream out;
  if (experiment == "sinusoid") {
    Matrix z(grid, 1);
    for (Index i = 0; i < grid; ++i) z(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    const PredictiveDistribution s = predict_bundle(model, z).dist;
    std::optional<PredictiveDistribution> g;
    if (gp) g = predict_gp_bundle(*gp, z);
    out << "x,truth,sigp_mean,sigp_lower,sigp_upper";
    if (g) out << ",gp_mean,gp_lower,gp_upper";
    out << '\n';
    for (Index i = 0; i < grid; ++i) {
      const double hs = 1.96 * std::sqrt(s.variance(i));
      out << format_real(z(i, 0)) << ',' << format_real(std::sin(z(i, 0))) << ',' << format_real(s.mean(i)) << ','
          << format_real(s.mean(i) - hs) << ',' << format_real(s.mean(i) + hs);
      if (g) {
        const double hg = 1.96 * std::sqrt(g->variance(i));
        out << ',' << format_real(g->mean(i)) << ',' << format_real(g->mean(i) - hg) << ','
            << format_real(g->mean(i) + hg);
      }
      out << '\n';
    }
  } else {
    Matrix z(grid * grid, 2);
    for (Index i = 0; i < grid; ++i) {
      for (Index j = 0; j < grid; ++j) {
        z(i * grid + j, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
        z(i * grid + j, 1) = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(grid - 1);
      }
    }
    const BundlePrediction p = predict_bundle(model, z);
    out << "x1,x2,sigp_label";
    for (double label : model.labels) out << ",sigp_score_" << format_real(label);
    if (gp) out << ",gp_mean";
    out << '\n';
    std::optional<PredictiveDistribution> g;
    if (gp) g = predict_gp_bundle(*gp, z);
    for (Index r = 0; r < z.rows(); ++r) {
      out << format_real(z(r, 0)) << ',' << format_real(z(r, 1)) << ','
          << format_real(p.labels.size() ? p.labels(r) : p.dist.mean(r));
      for (Index k = 0; k < p.scores.cols(); ++k) out << ',' << format_real(p.scores(r, k));
      if (g) out << ',' << format_real(g->mean(r));
      out << '\n';
    }
  }
  write_text(out_path, out.str());
  return kOk;
}

// Expands `--config FILE` (anywhere on the line) into `--key=value` flags placed
// right after the subcommand. Keys already given on the command line win.
// Lines are `key = value`; '#' starts a comment; `key = true` becomes `--key`.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty()) return args;
  std::ifstream in(config);
  if (!in) throw DataError("cannot open config file '" + config + "'");
  auto given = [&](const std::string& key) {
    for (const auto& a : args) {
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    }
    return false;
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> extra;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("config: expected key=value", line_no);
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw DataError("config: empty key", line_no);
    if (given(key)) continue;
    if (value == "true") {
      extra.push_back("--" + key);
    } else if (value != "false") {
      extra.push_back("--" + key + "=" + value);
    }
  }
  const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind("-", 0) != 0; });
  args.insert(sub == args.end() ? sub : sub + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIGP regression and classification with a low-rank SDR basis"};
  app.require_subcommand(1);

  DataFlags train_data, base_data, pred_data, truth_data, sdr_data;
  TrainFlags train_flags, base_flags, sdr_flags;
  std::string model_path, report_path, out_path, pred_path, metric = "mse", mean = "linear";
  std::string n_list = "500,1000,2000", experiment = "sinusoid", baseline_path;
  Index bench_rank = 2, grid = 100, gen_n = 100;
  int bench_iters = 20;
  std::uint64_t seed = 0;
  double noise = 0.01, delta = 0.05;
  std::vector<double> range;

  auto* train = app.add_subcommand("train", "fit a SIGP model");
  train_data.add(train);
  train_flags.add(train);
  train->add_option("--model", model_path, "output model file")->required();
  train->add_option("--report", report_path, "training report (default stdout)");

  auto* baseline = app.add_subcommand("baseline", "fit the exact GP baseline");
  base_data.add(baseline);
  base_flags.add(baseline);
  baseline->add_option("--model", model_path, "output model file")->required();
  baseline->add_option("--mean", mean, "zero | linear")->check(CLI::IsMember({"zero", "linear"}));

  auto* predict_cmd = app.add_subcommand("predict", "predictive mean and variance per row");
  predict_cmd->add_option("--model", model_path, "model file")->required();
  pred_data.label_column = -2;
  pred_data.add(predict_cmd);
  auto* pred_label_opt = predict_cmd->get_option("--label-column");
  predict_cmd->add_option("--out", out_path, "output CSV (default stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "score predictions against the truth");
  eval_cmd->add_option("--predictions", pred_path, "CSV from 'predict'")->required();
  truth_data.add(eval_cmd);
  eval_cmd->add_option("--metric", metric, "f1 | mse | nlpd")->check(CLI::IsMember({"f1", "mse", "nlpd"}));

  auto* bench = app.add_subcommand("bench", "per-iteration EM wall time");
  bench->add_option("--n-list", n_list, "comma-separated sample sizes");
  bench->add_option("--rank", bench_rank, "SDR rank m");
  bench->add_option("--iterations", bench_iters, "timed sweeps per size");
  bench->add_option("--seed", seed, "data seed");
  bench->add_option("--out", out_path, "output CSV (default stdout)");

  auto* gen = app.add_subcommand("gen", "write a synthetic dataset");
  gen->add_option("--experiment", experiment, "sinusoid | fourclass")
      ->check(CLI::IsMember({"sinusoid", "fourclass"}));
  gen->add_option("--n", gen_n, "points (sinusoid) or points per class (fourclass)");
  gen->add_option("--noise", noise, "noise variance (sinusoid)");
  gen->add_option("--seed", seed, "seed");
  gen->add_option("--out", out_path, "output CSV")->required();

  auto* sdr = app.add_subcommand("sdr", "print the SDR spectrum and the rank bound");
  sdr_data.add(sdr);
  sdr_flags.add(sdr);
  sdr->add_option("--delta", delta, "confidence parameter of the rank bound");

  auto* plot = app.add_subcommand("plotdata", "grid evaluations for plotting");
  plot->add_option("--experiment", experiment, "sinusoid | fourclass")
      ->check(CLI::IsMember({"sinusoid", "fourclass"}));
  plot->add_option("--model", model_path, "SIGP model file")->required();
  plot->add_option("--baseline", baseline_path, "exact GP model file");
  plot->add_option("--grid", grid, "grid points per axis");
  plot->add_option("--range", range, "lo hi")->expected(2);
  plot->add_option("--out", out_path, "output CSV (default stdout)");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_data, train_flags, model_path, report_path);
    if (*baseline) return cmd_baseline(base_data, base_flags, mean, model_path);
    if (*predict_cmd) return cmd_predict(model_path, pred_data, pred_label_opt->count() > 0, out_path);
    if (*eval_cmd) return cmd_eval(pred_path, truth_data, metric);
    if (*bench) return cmd_bench(n_list, bench_rank, bench_iters, seed, out_path);
    if (*gen) return cmd_gen(experiment, gen_n, noise, seed, out_path);
    if (*sdr) return cmd_sdr(sdr_data, sdr_flags, delta);
    if (*plot) {
      const double lo = range.empty() ? (experiment == "sinusoid" ? -5.0 : -2.0) : range[0];
      const double hi = range.empty() ? (experiment == "sinusoid" ? 5.0 : 2.0) : range[1];
      return cmd_plotdata(experiment, model_path, baseline_path, grid, lo, hi, out_path);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const sigp::Error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}
