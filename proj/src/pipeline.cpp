#include "sigp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sigp/errors.hpp"
#include "sigp/eval.hpp"

namespace sigp {

namespace {

constexpr double kRankDelta = 0.05;
constexpr Index kSpectrumCount = 10;

Matrix rows_of(const Matrix& x, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
  return out;
}

Vector rows_of(const Vector& y, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = y(rows[k]);
  return out;
}

double cv_score(Task task, const BundlePrediction& pred, const Vector& truth, const std::vector<double>& labels) {
  switch (task) {
    case Task::regression:
      return nlpd(pred.dist, truth);
    case Task::binary: {
      const Vector pm_pred = (pred.labels.array() == labels[1]).select(Vector::Ones(truth.size()), -1.0);
      const Vector pm_truth = (truth.array() == labels[1]).select(Vector::Ones(truth.size()), -1.0);
      return f1(pm_pred, pm_truth);
    }
    case Task::multiclass:
      return accuracy(pred.labels, truth);
  }
  return 0.0;
}

}  // namespace

Task infer_task(const Vector& y) {
  switch (detect_label_kind(y)) {
    case LabelKind::binary:
      return Task::binary;
    case LabelKind::multiclass:
      return Task::multiclass;
    case LabelKind::real:
      break;
  }
  return Task::regression;
}

SigpBundle fit_sigp_fixed(const Matrix& x, const Vector& y, Task task, const KernelSpec& kernel,
                          const TrainOptions& options, TrainReport* report) {
  const Index n = x.rows();
  const Index m = options.rank;
  if (m < 1) throw DomainError("rank must be at least 1");
  if (y.size() != n) throw DimensionError("labels and inputs have different lengths");
  if (m > n) throw DomainError("rank exceeds the number of training points");

  const GramCache gram(kernel, x);
  const double zeta = options.zeta ? *options.zeta : default_zeta(gram.K());
  if (!(zeta > 0.0)) throw DomainError("zeta must be positive");

  std::vector<double> labels;
  if (task != Task::regression) {
    labels = distinct_values(y);
    if (labels.size() < 2) throw DomainError("classification needs at least two classes");
    if (task == Task::binary && labels.size() != 2) throw DomainError("binary task needs exactly two labels");
  }

  SdrMatrices mats;
  Index slices = 0;
  double zeta1 = 0.0;
  if (options.sdr == SdrMethod::sliced) {
    SlicePlan plan;
    if (task == Task::regression || options.slices) {
      const Index s = options.slices ? *options.slices : std::min(std::max<Index>(m + 2, 10), n);
      plan = make_slices(y, s);
    } else {
      plan = make_class_slices(y);
    }
    slices = plan.slices();
    mats = sdr_matrices_sliced(gram, plan, zeta);
  } else {
    const Matrix ky = response_gram(y);
    zeta1 = options.zeta1 ? *options.zeta1 : default_zeta(ky);
    mats = sdr_matrices_response_kernel(gram, ky, zeta, zeta1);
  }

  const Index want = std::min(n, kSpectrumCount);
  SdrBasis full;
  try {
    full = estimate_basis(mats, std::max(m, want));
  } catch (const RankError& e) {
    const auto detected = static_cast<Index>(e.detected_rank());
    if (detected < m) throw;
    full = estimate_basis(mats, detected);
  }
  SdrBasis basis = full;
  basis.W = full.W.leftCols(m);
  basis.tau = full.tau.head(m);
  basis.raw = full.raw.head(m);
  basis.zeta = zeta;
  basis.method = options.sdr;

  SigpBundle bundle;
  bundle.task = task;
  bundle.tau = full.tau;
  bundle.labels = labels;

  std::vector<EmTrace> traces;
  if (task == Task::multiclass) {
    OneVsRestResult fit = fit_one_vs_rest(gram, y, basis, options.em);
    bundle.heads = std::move(fit.model.heads);
    bundle.labels = std::move(fit.model.labels);
    traces = std::move(fit.traces);
  } else {
    const Vector target = task == Task::binary ? to_plus_minus_one(y) : y;
    EmResult fit = em_fit(gram, target, basis, options.em);
    bundle.heads.push_back(std::move(fit.model));
    traces.push_back(std::move(fit.trace));
  }

  if (report) {
    report->task = task;
    report->kernel = kernel;
    report->rank = m;
    report->sdr = options.sdr;
    report->slices = slices;
    report->zeta = zeta;
    report->zeta1 = zeta1;
    report->tau = full.tau;
    report->detected_rank = full.detected_rank;
    report->rank_bound = rank_bound(n, kRankDelta);
    report->suggested_rank = suggest_rank(full.tau, n, kRankDelta);
    report->final_loglik.clear();
    report->iterations.clear();
    report->converged.clear();
    for (const auto& t : traces) {
      report->final_loglik.push_back(t.loglik.back());
      report->iterations.push_back(t.iterations);
      report->converged.push_back(t.converged);
      for (const auto& note : t.notes) report->notes.push_back(note);
    }
  }
  return bundle;
}

double cv_select_lengthscale(const Matrix& x, const Vector& y, Task task, const TrainOptions& options,
                             std::vector<CvRow>* table) {
  const Index n = x.rows();
  const int folds = options.cv_folds;
  if (folds < 2 || folds > n) throw DomainError("cross-validation needs 2 <= folds <= n");
  if (options.cv_multipliers.empty()) throw DomainError("cross-validation grid is empty");
  const double median = median_heuristic(x);

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(options.seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }

  const bool lower_better = task == Task::regression;
  double best_score = lower_better ? std::numeric_limits<double>::infinity() : -1.0;
  double best = median;
  for (double mult : options.cv_multipliers) {
    if (!(mult > 0.0)) throw DomainError("cross-validation multipliers must be positive");
    const KernelSpec spec = KernelSpec::rbf(median * mult);
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> tr, te;
      for (Index k = 0; k < n; ++k) (k % folds == f ? te : tr).push_back(perm[static_cast<std::size_t>(k)]);
      std::sort(tr.begin(), tr.end());
      std::sort(te.begin(), te.end());
      const Vector ytr = rows_of(y, tr);
      const Vector yte = rows_of(y, te);
      double score = lower_better ? std::numeric_limits<double>::infinity() : 0.0;
      try {
        const SigpBundle b = fit_sigp_fixed(rows_of(x, tr), ytr, task, spec, options);
        score = cv_score(task, predict_bundle(b, rows_of(x, te)), yte, b.labels);
      } catch (const Error&) {
        // an infeasible fold scores worst
      }
      total += score;
    }
    const double mean = total / folds;
    if (table) table->push_back({mult, spec.lengthscale, mean});
    if (lower_better ? mean < best_score : mean > best_score) {
      best_score = mean;
      best = spec.lengthscale;
    }
  }
  return best;
}

SigpBundle train_sigp(const Dataset& train, const TrainOptions& options, TrainReport* report) {
  if (train.y.size() != train.n()) throw DataError("training data has no labels");
  const Task task = options.task ? *options.task : infer_task(train.y);
  std::optional<Standardizer> standardizer;
  Matrix x = train.X;
  if (options.standardize) {
    standardizer = Standardizer::fit(train.X);
    if (standardizer->output_dim() == 0) throw DataError("every feature has zero variance");
    x = standardizer->apply(train.X);
  }

  std::vector<CvRow> table;
  KernelSpec kernel;
  if (options.kernel == KernelFamily::linear) {
    kernel = KernelSpec::linear();
  } else if (options.kernel == KernelFamily::brownian_bridge) {
    kernel = KernelSpec::brownian_bridge();
  } else {
    const double ls = options.lengthscale ? *options.lengthscale
                                          : cv_select_lengthscale(x, train.y, task, options, &table);
    kernel = KernelSpec::rbf(ls);
  }

  TrainReport local;
  SigpBundle bundle = fit_sigp_fixed(x, train.y, task, kernel, options, &local);
  bundle.standardizer = standardizer;
  if (report) {
    *report = std::move(local);
    report->cv = std::move(table);
    report->cv_metric = task == Task::regression ? "nlpd" : (task == Task::binary ? "f1" : "accuracy");
    if (standardizer) {
      for (Index j = 0; j < train.dim(); ++j) {
        if (std::find(standardizer->kept.begin(), standardizer->kept.end(), j) == standardizer->kept.end()) {
          report->notes.push_back("dropped zero-variance feature " + std::to_string(j + 1));
        }
      }
    }
  }
  return bundle;
}

BundlePrediction predict_bundle(const SigpBundle& bundle, const Matrix& x) {
  if (bundle.heads.empty()) throw DomainError("model has no heads");
  const Matrix xs = bundle.standardizer ? bundle.standardizer->apply(x) : x;
  BundlePrediction out;
  if (bundle.task == Task::multiclass) {
    const OneVsRestModel ovr{bundle.labels, bundle.heads};
    std::vector<PredictiveDistribution> per_head;
    out.scores.resize(xs.rows(), static_cast<Index>(bundle.heads.size()));
    for (std::size_t k = 0; k < bundle.heads.size(); ++k) {
      per_head.push_back(predict(bundle.heads[k], xs));
      out.scores.col(static_cast<Index>(k)) = per_head.back().mean;
    }
    out.labels.resize(xs.rows());
    out.dist.mean.resize(xs.rows());
    out.dist.variance.resize(xs.rows());
    for (Index i = 0; i < xs.rows(); ++i) {
      Index best = 0;
      out.scores.row(i).maxCoeff(&best);
      out.labels(i) = bundle.labels[static_cast<std::size_t>(best)];
      out.dist.mean(i) = per_head[static_cast<std::size_t>(best)].mean(i);
      out.dist.variance(i) = per_head[static_cast<std::size_t>(best)].variance(i);
    }
    return out;
  }
  out.dist = predict(bundle.heads.front(), xs);
  if (bundle.task == Task::binary) {
    out.labels = (out.dist.mean.array() >= 0.0)
                     .select(Vector::Constant(xs.rows(), bundle.labels[1]), bundle.labels[0]);
  }
  return out;
}

GpBundle train_gp(const Dataset& train, const TrainOptions& options, GpMean mean) {
  if (train.y.size() != train.n()) throw DataError("training data has no labels");
  GpBundle out;
  Matrix x = train.X;
  if (options.standardize) {
    out.standardizer = Standardizer::fit(train.X);
    x = out.standardizer->apply(train.X);
  }
  std::vector<KernelSpec> candidates;
  if (options.kernel == KernelFamily::linear) {
    candidates.push_back(KernelSpec::linear());
  } else if (options.kernel == KernelFamily::brownian_bridge) {
    candidates.push_back(KernelSpec::brownian_bridge());
  } else if (options.lengthscale) {
    candidates.push_back(KernelSpec::rbf(*options.lengthscale));
  } else {
    const double median = median_heuristic(x);
    for (double mult : options.cv_multipliers) candidates.push_back(KernelSpec::rbf(median * mult));
  }
  bool found = false;
  for (const auto& spec : candidates) {
    const GramCache gram(spec, x);
    ExactGpModel fit = gp_fit(gram, train.y, default_noise_grid(), mean);
    if (!found || fit.log_marginal > out.model.log_marginal) {
      out.model = std::move(fit);
      found = true;
    }
  }
  return out;
}

PredictiveDistribution predict_gp_bundle(const GpBundle& bundle, const Matrix& x) {
  return gp_predict(bundle.model, bundle.standardizer ? bundle.standardizer->apply(x) : x);
}

std::vector<BenchRow> bench_em(const std::vector<Index>& n_list, Index m, int iterations, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  if (iterations < 1) throw DomainError("bench_em: iterations must be >= 1");
  std::vector<BenchRow> rows;
  for (Index n : n_list) {
    if (n <= m) throw DomainError("bench_em: every n must exceed m");
    const auto t0 = clock::now();
    const Dataset ds = synth_sinusoid(n, default_sinusoid_ranges(), 0.01, seed);
    const GramCache gram(KernelSpec::rbf(median_heuristic(ds.X)), ds.X);
    const SdrBasis basis = estimate_basis(
        sdr_matrices_sliced(gram, make_slices(ds.y, std::max<Index>(m + 2, 10)), default_zeta(gram.K())), m);
    const Matrix pi = training_projection(gram, basis.W);
    const Matrix wkw = basis.W.transpose() * gram.K() * basis.W;
    EmState state = default_em_init(ds.y, m);
    const auto t1 = clock::now();

    std::vector<double> times;
    for (int it = 0; it < iterations; ++it) {
      const auto a = clock::now();
      const EmSweep sweep = em_sweep(pi, wkw, ds.y, state, 1e-4, true);
      const auto b = clock::now();
      state = sweep.next;
      times.push_back(std::chrono::duration<double>(b - a).count());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    BenchRow row;
    row.n = n;
    row.m = m;
    row.iterations = iterations;
    row.seconds_per_iteration = times[times.size() / 2];
    row.setup_seconds = std::chrono::duration<double>(t1 - t0).count();
    rows.push_back(row);
  }
  return rows;
}

std::string format_report(const TrainReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "task: " << to_string(r.task) << '\n';
  out << "kernel: " << to_string(r.kernel.family);
  if (r.kernel.family == KernelFamily::rbf) out << " lengthscale=" << r.kernel.lengthscale;
  out << '\n';
  out << "rank: " << r.rank << '\n';
  out << "sdr: " << to_string(r.sdr);
  if (r.sdr == SdrMethod::sliced) out << " slices=" << r.slices;
  out << " zeta=" << r.zeta;
  if (r.sdr == SdrMethod::response_kernel) out << " zeta1=" << r.zeta1;
  out << '\n';
  out << "tau:";
  for (Index i = 0; i < r.tau.size(); ++i) out << ' ' << r.tau(i);
  out << '\n';
  out << "detected_rank: " << r.detected_rank << '\n';
  out << "rank_bound(delta=0.05): " << r.rank_bound << '\n';
  out << "suggested_rank: " << r.suggested_rank << '\n';
  if (!r.cv.empty()) {
    out << "cv_metric: " << r.cv_metric << '\n';
    for (const auto& row : r.cv) {
      out << "cv: multiplier=" << row.multiplier << " lengthscale=" << row.lengthscale << " score=" << row.score
          << '\n';
    }
  }
  for (std::size_t k = 0; k < r.final_loglik.size(); ++k) {
    out << "head " << k << ": loglik=" << r.final_loglik[k] << " iterations=" << r.iterations[k]
        << " converged=" << (r.converged[k] ? "true" : "false") << '\n';
  }
  for (const auto& note : r.notes) out << "note: " << note << '\n';
  return out.str();
}

}  // namespace sigp
