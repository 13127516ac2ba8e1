#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sigp/baseline_gp.hpp"
#include "sigp/data_io.hpp"
#include "sigp/model_io.hpp"
#include "sigp/sdr.hpp"
#include "sigp/sigp.hpp"

namespace sigp {

struct TrainOptions {
  KernelFamily kernel = KernelFamily::rbf;
  std::optional<double> lengthscale;  // empty: cross-validate over the multiplier grid
  std::vector<double> cv_multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};  // times the median heuristic
  int cv_folds = 5;
  Index rank = 2;
  SdrMethod sdr = SdrMethod::sliced;
  std::optional<Index> slices;  // default: max(m + 2, 10) for regression, one per class otherwise
  std::optional<double> zeta;   // default: 1e-4 trace(K)/n
  std::optional<double> zeta1;  // default: 1e-4 trace(K_Y)/n
  EmConfig em;
  std::optional<Task> task;     // default: inferred from the labels
  bool standardize = true;
  std::uint64_t seed = 0;
};

struct CvRow {
  double multiplier = 0.0;
  double lengthscale = 0.0;
  double score = 0.0;  // NLPD (lower is better) or F1/accuracy (higher is better)
};

struct TrainReport {
  Task task = Task::regression;
  KernelSpec kernel;
  Index rank = 0;
  SdrMethod sdr = SdrMethod::sliced;
  Index slices = 0;
  double zeta = 0.0;
  double zeta1 = 0.0;
  Vector tau;              // leading part of the SDR spectrum (at least `rank` values)
  Index detected_rank = 0;
  double rank_bound = 0.0;  // delta = 0.05
  Index suggested_rank = 0;
  std::string cv_metric;
  std::vector<CvRow> cv;
  std::vector<double> final_loglik;  // per head
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<std::string> notes;
};

/// Task implied by the label kind of y.
Task infer_task(const Vector& y);

/// Full training run on an unstandardised dataset.
SigpBundle train_sigp(const Dataset& train, const TrainOptions& options, TrainReport* report = nullptr);

/// Fit with a fixed kernel on already-prepared inputs (no standardisation, no CV).
SigpBundle fit_sigp_fixed(const Matrix& x, const Vector& y, Task task, const KernelSpec& kernel,
                          const TrainOptions& options, TrainReport* report = nullptr);

/// Cross-validated lengthscale for the SIGP (inputs already standardised).
double cv_select_lengthscale(const Matrix& x, const Vector& y, Task task, const TrainOptions& options,
                             std::vector<CvRow>* table = nullptr);

struct BundlePrediction {
  PredictiveDistribution dist;  // head 0 for regression/binary
  Vector labels;                // classification decisions (original label values)
  Matrix scores;                // multiclass: per-head means
};

/// Predict on raw (unstandardised) inputs.
BundlePrediction predict_bundle(const SigpBundle& bundle, const Matrix& x);

/// Exact GP baseline: lengthscale from the option or by maximum marginal
/// likelihood over the same multiplier grid; noise from default_noise_grid().
GpBundle train_gp(const Dataset& train, const TrainOptions& options, GpMean mean = GpMean::linear);
PredictiveDistribution predict_gp_bundle(const GpBundle& bundle, const Matrix& x);

struct BenchRow {
  Index n = 0;
  Index m = 0;
  int iterations = 0;
  double seconds_per_iteration = 0.0;  // median over the timed sweeps
  double setup_seconds = 0.0;          // Gram matrix, SDR basis and projection
};

/// Per-iteration EM wall time on sinusoid data of each size in `n_list`.
/// Each sweep forms the dense n x n V^{-1}, so the expected cost is O(n^2 m).
std::vector<BenchRow> bench_em(const std::vector<Index>& n_list, Index m, int iterations, std::uint64_t seed);

/// Human-readable key: value report.
std::string format_report(const TrainReport& report);

}  // namespace sigp
