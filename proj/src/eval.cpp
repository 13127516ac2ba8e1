#include "sigp/eval.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sigp/errors.hpp"

namespace sigp {

namespace {

void check_pair(const Vector& a, const Vector& b, const char* what) {
  if (a.size() == 0) throw DomainError(std::string(what) + ": empty input");
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
}

}  // namespace

double f1(const Vector& pred, const Vector& truth) {
  check_pair(pred, truth, "f1");
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (Index i = 0; i < pred.size(); ++i) {
    const bool p = pred(i) > 0.0;
    const bool t = truth(i) > 0.0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double mse(const Vector& pred, const Vector& truth) {
  check_pair(pred, truth, "mse");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

double nlpd(const PredictiveDistribution& dist, const Vector& truth) {
  check_pair(dist.mean, truth, "nlpd");
  if (dist.variance.size() != truth.size()) throw DimensionError("nlpd: variance length mismatch");
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (Index i = 0; i < truth.size(); ++i) {
    const double v = dist.variance(i);
    if (!(v > 0.0)) throw DomainError("nlpd: variance must be positive");
    const double r = truth(i) - dist.mean(i);
    total += 0.5 * (log2pi + std::log(v) + r * r / v);
  }
  return total / static_cast<double>(truth.size());
}

double accuracy(const Vector& pred, const Vector& truth) {
  check_pair(pred, truth, "accuracy");
  return static_cast<double>((pred.array() == truth.array()).count()) / static_cast<double>(pred.size());
}

Vector sign_labels(const Vector& scores) {
  return (scores.array() >= 0.0).select(Vector::Ones(scores.size()), -1.0);
}

}  // namespace sigp
