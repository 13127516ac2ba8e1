#pragma once

#include "sigp/types.hpp"

namespace sigp {

/// F1 score of the positive class (+1) for +/-1 labels. Returns 0 when
/// precision + recall = 0. Throws on empty or mismatched input.
double f1(const Vector& pred, const Vector& truth);

/// Mean squared error.
double mse(const Vector& pred, const Vector& truth);

/// Mean over points of -log N(y_i | mean_i, variance_i). Throws DomainError on a
/// non-positive variance.
double nlpd(const PredictiveDistribution& dist, const Vector& truth);

/// Fraction of exactly matching labels.
double accuracy(const Vector& pred, const Vector& truth);

/// Threshold-0 decision: +1 where score >= 0, else -1.
Vector sign_labels(const Vector& scores);

}  // namespace sigp
