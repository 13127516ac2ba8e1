#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sigp/baseline_gp.hpp"
#include "sigp/data_io.hpp"
#include "sigp/sigp.hpp"

namespace sigp {

inline constexpr int kModelFormatVersion = 1;

enum class Task { regression, binary, multiclass };
std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

/// Everything the CLI needs to reproduce predictions: one head for regression
/// and binary tasks, one head per class for multiclass.
struct SigpBundle {
  Task task = Task::regression;
  std::vector<SigpModel> heads;
  /// binary: {negative, positive} original labels; multiclass: label per head
  std::vector<double> labels;
  std::optional<Standardizer> standardizer;
  Vector tau;  // SDR spectrum the basis came from (informational)
};

struct GpBundle {
  ExactGpModel model;
  std::optional<Standardizer> standardizer;
};

/// JSON text with format tag "sigp-model". Every real is written with 17
/// significant digits so reloading reproduces the doubles exactly.
std::string serialize(const SigpBundle& bundle);
SigpBundle deserialize_sigp(const std::string& text);

/// Same envelope with format tag "exact-gp-model".
std::string serialize(const GpBundle& bundle);
GpBundle deserialize_gp(const std::string& text);

/// Atomic writes; loads throw DataError on malformed or mismatched files.
void save_model(const std::filesystem::path& path, const SigpBundle& bundle);
void save_model(const std::filesystem::path& path, const GpBundle& bundle);
SigpBundle load_sigp_model(const std::filesystem::path& path);
GpBundle load_gp_model(const std::filesystem::path& path);

/// Format tag of a model file ("sigp-model" or "exact-gp-model").
std::string model_format(const std::filesystem::path& path);

}  // namespace sigp
