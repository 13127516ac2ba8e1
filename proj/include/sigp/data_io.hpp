#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sigp/types.hpp"

namespace sigp {

enum class LabelKind { real, binary, multiclass };
std::string_view to_string(LabelKind kind);

/// Per-feature affine map x -> (x - mean) / std over the retained columns.
/// Zero-variance columns are dropped.
struct Standardizer {
  Index input_dim = 0;
  std::vector<Index> kept;  // retained input columns
  Vector means;             // per retained column
  Vector stds;              // sample standard deviation (n - 1), > 0

  /// Throws DomainError with fewer than two rows.
  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
  Index output_dim() const { return static_cast<Index>(kept.size()); }
};

struct Dataset {
  Matrix X;
  Vector y;
  std::vector<std::string> feature_names;
  std::string label_name = "y";
  LabelKind label_kind = LabelKind::real;
  /// Set once the features have been standardised.
  Vector feature_means;
  Vector feature_stds;
  std::vector<std::string> notes;  // dropped columns and similar events

  Index n() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

struct CsvOptions {
  bool header = true;
  int label_column = -1;  // -1 = last column; -2 = no label column
  char delimiter = ',';
};

/// Parse numeric CSV. Row order follows the file. Blank lines are skipped.
/// Throws DataError carrying the 1-based line number on any malformed field,
/// ragged row or non-finite value.
Dataset parse_csv(std::istream& in, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes features then the label (named columns, header row), every value
/// with 17 significant digits. Written atomically.
void save_csv(const std::filesystem::path& path, const Dataset& ds);

/// Write `content` to a sibling temporary file and rename it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest-round-trip-safe decimal: "%.17g".
std::string format_real(double v);

/// Copy of ds with features mapped through `fitted`.
Dataset standardize(const Dataset& ds, const Standardizer& fitted);

/// Real labels unless every value is an integer and there are at most 20
/// distinct values (and fewer than n): then binary or multiclass.
LabelKind detect_label_kind(const Vector& y);

/// Map a binary label vector to +/-1, the larger value becoming +1.
Vector to_plus_minus_one(const Vector& y);

/// Sorted distinct values.
std::vector<double> distinct_values(const Vector& y);

/// Random source for every seeded routine: std::mt19937_64 seeded with the
/// 64-bit seed. Uniform draws use the top 53 bits and normals the Box-Muller
/// transform (both outputs consumed in order). The standard distributions are
/// avoided because their output differs between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // N(0, 1)
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Seeded uniform split without replacement: a Fisher-Yates shuffle of the
/// row indices; the first `test_count` rows of the shuffle form the test set.
/// Both parts keep file order. Throws DomainError unless test_count < n.
std::pair<Dataset, Dataset> split(const Dataset& ds, Index test_count, std::uint64_t seed);

/// Row subset in the given order.
Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows);

/// y = sin(x) + N(0, noise_var); x uniform on the union of the ranges
/// (a range is picked with probability proportional to its length).
Dataset synth_sinusoid(Index n, const std::vector<std::pair<double, double>>& ranges, double noise_var,
                       std::uint64_t seed);

/// Two interval training ranges with a gap in between, used by the sinusoid
/// experiment: [-4, -1] and [1, 4].
std::vector<std::pair<double, double>> default_sinusoid_ranges();

/// Four classes in 2D, two per corner of the square (+/-1, +/-1).
/// Corner (1,1) and (-1,-1) hold classes 1 (inner) and 2 (outer); corners
/// (1,-1) and (-1,1) hold classes 3 (inner) and 4 (outer). Inner and outer
/// clusters sit at corner * (1 -/+ 0.5/sqrt(2)) with isotropic std
/// `cluster_std`. Points of a class alternate between its two corners.
/// Labels 1..4, class-major row order.
Dataset synth_four_class(Index n_per_class, std::uint64_t seed, double cluster_std = 0.1);

}  // namespace sigp
