#include "sigp/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sigp/errors.hpp"

namespace sigp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(std::string_view field, std::size_t line, std::size_t column) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError("non-numeric field '" + std::string(field) + "' in column " + std::to_string(column + 1),
                    line);
  }
  if (!std::isfinite(v)) {
    throw DataError("non-finite value in column " + std::to_string(column + 1), line);
  }
  return v;
}

}  // namespace

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::real:
      return "real";
    case LabelKind::binary:
      return "binary";
    case LabelKind::multiclass:
      return "multiclass";
  }
  return "real";
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows() < 2) throw DomainError("Standardizer: need at least two rows");
  Standardizer s;
  s.input_dim = x.cols();
  std::vector<double> means, stds;
  for (Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / static_cast<double>(x.rows() - 1));
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      s.kept.push_back(j);
      means.push_back(mean);
      stds.push_back(sd);
    }
  }
  s.means = Eigen::Map<const Vector>(means.data(), static_cast<Index>(means.size()));
  s.stds = Eigen::Map<const Vector>(stds.data(), static_cast<Index>(stds.size()));
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != input_dim) {
    throw DimensionError("Standardizer: expected " + std::to_string(input_dim) + " columns, got " +
                         std::to_string(x.cols()));
  }
  Matrix out(x.rows(), output_dim());
  for (Index k = 0; k < output_dim(); ++k) {
    out.col(k) = (x.col(kept[static_cast<std::size_t>(k)]).array() - means(k)) / stds(k);
  }
  return out;
}

Dataset parse_csv(std::istream& in, const CsvOptions& options) {
  Dataset ds;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> names;
  std::size_t width = 0;
  std::size_t line_no = 0;
  bool header_pending = options.header;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, options.delimiter);
    if (header_pending) {
      for (auto f : fields) names.emplace_back(f);
      width = fields.size();
      header_pending = false;
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw DataError("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()),
                      line_no);
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_real(fields[j], line_no, j);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows");

  const int wide = static_cast<int>(width);
  int label = options.label_column == -1 ? wide - 1 : options.label_column;
  if (options.label_column == -2) label = -1;
  if (label >= wide || label < -1) {
    throw DataError("label column " + std::to_string(options.label_column) + " out of range");
  }
  const Index d = label >= 0 ? wide - 1 : wide;
  ds.X.resize(static_cast<Index>(rows.size()), d);
  ds.y.resize(label >= 0 ? static_cast<Index>(rows.size()) : 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index col = 0;
    for (int j = 0; j < wide; ++j) {
      if (j == label) {
        ds.y(static_cast<Index>(i)) = rows[i][static_cast<std::size_t>(j)];
      } else {
        ds.X(static_cast<Index>(i), col++) = rows[i][static_cast<std::size_t>(j)];
      }
    }
  }
  for (int j = 0; j < wide; ++j) {
    const std::string name = names.empty() ? (j == label ? "y" : "x" + std::to_string(j + 1))
                                           : names[static_cast<std::size_t>(j)];
    if (j == label) {
      ds.label_name = name;
    } else {
      ds.feature_names.push_back(name);
    }
  }
  if (ds.y.size() > 0) ds.label_kind = detect_label_kind(ds.y);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, options);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move temporary file onto '" + path.string() + "'");
  }
}

void save_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ostringstream out;
  const bool has_y = ds.y.size() > 0;
  if (has_y && ds.y.size() != ds.n()) throw DimensionError("save_csv: y length does not match X");
  for (Index j = 0; j < ds.dim(); ++j) {
    if (j > 0) out << ',';
    out << (static_cast<std::size_t>(j) < ds.feature_names.size() ? ds.feature_names[static_cast<std::size_t>(j)]
                                                                 : "x" + std::to_string(j + 1));
  }
  if (has_y) out << (ds.dim() > 0 ? "," : "") << ds.label_name;
  out << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      if (j > 0) out << ',';
      out << format_real(ds.X(i, j));
    }
    if (has_y) out << (ds.dim() > 0 ? "," : "") << format_real(ds.y(i));
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

Dataset standardize(const Dataset& ds, const Standardizer& fitted) {
  Dataset out = ds;
  out.X = fitted.apply(ds.X);
  out.feature_names.clear();
  for (Index k : fitted.kept) {
    if (static_cast<std::size_t>(k) < ds.feature_names.size()) {
      out.feature_names.push_back(ds.feature_names[static_cast<std::size_t>(k)]);
    }
  }
  for (Index j = 0; j < ds.dim(); ++j) {
    if (std::find(fitted.kept.begin(), fitted.kept.end(), j) == fitted.kept.end()) {
      const std::string name = static_cast<std::size_t>(j) < ds.feature_names.size()
                                   ? ds.feature_names[static_cast<std::size_t>(j)]
                                   : "x" + std::to_string(j + 1);
      out.notes.push_back("dropped zero-variance feature '" + name + "'");
    }
  }
  out.feature_means = fitted.means;
  out.feature_stds = fitted.stds;
  return out;
}

std::vector<double> distinct_values(const Vector& y) {
  std::set<double> s(y.data(), y.data() + y.size());
  return {s.begin(), s.end()};
}

LabelKind detect_label_kind(const Vector& y) {
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) != std::round(y(i))) return LabelKind::real;
  }
  const auto values = distinct_values(y);
  if (values.size() > 20 || static_cast<Index>(values.size()) >= y.size()) return LabelKind::real;
  if (values.size() == 2) return LabelKind::binary;
  return values.size() > 2 ? LabelKind::multiclass : LabelKind::real;
}

Vector to_plus_minus_one(const Vector& y) {
  const auto values = distinct_values(y);
  if (values.size() != 2) throw DomainError("to_plus_minus_one: labels must take exactly two values");
  return (y.array() == values[1]).select(Vector::Ones(y.size()), -1.0);
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("Rng::below: bound must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return v % bound;
}

Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out = ds;
  out.X.resize(static_cast<Index>(rows.size()), ds.dim());
  out.y.resize(ds.y.size() > 0 ? static_cast<Index>(rows.size()) : 0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.X.row(static_cast<Index>(k)) = ds.X.row(rows[k]);
    if (ds.y.size() > 0) out.y(static_cast<Index>(k)) = ds.y(rows[k]);
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, Index test_count, std::uint64_t seed) {
  const Index n = ds.n();
  if (test_count < 0 || test_count >= n) {
    throw DomainError("split: need 0 <= test_count < n (test_count=" + std::to_string(test_count) +
                      ", n=" + std::to_string(n) + ")");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<Index> test(perm.begin(), perm.begin() + test_count);
  std::vector<Index> train(perm.begin() + test_count, perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {take_rows(ds, train), take_rows(ds, test)};
}

std::vector<std::pair<double, double>> default_sinusoid_ranges() { return {{-4.0, -1.0}, {1.0, 4.0}}; }

Dataset synth_sinusoid(Index n, const std::vector<std::pair<double, double>>& ranges, double noise_var,
                       std::uint64_t seed) {
  if (ranges.empty()) throw DomainError("synth_sinusoid: no input ranges");
  if (!(noise_var >= 0.0)) throw DomainError("synth_sinusoid: noise_var must be non-negative");
  if (n < 0) throw DomainError("synth_sinusoid: n must be non-negative");
  double total = 0.0;
  for (const auto& [lo, hi] : ranges) {
    if (!(hi > lo)) throw DomainError("synth_sinusoid: every range needs hi > lo");
    total += hi - lo;
  }
  Rng rng(seed);
  Dataset ds;
  ds.X.resize(n, 1);
  ds.y.resize(n);
  const double sd = std::sqrt(noise_var);
  for (Index i = 0; i < n; ++i) {
    double u = rng.uniform() * total;
    double x = ranges.back().second;
    for (const auto& [lo, hi] : ranges) {
      if (u < hi - lo) {
        x = lo + u;
        break;
      }
      u -= hi - lo;
    }
    ds.X(i, 0) = x;
    ds.y(i) = std::sin(x) + sd * rng.normal();
  }
  ds.feature_names = {"x"};
  ds.label_name = "y";
  return ds;
}

Dataset synth_four_class(Index n_per_class, std::uint64_t seed, double cluster_std) {
  if (n_per_class < 1) throw DomainError("synth_four_class: n_per_class must be >= 1");
  if (!(cluster_std >= 0.0)) throw DomainError("synth_four_class: cluster_std must be non-negative");
  Rng rng(seed);
  const double inner = 1.0 - 0.5 / std::sqrt(2.0);
  const double outer = 1.0 + 0.5 / std::sqrt(2.0);
  struct ClassLayout {
    double sx, sy, scale;
  };
  // corners per class: (sx, sy) and (-sx, -sy)
  const ClassLayout layout[4] = {{1, 1, inner}, {1, 1, outer}, {1, -1, inner}, {1, -1, outer}};
  Dataset ds;
  ds.X.resize(4 * n_per_class, 2);
  ds.y.resize(4 * n_per_class);
  Index row = 0;
  for (int k = 0; k < 4; ++k) {
    for (Index i = 0; i < n_per_class; ++i, ++row) {
      const double flip = i % 2 == 0 ? 1.0 : -1.0;
      const double cx = flip * layout[k].sx * layout[k].scale;
      const double cy = flip * layout[k].sy * layout[k].scale;
      ds.X(row, 0) = cx + cluster_std * rng.normal();
      ds.X(row, 1) = cy + cluster_std * rng.normal();
      ds.y(row) = k + 1;
    }
  }
  ds.feature_names = {"x1", "x2"};
  ds.label_name = "label";
  ds.label_kind = LabelKind::multiclass;
  return ds;
}

}  // namespace sigp
