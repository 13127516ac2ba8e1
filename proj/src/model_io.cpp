#include "sigp/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sigp/errors.hpp"

namespace sigp {

namespace {

using nlohmann::json;

constexpr const char* kSigpTag = "sigp-model";
constexpr const char* kGpTag = "exact-gp-model";

// Minimal writer: keys in insertion order, reals via format_real.
class Writer {
 public:
  void open() { out_ << '{'; first_ = true; }
  void close() { out_ << '}'; first_ = false; }

  void key(const std::string& k) {
    if (!first_) out_ << ',';
    out_ << "\n\"" << k << "\":";
    first_ = false;
  }
  void str(const std::string& k, const std::string& v) { key(k); out_ << '"' << v << '"'; }
  void integer(const std::string& k, long long v) { key(k); out_ << v; }
  void real(const std::string& k, double v) { key(k); out_ << format_real(v); }
  template <typename Derived>
  void reals(const std::string& k, const Eigen::DenseBase<Derived>& m) {
    key(k);
    out_ << '[';
    bool first = true;
    // row-major
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (!first) out_ << ',';
        out_ << format_real(m(i, j));
        first = false;
      }
    }
    out_ << ']';
  }
  void reals(const std::string& k, const std::vector<double>& v) {
    reals(k, Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  }
  void ints(const std::string& k, const std::vector<Index>& v) {
    key(k);
    out_ << '[';
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
    out_ << ']';
  }
  std::string text() const { return out_.str() + "\n"; }
  std::ostringstream& raw() { return out_; }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

void write_kernel(Writer& w, const KernelSpec& k) {
  w.key("kernel");
  w.open();
  w.str("family", std::string(to_string(k.family)));
  w.real("lengthscale", k.lengthscale);
  w.real("variance_scale", k.variance_scale);
  w.close();
}

void write_standardizer(Writer& w, const std::optional<Standardizer>& s) {
  if (!s) return;
  w.key("standardizer");
  w.open();
  w.integer("input_dim", s->input_dim);
  w.ints("kept", s->kept);
  w.reals("means", s->means);
  w.reals("stds", s->stds);
  w.close();
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw DataError(std::string("model file: missing field '") + name + "'");
  return j.at(name);
}

double get_real(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) throw DataError(std::string("model file: field '") + name + "' is not a number");
  return v.get<double>();
}

Index get_int(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer()) throw DataError(std::string("model file: field '") + name + "' is not an integer");
  return v.get<Index>();
}

Matrix get_matrix(const json& j, const char* name, Index rows, Index cols) {
  const json& v = field(j, name);
  if (!v.is_array() || static_cast<Index>(v.size()) != rows * cols) {
    throw DataError(std::string("model file: field '") + name + "' must hold " + std::to_string(rows * cols) +
                    " numbers");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index c = 0; c < cols; ++c) {
      const json& e = v[static_cast<std::size_t>(i * cols + c)];
      if (!e.is_number()) throw DataError(std::string("model file: non-number in '") + name + "'");
      m(i, c) = e.get<double>();
    }
  }
  return m;
}

Vector get_vector(const json& j, const char* name, Index size) { return get_matrix(j, name, size, 1).col(0); }

std::vector<double> get_reals(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array()) throw DataError(std::string("model file: field '") + name + "' must be an array");
  const Vector x = get_vector(j, name, static_cast<Index>(v.size()));
  return {x.data(), x.data() + x.size()};
}

KernelSpec read_kernel(const json& j) {
  const json& k = field(j, "kernel");
  KernelSpec spec;
  try {
    spec.family = kernel_family_from_string(field(k, "family").get<std::string>());
  } catch (const json::exception&) {
    throw DataError("model file: kernel family must be a string");
  }
  spec.lengthscale = get_real(k, "lengthscale");
  spec.variance_scale = get_real(k, "variance_scale");
  spec.validate();
  return spec;
}

std::optional<Standardizer> read_standardizer(const json& j) {
  if (!j.contains("standardizer")) return std::nullopt;
  const json& s = j.at("standardizer");
  Standardizer out;
  out.input_dim = get_int(s, "input_dim");
  const json& kept = field(s, "kept");
  if (!kept.is_array()) throw DataError("model file: standardizer.kept must be an array");
  for (const auto& e : kept) {
    if (!e.is_number_integer()) throw DataError("model file: standardizer.kept must hold integers");
    const Index k = e.get<Index>();
    if (k < 0 || k >= out.input_dim) throw DataError("model file: standardizer.kept index out of range");
    out.kept.push_back(k);
  }
  const auto size = static_cast<Index>(out.kept.size());
  out.means = get_vector(s, "means", size);
  out.stds = get_vector(s, "stds", size);
  return out;
}

json parse_envelope(const std::string& text, const char* tag) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  const json& format = field(j, "format");
  if (!format.is_string() || format.get<std::string>() != tag) {
    throw DataError(std::string("model file: expected format '") + tag + "'");
  }
  const Index version = get_int(j, "format_version");
  if (version != kModelFormatVersion) {
    throw DataError("model file: unsupported format_version " + std::to_string(version));
  }
  return j;
}

void write_head(Writer& w, const SigpModel& m) {
  w.open();
  write_kernel(w, m.kernel);
  w.integer("n", m.n());
  w.integer("d", m.dim());
  w.integer("m", m.rank());
  w.reals("X_train", m.x_train);
  w.reals("W", m.W);
  w.reals("Sigma_beta", m.sigma_beta);
  w.real("sigma2", m.sigma2);
  w.reals("alpha", m.alpha);
  w.real("c", m.c);
  w.reals("train_K_row_means", m.train_k_row_means);
  w.reals("beta", m.beta);
  w.reals("Delta", m.delta);
  w.close();
}

SigpModel read_head(const json& j) {
  SigpModel m;
  m.kernel = read_kernel(j);
  const Index n = get_int(j, "n");
  const Index d = get_int(j, "d");
  const Index r = get_int(j, "m");
  if (n < 1 || d < 1 || r < 1 || r > n) throw DataError("model file: invalid n/d/m");
  m.x_train = get_matrix(j, "X_train", n, d);
  m.W = get_matrix(j, "W", n, r);
  m.sigma_beta = get_matrix(j, "Sigma_beta", r, r);
  m.sigma2 = get_real(j, "sigma2");
  m.alpha = get_vector(j, "alpha", r);
  m.c = get_real(j, "c");
  m.train_k_row_means = get_vector(j, "train_K_row_means", n);
  m.beta = get_vector(j, "beta", r);
  m.delta = get_matrix(j, "Delta", r, r);
  try {
    m.validate();
  } catch (const Error& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  return m;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::regression:
      return "regression";
    case Task::binary:
      return "binary";
    case Task::multiclass:
      return "multiclass";
  }
  return "regression";
}

Task task_from_string(std::string_view name) {
  if (name == "regression") return Task::regression;
  if (name == "binary") return Task::binary;
  if (name == "multiclass") return Task::multiclass;
  throw DataError("unknown task '" + std::string(name) + "'");
}

std::string serialize(const SigpBundle& bundle) {
  if (bundle.heads.empty()) throw DomainError("serialize: bundle has no heads");
  Writer w;
  w.open();
  w.str("format", kSigpTag);
  w.integer("format_version", kModelFormatVersion);
  w.str("task", std::string(to_string(bundle.task)));
  w.reals("labels", bundle.labels);
  w.reals("tau", bundle.tau);
  write_standardizer(w, bundle.standardizer);
  w.key("heads");
  w.raw() << '[';
  for (std::size_t k = 0; k < bundle.heads.size(); ++k) {
    if (k) w.raw() << ',';
    write_head(w, bundle.heads[k]);
  }
  w.raw() << ']';
  w.close();
  return w.text();
}

SigpBundle deserialize_sigp(const std::string& text) {
  const json j = parse_envelope(text, kSigpTag);
  SigpBundle b;
  const json& task = field(j, "task");
  if (!task.is_string()) throw DataError("model file: task must be a string");
  b.task = task_from_string(task.get<std::string>());
  b.labels = get_reals(j, "labels");
  const std::vector<double> tau = get_reals(j, "tau");
  b.tau = Eigen::Map<const Vector>(tau.data(), static_cast<Index>(tau.size()));
  b.standardizer = read_standardizer(j);
  const json& heads = field(j, "heads");
  if (!heads.is_array() || heads.empty()) throw DataError("model file: heads must be a non-empty array");
  for (const auto& h : heads) b.heads.push_back(read_head(h));
  const std::size_t want = b.task == Task::multiclass ? b.heads.size() : (b.task == Task::binary ? 2 : 0);
  if (b.labels.size() != want || (b.task != Task::multiclass && b.heads.size() != 1)) {
    throw DataError("model file: labels/heads do not match the task");
  }
  if (b.standardizer && b.standardizer->output_dim() != b.heads.front().dim()) {
    throw DataError("model file: standardizer output does not match the model input dimension");
  }
  return b;
}

std::string serialize(const GpBundle& bundle) {
  const ExactGpModel& m = bundle.model;
  Writer w;
  w.open();
  w.str("format", kGpTag);
  w.integer("format_version", kModelFormatVersion);
  write_kernel(w, m.kernel);
  w.integer("n", m.x_train.rows());
  w.integer("d", m.x_train.cols());
  w.reals("X_train", m.x_train);
  w.real("noise2", m.noise2);
  w.real("jitter", m.jitter);
  w.reals("dual_weights", m.dual_weights);
  w.str("mean", std::string(to_string(m.mean)));
  w.reals("mean_coef", m.mean_coef);
  w.real("log_marginal", m.log_marginal);
  write_standardizer(w, bundle.standardizer);
  w.close();
  return w.text();
}

GpBundle deserialize_gp(const std::string& text) {
  const json j = parse_envelope(text, kGpTag);
  GpBundle b;
  ExactGpModel& m = b.model;
  m.kernel = read_kernel(j);
  const Index n = get_int(j, "n");
  const Index d = get_int(j, "d");
  if (n < 1 || d < 1) throw DataError("model file: invalid n/d");
  m.x_train = get_matrix(j, "X_train", n, d);
  m.noise2 = get_real(j, "noise2");
  m.jitter = get_real(j, "jitter");
  if (!(m.noise2 > 0.0) || m.jitter < 0.0) throw DataError("model file: invalid noise2/jitter");
  m.dual_weights = get_vector(j, "dual_weights", n);
  const json& mean = field(j, "mean");
  if (!mean.is_string()) throw DataError("model file: mean must be a string");
  try {
    m.mean = gp_mean_from_string(mean.get<std::string>());
  } catch (const DomainError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  m.mean_coef = get_vector(j, "mean_coef", m.mean == GpMean::linear ? d + 1 : 0);
  m.log_marginal = get_real(j, "log_marginal");
  b.standardizer = read_standardizer(j);
  return b;
}

void save_model(const std::filesystem::path& path, const SigpBundle& bundle) {
  write_file_atomic(path, serialize(bundle));
}

void save_model(const std::filesystem::path& path, const GpBundle& bundle) {
  write_file_atomic(path, serialize(bundle));
}

SigpBundle load_sigp_model(const std::filesystem::path& path) { return deserialize_sigp(read_text(path)); }

GpBundle load_gp_model(const std::filesystem::path& path) { return deserialize_gp(read_text(path)); }

std::string model_format(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  const json& f = field(j, "format");
  if (!f.is_string()) throw DataError("model file: format must be a string");
  return f.get<std::string>();
}

}  // namespace sigp
