#include "gpmkl/io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gpmkl/error.hpp"

namespace gpmkl {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kVolumeMagic = {'G', 'P', 'M', 'K'};
constexpr const char* kDatasetHeader = "gpmkl-dataset 1";
constexpr const char* kModelHeader = "gpmkl-model 1";
constexpr const char* kReportHeader = "gpmkl-cv-report 1";

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return v;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return in;
}

// Whitespace-separated tokens of one header line.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const std::string& expected_key) {
    std::string line;
    if (!std::getline(in_, line)) throw FormatError("unexpected end of file, wanted '" + expected_key + "'");
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != expected_key) throw FormatError("expected '" + expected_key + "', found '" + key + "'");
    return ss;
  }

 private:
  std::istream& in_;
};

template <typename T>
T take(std::istringstream& ss, const char* what) {
  T v{};
  if (!(ss >> v)) throw FormatError(std::string("bad value for ") + what);
  return v;
}

double take_double(std::istringstream& ss, const char* what) {
  std::string tok;
  if (!(ss >> tok)) throw FormatError(std::string("missing value for ") + what);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) throw FormatError(std::string("bad number for ") + what);
  return v;
}

void write_vector(std::ostream& out, const char* key, const Eigen::VectorXd& v) {
  out << key << ' ' << v.size();
  for (double x : v) out << ' ' << format17(x);
  out << '\n';
}

Eigen::VectorXd read_vector(LineReader& lines, const char* key) {
  auto ss = lines.next(key);
  const auto n = take<Eigen::Index>(ss, key);
  if (n < 0) throw FormatError(std::string("negative length for ") + key);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = take_double(ss, key);
  return v;
}


}  // namespace

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_volume(const fs::path& path, const Volume& volume) {
  volume.dims.validate();
  if (volume.values.size() != volume.dims.size()) throw FormatError("volume size does not match dims");
  auto out = open_out(path, std::ios::binary);
  out.write(kVolumeMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(volume.dims.nx));
  put_u32(out, static_cast<std::uint32_t>(volume.dims.ny));
  put_u32(out, static_cast<std::uint32_t>(volume.dims.nz));
  for (float v : volume.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

Volume read_volume(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kVolumeMagic.data(), 4) != 0) {
    throw FormatError("'" + path.string() + "' is not a GPMK volume");
  }
  Volume v;
  v.dims = {get_u32(bytes.data() + 4), get_u32(bytes.data() + 8), get_u32(bytes.data() + 12)};
  if (v.dims.nx == 0 || v.dims.ny == 0 || v.dims.nz == 0) throw FormatError("volume has a zero dimension");
  if (bytes.size() != 16 + 4 * v.dims.size()) {
    throw FormatError("'" + path.string() + "' has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(16 + 4 * v.dims.size()));
  }
  v.values.resize(v.dims.size());
  for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = std::bit_cast<float>(get_u32(bytes.data() + 16 + 4 * i));
  return v;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  data.validate();
  fs::create_directories(dir);
  auto manifest = open_out(dir / "manifest.txt");
  manifest << kDatasetHeader << '\n';
  manifest << "dims " << data.dims.nx << ' ' << data.dims.ny << ' ' << data.dims.nz << '\n';
  manifest << "n " << data.size() << '\n';
  manifest << "classes " << data.n_classes << '\n';
  manifest << "layout " << data.layout << '\n';
  if (!data.ground_truth_bags.empty()) {
    manifest << "ground_truth_bags";
    for (auto b : data.ground_truth_bags) manifest << ' ' << b;
    manifest << '\n';
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "vol_%05zu.gpmk", i);
    Volume v{data.dims, std::vector<float>(data.dims.size())};
    for (std::size_t d = 0; d < v.values.size(); ++d) {
      const double x = data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
      v.values[d] = static_cast<float>(x);
    }
    write_volume(dir / name, v);
    manifest << "volume " << name << ' ' << data.labels[i] << '\n';
  }
  if (!manifest) throw FormatError("failed writing manifest in '" + dir.string() + "'");
}

Dataset read_dataset(const fs::path& dir) {
  auto in = open_in(dir / "manifest.txt");
  std::string header;
  std::getline(in, header);
  if (header != kDatasetHeader) throw FormatError("'" + dir.string() + "' has no gpmkl dataset manifest");

  Dataset data;
  std::size_t n = 0;
  bool have_dims = false, have_n = false;
  std::string line;
  std::vector<std::pair<std::string, int>> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "dims") {
      data.dims.nx = take<std::size_t>(ss, "dims");
      data.dims.ny = take<std::size_t>(ss, "dims");
      data.dims.nz = take<std::size_t>(ss, "dims");
      have_dims = true;
    } else if (key == "n") {
      n = take<std::size_t>(ss, "n");
      have_n = true;
    } else if (key == "classes") {
      data.n_classes = take<int>(ss, "classes");
    } else if (key == "layout") {
      data.layout = take<std::string>(ss, "layout");
    } else if (key == "ground_truth_bags") {
      std::size_t b;
      while (ss >> b) data.ground_truth_bags.push_back(b);
    } else if (key == "volume") {
      auto name = take<std::string>(ss, "volume");
      entries.emplace_back(std::move(name), take<int>(ss, "volume label"));
    } else {
      throw FormatError("unknown manifest key '" + key + "'");
    }
  }
  if (!have_dims || !have_n) throw FormatError("manifest lacks dims or n");
  if (entries.size() != n) throw FormatError("manifest lists " + std::to_string(entries.size()) + " volumes, expected " + std::to_string(n));
  try {
    data.dims.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }

  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(data.dims.size()));
  for (std::size_t i = 0; i < n; ++i) {
    const Volume v = read_volume(dir / entries[i].first);
    if (!(v.dims == data.dims)) throw FormatError("volume '" + entries[i].first + "' dims differ from manifest");
    for (std::size_t d = 0; d < v.values.size(); ++d) {
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = static_cast<double>(v.values[d]);
    }
    data.labels.push_back(entries[i].second);
  }
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return data;
}

void write_model(std::ostream& out, const ModelBundle& bundle) {
  if (bundle.models.empty()) throw std::invalid_argument("model bundle is empty");
  const Eigen::MatrixXd& X = bundle.models.front().inputs();
  for (const auto& m : bundle.models) {
    if (m.inputs().rows() != X.rows() || m.inputs().cols() != X.cols() || m.inputs() != X) {
      throw std::invalid_argument("bundled models must share their training inputs");
    }
  }

  out << kModelHeader << '\n';
  out << "dims " << bundle.dims.nx << ' ' << bundle.dims.ny << ' ' << bundle.dims.nz << '\n';
  out << "classes " << bundle.classes.size();
  for (int c : bundle.classes) out << ' ' << c;
  out << '\n';
  out << "models " << bundle.models.size() << '\n';
  for (std::size_t k = 0; k < bundle.models.size(); ++k) {
    const TrainedModel& m = bundle.models[k];
    out << "model " << k << '\n';
    out << "task " << to_string(m.task) << '\n';
    out << "kernel " << to_string(m.spec.kind) << '\n';
    out << "layout " << m.spec.layout.describe() << '\n';
    out << "inference " << to_string(m.inference_used) << '\n';
    out << "fallback " << (m.fallback_triggered ? 1 : 0) << '\n';
    out << "iterations " << m.iterations << '\n';
    out << "lml " << format17(m.lml) << '\n';
    write_vector(out, "log_sigma_f", m.hp.log_sigma_f);
    write_vector(out, "log_ell", m.hp.log_ell);
    out << "log_sigma_n " << (m.hp.log_sigma_n ? format17(*m.hp.log_sigma_n) : std::string("none")) << '\n';
    out << "mean_const " << format17(m.hp.mean_const) << '\n';
    if (const auto* reg = std::get_if<RegressionPosterior>(&m.posterior)) {
      write_vector(out, "alpha", reg->alpha);
    } else {
      const auto& lat = std::get<LatentPosterior>(m.posterior);
      write_vector(out, "targets", lat.y);
      write_vector(out, "pred_weights", lat.state.pred_weights);
      write_vector(out, "sqrt_precision", lat.state.sqrt_precision);
    }
    out << "end_model\n";
  }
  out << "training_inputs " << X.rows() << ' ' << X.cols() << '\n';
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(X(i, j)));
  if (!out) throw FormatError("failed writing model");
}

void write_model(const fs::path& path, const ModelBundle& bundle) {
  auto out = open_out(path, std::ios::binary);
  write_model(out, bundle);
}

ModelBundle read_model(std::istream& in) {
  std::string header;
  std::getline(in, header);
  if (header != kModelHeader) throw FormatError("not a gpmkl model file (or unsupported version)");
  LineReader lines(in);
  ModelBundle bundle;
  {
    auto ss = lines.next("dims");
    bundle.dims = {take<std::size_t>(ss, "dims"), take<std::size_t>(ss, "dims"), take<std::size_t>(ss, "dims")};
  }
  {
    auto ss = lines.next("classes");
    const auto k = take<std::size_t>(ss, "classes");
    for (std::size_t i = 0; i < k; ++i) bundle.classes.push_back(take<int>(ss, "classes"));
  }
  std::size_t n_models = 0;
  {
    auto ss = lines.next("models");
    n_models = take<std::size_t>(ss, "models");
    if (n_models == 0) throw FormatError("model file holds no models");
  }

  struct Pending {
    Task task;
    KernelSpec spec;
    HyperParams hp;
    InferenceMethod inference;
    bool fallback;
    int iterations;
    double lml;
    Eigen::VectorXd alpha, targets, weights, precision;
  };
  std::vector<Pending> pending;
  for (std::size_t k = 0; k < n_models; ++k) {
    Pending p;
    lines.next("model");
    {
      auto ss = lines.next("task");
      const auto t = take<std::string>(ss, "task");
      if (t != "regression" && t != "classification") throw FormatError("unknown task '" + t + "'");
      p.task = t == "regression" ? Task::Regression : Task::BinaryClassification;
    }
    try {
      auto ks = lines.next("kernel");
      p.spec.kind = parse_kernel_kind(take<std::string>(ks, "kernel"));
      auto ls = lines.next("layout");
      p.spec.layout = parse_layout(take<std::string>(ls, "layout"), bundle.dims);
      auto is = lines.next("inference");
      p.inference = parse_inference(take<std::string>(is, "inference"));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
    {
      auto ss = lines.next("fallback");
      p.fallback = take<int>(ss, "fallback") != 0;
    }
    {
      auto ss = lines.next("iterations");
      p.iterations = take<int>(ss, "iterations");
    }
    {
      auto ss = lines.next("lml");
      p.lml = take_double(ss, "lml");
    }
    p.hp.log_sigma_f = read_vector(lines, "log_sigma_f");
    p.hp.log_ell = read_vector(lines, "log_ell");
    {
      auto ss = lines.next("log_sigma_n");
      std::string tok;
      ss >> tok;
      if (tok != "none") {
        std::istringstream one(tok);
        p.hp.log_sigma_n = take_double(one, "log_sigma_n");
      }
    }
    {
      auto ss = lines.next("mean_const");
      p.hp.mean_const = take_double(ss, "mean_const");
    }
    if (p.task == Task::Regression) {
      p.alpha = read_vector(lines, "alpha");
    } else {
      p.targets = read_vector(lines, "targets");
      p.weights = read_vector(lines, "pred_weights");
      p.precision = read_vector(lines, "sqrt_precision");
    }
    lines.next("end_model");
    pending.push_back(std::move(p));
  }

  Eigen::Index rows = 0, cols = 0;
  {
    auto ss = lines.next("training_inputs");
    rows = take<Eigen::Index>(ss, "training_inputs");
    cols = take<Eigen::Index>(ss, "training_inputs");
  }
  if (rows <= 0 || cols <= 0) throw FormatError("bad training input shape");
  const auto count = static_cast<std::size_t>(rows * cols);
  std::vector<unsigned char> raw(8 * count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw FormatError("truncated training inputs");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after training inputs");
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) X(i, j) = std::bit_cast<double>(get_u64(raw.data() + 8 * static_cast<std::size_t>(i * cols + j)));

  for (auto& p : pending) {
    TrainedModel m;
    m.task = p.task;
    m.spec = p.spec;
    m.hp = p.hp;
    m.lml = p.lml;
    m.inference_used = p.inference;
    m.fallback_triggered = p.fallback;
    m.iterations = p.iterations;
    try {
      if (p.task == Task::Regression) {
        m.posterior = restore_exact(X, p.spec, p.hp, p.alpha);
      } else {
        m.posterior = restore_latent(X, p.targets, p.spec, p.hp, p.inference, p.weights, p.precision, p.lml);
      }
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("inconsistent model: ") + e.what());
    }
    bundle.models.push_back(std::move(m));
  }
  return bundle;
}

ModelBundle read_model(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_model(in);
}

void write_cv_report(std::ostream& out, const CVReport& report) {
  out << kReportHeader << '\n';
  out << "kernel: " << report.kernel << '\n';
  out << "layout: " << report.layout << '\n';
  out << "inference: " << report.inference << '\n';
  out << "folds: " << report.folds.size() << '\n';
  out << "seed: " << report.seed << '\n';
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    const FoldResult& r = report.folds[f];
    out << "fold " << f << ": ";
    if (!r.ok()) {
      std::string msg = r.error;
      for (char& ch : msg) {
        if (ch == '\n') ch = ' ';
      }
      out << "error=" << msg << '\n';
      continue;
    }
    out << "accuracy=" << format6(r.accuracy) << " sensitivity=" << format6(r.sensitivity)
        << " specificity=" << format6(r.specificity) << " auc=" << format6(r.auc)
        << " inference=" << to_string(r.inference) << " fallback=" << (r.fallback ? 1 : 0) << '\n';
  }
  const auto summary = [&](const char* name, const Summary& s) {
    out << "mean_" << name << ": " << format6(s.mean) << '\n';
    out << "std_" << name << ": " << format6(s.stddev) << '\n';
  };
  summary("accuracy", report.accuracy);
  summary("sensitivity", report.sensitivity);
  summary("specificity", report.specificity);
  summary("auc", report.auc);
  if (report.pooled_auc) out << "pooled_auc: " << format6(*report.pooled_auc) << '\n';
  out << "fallback_count: " << report.fallback_count << '\n';
  out << "failed_folds: " << report.failed_folds << '\n';
  out << "bags: " << report.num_bags() << '\n';
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    const FoldResult& r = report.folds[f];
    if (!r.ok()) continue;
    out << "weights " << f << ':';
    for (double w : r.weights) out << ' ' << format6(w);
    out << '\n';
  }
}

void write_cv_report(const fs::path& path, const CVReport& report) {
  auto out = open_out(path);
  write_cv_report(out, report);
  if (!out) throw FormatError("failed writing report '" + path.string() + "'");
}

Eigen::MatrixXd read_report_weights(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != kReportHeader) throw FormatError("'" + path.string() + "' is not a gpmkl CV report");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.rfind("weights ", 0) != 0) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw FormatError("malformed weights line");
    std::istringstream ss(line.substr(colon + 1));
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) throw FormatError("bad weight '" + tok + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("weight rows differ in length");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw FormatError("report holds no mixing weights");
  Eigen::MatrixXd W(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) W(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return W;
}

}  // namespace gpmkl
