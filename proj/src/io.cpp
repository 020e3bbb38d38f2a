#include "io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skrock/error.hpp"

namespace skrock::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "flat float64 files assume a little-endian host");

namespace {

std::ifstream open_in(const fs::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// Next whitespace-delimited PNM header token, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw IoError("truncated PGM header");
  return tok;
}

}  // namespace

Matrix read_pgm(const fs::path& path) {
  auto in = open_in(path, true);
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P2") throw IoError(path.string() + " is not a PGM file");
  const long cols = std::stol(pnm_token(in));
  const long rows = std::stol(pnm_token(in));
  const long maxval = std::stol(pnm_token(in));
  if (cols < 1 || rows < 1 || maxval < 1 || maxval > 65535) throw IoError("invalid PGM header in " + path.string());

  Matrix img(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      long v = 0;
      if (magic == "P2") {
        v = std::stol(pnm_token(in));
      } else if (maxval < 256) {
        const int c = in.get();
        if (c == EOF) throw IoError("truncated PGM data in " + path.string());
        v = c;
      } else {
        const int hi = in.get();
        const int lo = in.get();
        if (lo == EOF) throw IoError("truncated PGM data in " + path.string());
        v = (hi << 8) | lo;
      }
      img(i, j) = static_cast<double>(v);
    }
  }
  return img;
}

void write_pgm(const fs::path& path, const Matrix& image, int maxval) {
  if (maxval < 1 || maxval > 65535) throw InvalidArgument("PGM maxval must lie in [1, 65535]");
  auto out = open_out(path, true);
  out << "P5\n" << image.cols() << ' ' << image.rows() << '\n' << maxval << '\n';
  for (Eigen::Index i = 0; i < image.rows(); ++i) {
    for (Eigen::Index j = 0; j < image.cols(); ++j) {
      const double v = std::clamp(std::round(image(i, j)), 0.0, static_cast<double>(maxval));
      const auto u = static_cast<unsigned>(v);
      if (maxval < 256) {
        out.put(static_cast<char>(u));
      } else {
        out.put(static_cast<char>(u >> 8));
        out.put(static_cast<char>(u & 0xff));
      }
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_doubles(const fs::path& path, const double* data, std::size_t count) {
  auto out = open_out(path, true);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> read_doubles(const fs::path& path) {
  auto in = open_in(path, true);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(double) != 0) throw IoError(path.string() + " is not a float64 array");
  in.seekg(0);
  std::vector<double> v(bytes / sizeof(double));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("read failed for " + path.string());
  return v;
}

Matrix read_raw_image(const fs::path& path) {
  const json meta = read_json(fs::path(path.string() + ".json"));
  const auto rows = meta.at("rows").get<Eigen::Index>();
  const auto cols = meta.at("cols").get<Eigen::Index>();
  const std::vector<double> v = read_doubles(path);
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw IoError(path.string() + " holds " + std::to_string(v.size()) + " values, sidecar says " +
                  std::to_string(rows) + "x" + std::to_string(cols));
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(v.data(), rows, cols);
}

void write_raw_image(const fs::path& path, const Matrix& image) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = image;
  write_doubles(path, rm.data(), static_cast<std::size_t>(rm.size()));
  write_json(fs::path(path.string() + ".json"), json{{"rows", image.rows()}, {"cols", image.cols()}});
}

Matrix read_image(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return read_pgm(path);
  return read_raw_image(path);
}

Matrix read_csv_matrix(const fs::path& path) {
  auto in = open_in(path, false);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("non-numeric CSV cell '" + cell + "' in " + path.string());
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) throw IoError("ragged CSV in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + " holds no data");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

// CsvWriter

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
  for (std::size_t i = 0; i < header.size(); ++i) buffer_ += (i ? "," : "") + header[i];
  buffer_ += '\n';
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (row_open_) buffer_ += ',';
  buffer_ += v;
  row_open_ = true;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(fmt(v)); }
CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  buffer_ += '\n';
  row_open_ = false;
}

void CsvWriter::close() {
  if (closed_) return;
  auto out = open_out(path_, true);
  out << buffer_;
  if (!out) throw IoError("write failed for " + path_.string());
  closed_ = true;
}

std::string sha256_file(const fs::path& path) {
  auto in = open_in(path, true);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 0xf];
  }
  return s;
}

json config_to_json(const SamplerConfig& c) {
  return json{{"kernel", to_string(c.kernel)},
              {"delta", c.delta},
              {"stages", c.stages},
              {"eta", c.eta},
              {"seed", c.seed},
              {"n_iterations", c.n_iterations},
              {"burn_in", c.burn_in},
              {"thinning", c.thinning},
              {"store_trace_statistic", c.store_trace_statistic},
              {"store_samples", c.store_samples}};
}

SamplerConfig config_from_json(const json& j) {
  SamplerConfig c;
  c.kernel = kernel_from_string(j.at("kernel").get<std::string>());
  c.delta = j.at("delta").get<double>();
  c.stages = j.value("stages", 1);
  c.eta = j.value("eta", kDefaultDamping);
  c.seed = j.value("seed", std::uint64_t{0});
  c.n_iterations = j.value("n_iterations", std::int64_t{0});
  c.burn_in = j.value("burn_in", std::int64_t{0});
  c.thinning = j.value("thinning", std::int64_t{1});
  c.store_trace_statistic = j.value("store_trace_statistic", true);
  c.store_samples = j.value("store_samples", true);
  return c;
}

TraceFiles write_trace(const fs::path& dir, const std::string& stem, const ChainTrace& trace, const json& extra) {
  TraceFiles f{dir / (stem + ".json"), dir / (stem + ".samples.bin"), dir / (stem + ".logpi.csv")};
  write_doubles(f.samples, trace.samples.data(), static_cast<std::size_t>(trace.samples.size()));

  CsvWriter csv(f.statistic, {"iteration", "log_pi_lambda"});
  for (Eigen::Index r = 0; r < trace.trace_statistic.size(); ++r) {
    csv.cell(trace.iterations.at(static_cast<std::size_t>(r))).cell(trace.trace_statistic[r]).end_row();
  }
  csv.close();

  json h = extra;
  h["dimension"] = trace.samples.cols();
  h["stored_iterations"] = trace.samples.rows();
  h["config"] = config_to_json(trace.config);
  h["gradient_evals"] = trace.gradient_evals;
  h["seed"] = trace.config.seed;
  h["init"] = trace.init_label;
  h["wall_time"] = trace.wall_time;
  h["samples_file"] = f.samples.filename().string();
  h["statistic_file"] = f.statistic.filename().string();
  write_json(f.header, h);
  return f;
}

ChainTrace read_trace(const fs::path& header, json* header_out) {
  const json h = read_json(header);
  ChainTrace t;
  t.config = config_from_json(h.at("config"));
  t.gradient_evals = h.at("gradient_evals").get<std::int64_t>();
  t.wall_time = h.value("wall_time", 0.0);
  t.init_label = h.value("init", std::string("zeros"));
  const auto d = h.at("dimension").get<Eigen::Index>();
  const auto n = h.at("stored_iterations").get<Eigen::Index>();
  const fs::path dir = header.parent_path();
  const std::vector<double> raw = read_doubles(dir / h.at("samples_file").get<std::string>());
  if (static_cast<Eigen::Index>(raw.size()) != n * d) throw IoError("sample file size does not match its header");
  t.samples = Eigen::Map<const SampleMatrix>(raw.data(), n, d);
  for (Eigen::Index k = 1; k <= n; ++k) t.iterations.push_back(t.config.burn_in + k * t.config.thinning);

  const fs::path stat = dir / h.at("statistic_file").get<std::string>();
  auto in = open_in(stat, false);
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  t.trace_statistic = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (header_out) *header_out = h;
  return t;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path, false);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  auto in = open_in(path, false);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace skrock::io
