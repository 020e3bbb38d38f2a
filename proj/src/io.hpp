#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skrock/samplers.hpp"
#include "skrock/types.hpp"

namespace skrock::io {

using json = nlohmann::json;

/// Binary (P5) or ASCII (P2) greymap with maxval up to 65535. Values are
/// returned in grey levels.
Matrix read_pgm(const std::filesystem::path& path);
/// Writes a P5 greymap, clamping to [0, maxval] after rounding.
void write_pgm(const std::filesystem::path& path, const Matrix& image, int maxval = 255);

/// Flat little-endian float64 file, row-major, with a JSON sidecar
/// <path>.json holding {rows, cols}.
Matrix read_raw_image(const std::filesystem::path& path);
void write_raw_image(const std::filesystem::path& path, const Matrix& image);

/// Dispatches on extension: .pgm, otherwise flat float64 with sidecar.
Matrix read_image(const std::filesystem::path& path);

/// Numeric CSV without header; blank lines and lines starting with '#' are skipped.
Matrix read_csv_matrix(const std::filesystem::path& path);

/// Flat float64 dump of a row-major buffer.
void write_doubles(const std::filesystem::path& path, const double* data, std::size_t count);
std::vector<double> read_doubles(const std::filesystem::path& path);

/// Round-trip stable text for a double.
std::string fmt(double v);

/// Minimal CSV writer; the header is written on construction.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  void end_row();
  /// Nothing reaches disk until close().
  void close();

 private:
  std::string buffer_;
  std::filesystem::path path_;
  bool row_open_ = false;
  bool closed_ = false;
};

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

json config_to_json(const SamplerConfig& c);
SamplerConfig config_from_json(const json& j);

struct TraceFiles {
  std::filesystem::path header;     // <stem>.json
  std::filesystem::path samples;    // <stem>.samples.bin
  std::filesystem::path statistic;  // <stem>.logpi.csv
};

/// Persists a trace under dir with the given stem. extra is merged into the
/// JSON header.
TraceFiles write_trace(const std::filesystem::path& dir, const std::string& stem, const ChainTrace& trace,
                       const json& extra = json::object());
/// Loads a trace from its JSON header path.
ChainTrace read_trace(const std::filesystem::path& header, json* header_out = nullptr);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace skrock::io
