#pragma once

// Matrix files (dense CSV, MatrixMarket), result tables and run manifests.

#include <gsvdnmf/pipeline.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace gsvdnmf::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, long line, const std::string& msg);
  long line() const { return line_; }

 private:
  long line_;
};

enum class MatrixFormat { csv, matrix_market };

struct LoadOptions {
  bool require_nonnegative = false;
};

/// Format is chosen by content: a leading "%%MatrixMarket" banner selects
/// MatrixMarket, anything else is parsed as dense CSV.
MatrixXd load_matrix(const std::filesystem::path& path, const LoadOptions& opts = {});
MatrixXd parse_csv(const std::string& text, const std::string& origin = "<string>");
MatrixXd parse_matrix_market(const std::string& text, const std::string& origin = "<string>");
MatrixFormat detect_format(const std::string& text);

/// One row per line, 17 significant digits, zeros written as "0".
std::string format_csv(const MatrixXd& m);
void save_matrix_csv(const MatrixXd& m, const std::filesystem::path& path);

std::string format_double(double v);

/// 64-bit FNV-1a over the raw file bytes.
std::uint64_t file_checksum(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

struct RunManifest {
  std::string tool = "gsvdnmf";
  std::string version;
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::uint64_t> seeds;
  std::string dataset_path;
  std::string dataset_checksum;
  Index dataset_rows = 0;
  Index dataset_cols = 0;
  std::vector<std::string> outputs;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

/// Writes W.csv, H.csv and manifest.json into dir (created if missing).
/// Returns the list of files written.
std::vector<std::string> save_factors(const NmfFactors<double>& factors, const std::filesystem::path& dir,
                                      RunManifest manifest);

std::string format_trials_csv(const std::vector<TrialResult>& results);
std::string format_timings_csv(const std::vector<TrialResult>& results);
std::string format_histogram_csv(const DiagonalHistogram& hist);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gsvdnmf::io
