#include <gsvdnmf/io.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gsvdnmf::io {

namespace fs = std::filesystem;

ParseError::ParseError(const std::string& path, long line, const std::string& msg)
    : std::runtime_error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg),
      line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view tok, double& out) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> lines_of(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t pos = rest.find('\n');
    std::string_view line = rest.substr(0, pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return lines;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

MatrixFormat detect_format(const std::string& text) {
  return text.rfind("%%MatrixMarket", 0) == 0 ? MatrixFormat::matrix_market : MatrixFormat::csv;
}

MatrixXd parse_csv(const std::string& text, const std::string& origin) {
  const auto lines = lines_of(text);
  std::vector<std::vector<double>> rows;
  bool first_content = true;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string_view line = trim(lines[ln]);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto f : fields) {
      double v = 0;
      if (!parse_number(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first_content) {  // header row
        first_content = false;
        continue;
      }
      throw ParseError(origin, static_cast<long>(ln + 1), "malformed CSV row (non-numeric field)");
    }
    first_content = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(origin, static_cast<long>(ln + 1),
                       "expected " + std::to_string(rows.front().size()) + " fields, found " +
                           std::to_string(row.size()));
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw ParseError(origin, static_cast<long>(ln + 1), "non-finite value");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(origin, 0, "no numeric rows");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

MatrixXd parse_matrix_market(const std::string& text, const std::string& origin) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(origin, 0, "empty file");
  const auto banner = split_ws(lines[0]);
  if (banner.size() < 5 || banner[0] != "%%MatrixMarket" || lower(banner[1]) != "matrix") {
    throw ParseError(origin, 1, "bad MatrixMarket banner");
  }
  const std::string layout = lower(banner[2]);
  const std::string field = lower(banner[3]);
  const std::string symmetry = lower(banner[4]);
  if (layout != "array" && layout != "coordinate") throw ParseError(origin, 1, "unknown layout '" + layout + "'");
  if (field != "real" && field != "integer" && field != "double" && field != "pattern") {
    throw ParseError(origin, 1, "unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw ParseError(origin, 1, "unsupported symmetry '" + symmetry + "'");
  }
  if (field == "pattern" && layout == "array") throw ParseError(origin, 1, "pattern field requires coordinate layout");
  const bool symmetric = symmetry == "symmetric";

  std::size_t ln = 1;
  auto next_content = [&]() -> std::string_view {
    while (ln < lines.size()) {
      const std::string_view l = trim(lines[ln++]);
      if (!l.empty() && l.front() != '%') return l;
    }
    return {};
  };
  auto as_index = [&](std::string_view tok, long& out) {
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ParseError(origin, static_cast<long>(ln), "bad integer '" + std::string(tok) + "'");
    }
  };

  const std::string_view size_line = next_content();
  if (size_line.empty()) throw ParseError(origin, static_cast<long>(ln), "missing size line");
  const auto sizes = split_ws(size_line);
  long rows = 0, cols = 0, nnz = 0;
  if (layout == "array") {
    if (sizes.size() != 2) throw ParseError(origin, static_cast<long>(ln), "array size line needs 2 integers");
    as_index(sizes[0], rows);
    as_index(sizes[1], cols);
  } else {
    if (sizes.size() != 3) throw ParseError(origin, static_cast<long>(ln), "coordinate size line needs 3 integers");
    as_index(sizes[0], rows);
    as_index(sizes[1], cols);
    as_index(sizes[2], nnz);
  }
  if (rows < 1 || cols < 1) throw ParseError(origin, static_cast<long>(ln), "empty matrix");
  if (symmetric && rows != cols) throw ParseError(origin, static_cast<long>(ln), "symmetric matrix must be square");

  MatrixXd m = MatrixXd::Zero(rows, cols);
  if (layout == "array") {
    // column-major; symmetric stores the lower triangle only
    for (long j = 0; j < cols; ++j) {
      for (long i = symmetric ? j : 0; i < rows; ++i) {
        const std::string_view l = next_content();
        double v = 0;
        if (l.empty()) throw ParseError(origin, static_cast<long>(ln), "unexpected end of data");
        if (!parse_number(l, v) || !std::isfinite(v)) {
          throw ParseError(origin, static_cast<long>(ln), "malformed value '" + std::string(l) + "'");
        }
        m(i, j) = v;
        if (symmetric) m(j, i) = v;
      }
    }
  } else {
    for (long e = 0; e < nnz; ++e) {
      const std::string_view l = next_content();
      if (l.empty()) throw ParseError(origin, static_cast<long>(ln), "unexpected end of data");
      const auto toks = split_ws(l);
      const std::size_t want = field == "pattern" ? 2 : 3;
      if (toks.size() != want) throw ParseError(origin, static_cast<long>(ln), "malformed coordinate entry");
      long i = 0, j = 0;
      as_index(toks[0], i);
      as_index(toks[1], j);
      if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError(origin, static_cast<long>(ln), "index out of range");
      double v = 1.0;
      if (field != "pattern" && (!parse_number(toks[2], v) || !std::isfinite(v))) {
        throw ParseError(origin, static_cast<long>(ln), "malformed value");
      }
      m(i - 1, j - 1) += v;
      if (symmetric && i != j) m(j - 1, i - 1) += v;
    }
  }
  return m;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

MatrixXd load_matrix(const fs::path& path, const LoadOptions& opts) {
  const std::string text = read_text(path);
  if (trim(text).empty()) throw ParseError(path.string(), 0, "empty file");
  MatrixXd m = detect_format(text) == MatrixFormat::matrix_market ? parse_matrix_market(text, path.string())
                                                                   : parse_csv(text, path.string());
  if (opts.require_nonnegative) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i)
        if (m(i, j) < 0) {
          throw ParseError(path.string(), 0,
                           "negative entry " + format_double(m(i, j)) + " at row " + std::to_string(i + 1) +
                               ", column " + std::to_string(j + 1) + "; NMF input must be nonnegative");
        }
  }
  return m;
}

std::string format_double(double v) {
  if (v == 0) return "0";
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_csv(const MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_matrix_csv(const MatrixXd& m, const fs::path& path) { write_text(path, format_csv(m)); }

std::uint64_t file_checksum(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = tool;
  j["version"] = version;
  j["command"] = command;
  j["config"] = config;
  j["seeds"] = seeds;
  j["dataset"] = {{"path", dataset_path}, {"checksum_fnv1a64", dataset_checksum},
                  {"rows", dataset_rows}, {"cols", dataset_cols}};
  j["outputs"] = outputs;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.tool = j.at("tool").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config");
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  const auto& d = j.at("dataset");
  m.dataset_path = d.at("path").get<std::string>();
  m.dataset_checksum = d.at("checksum_fnv1a64").get<std::string>();
  m.dataset_rows = d.at("rows").get<Index>();
  m.dataset_cols = d.at("cols").get<Index>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  return m;
}

void write_manifest(const RunManifest& manifest, const fs::path& path) {
  write_text(path, manifest.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& path) {
  return RunManifest::from_json(nlohmann::json::parse(read_text(path)));
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["r0"] = cfg.r0;
  j["k"] = cfg.k;
  j["epsilon0"] = cfg.epsilon0;
  j["epsilon"] = cfg.epsilon;
  j["svd_rank"] = cfg.effective_svd_rank();
  j["init"] = to_string(cfg.init.kind);
  j["seed"] = cfg.init.seed;
  j["max_iters"] = cfg.max_iters;
  return j;
}

std::vector<std::string> save_factors(const NmfFactors<double>& factors, const fs::path& dir, RunManifest manifest) {
  fs::create_directories(dir);
  const fs::path wpath = dir / "W.csv", hpath = dir / "H.csv", mpath = dir / "manifest.json";
  save_matrix_csv(factors.w, wpath);
  save_matrix_csv(factors.h, hpath);
  for (const auto& p : {wpath, hpath, mpath}) {
    if (std::find(manifest.outputs.begin(), manifest.outputs.end(), p.string()) == manifest.outputs.end()) {
      manifest.outputs.push_back(p.string());
    }
  }
  write_manifest(manifest, mpath);
  return {wpath.string(), hpath.string(), mpath.string()};
}

std::string format_trials_csv(const std::vector<TrialResult>& results) {
  std::string out = "trial_id,seed,fit_standard,fit_gsvd,distance,iters_standard,iters_gsvd_stage1,iters_gsvd_stage2\n";
  for (const auto& r : results) {
    out += std::to_string(r.trial_id) + ',' + std::to_string(r.seed) + ',' + format_double(r.fit_standard) + ',' +
           format_double(r.fit_gsvd) + ',' + format_double((r.fit_standard - r.fit_gsvd) / std::sqrt(2.0)) + ',' +
           std::to_string(r.iters_standard) + ',' + std::to_string(r.iters_gsvd_stage1) + ',' +
           std::to_string(r.iters_gsvd_stage2) + '\n';
  }
  return out;
}

std::string format_timings_csv(const std::vector<TrialResult>& results) {
  std::string out = "trial_id,seconds_standard,seconds_gsvd\n";
  for (const auto& r : results) {
    out += std::to_string(r.trial_id) + ',' + format_double(r.seconds_standard) + ',' +
           format_double(r.seconds_gsvd) + '\n';
  }
  return out;
}

std::string format_histogram_csv(const DiagonalHistogram& hist) {
  std::string out = "bin,lower,upper,count\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    out += std::to_string(b) + ',' + format_double(hist.edges[b]) + ',' + format_double(hist.edges[b + 1]) + ',' +
           std::to_string(hist.counts[b]) + '\n';
  }
  return out;
}

}  // namespace gsvdnmf::io
