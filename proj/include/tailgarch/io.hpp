#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tailgarch/common.hpp"
#include "tailgarch/estimators.hpp"
#include "tailgarch/inference.hpp"
#include "tailgarch/montecarlo.hpp"

namespace tailgarch {

/// FNV-1a over the raw bytes; stamped into report sidecars so a report can
/// be traced to the exact spec text that produced it.
inline std::uint64_t fnv1a_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input("cannot open file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("cannot open file '" + path + "' for writing");
  out << content;
  if (!out) throw invalid_input("write failed for '" + path + "'");
}

/// Shortest-round-trip style formatting used by every report writer, so
/// serial and parallel runs emit byte-identical files.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

enum class SeriesKind { Returns, Prices };

struct LoadOptions {
  std::string column;  ///< name (needs a header) or 0-based index; "" = 0
  SeriesKind kind = SeriesKind::Returns;
};

struct LoadedSeries {
  std::vector<double> values;   ///< returns (log-differenced for prices)
  std::size_t rows_read = 0;    ///< data rows seen (excluding the header)
  std::size_t skipped_rows = 0; ///< blank lines and missing cells
  std::string column_name;     ///< resolved column label
  bool had_header = false;
};

namespace detail {

inline bool parse_cell(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  return end != cell.c_str() && *end == '\0';
}

inline bool is_missing_cell(const std::string& cell) {
  if (cell.empty()) return true;
  const std::string lower = lower_copy(cell);
  return lower == "na" || lower == "nan" || lower == "null";
}

inline char detect_delimiter(const std::string& line) {
  if (line.find('\t') != std::string::npos) return '\t';
  if (line.find(';') != std::string::npos) return ';';
  if (line.find(',') != std::string::npos) return ',';
  return ' ';  // any whitespace
}

inline std::vector<std::string> split_row(const std::string& line,
                                          char delimiter) {
  std::vector<std::string> cells;
  if (delimiter == ' ') {
    std::istringstream stream(line);
    std::string cell;
    while (stream >> cell) cells.push_back(cell);
    return cells;
  }
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t pos = line.find(delimiter, start);
    const std::string piece =
        pos == std::string::npos ? line.substr(start)
                                 : line.substr(start, pos - start);
    cells.push_back(trim_copy(piece));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

} // namespace detail

/// Loads one numeric column from a delimited text file. The delimiter
/// (comma, semicolon, tab, or whitespace) and an optional header row are
/// detected from the content. Blank lines and missing cells are skipped
/// and counted; non-numeric data cells are an error that names the line.
/// For price data every value must be positive and the series is mapped
/// to log returns. Fewer than 20 usable returns raises invalid_data.
inline LoadedSeries load_returns(const std::string& path,
                                 const LoadOptions& options = {}) {
  const std::string text = read_text_file(path);

  std::vector<std::pair<std::size_t, std::string>> lines;  // (line no, text)
  std::size_t line_no = 0;
  std::size_t start = 0;
  std::size_t blank = 0;
  while (start <= text.size()) {
    const std::size_t eol = text.find('\n', start);
    std::string line = eol == std::string::npos
                           ? text.substr(start)
                           : text.substr(start, eol - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    const std::string stripped = detail::trim_copy(line);
    if (stripped.empty()) {
      if (eol == std::string::npos) break;
      ++blank;
      start = eol + 1;
      continue;
    }
    lines.emplace_back(line_no, stripped);
    if (eol == std::string::npos) break;
    start = eol + 1;
  }
  if (lines.empty()) throw invalid_data("file '" + path + "' has no data");
  // Trailing-newline bookkeeping: a final empty segment is not a blank row.
  if (blank > 0 && text.size() > 0 && text.back() == '\n') --blank;

  const char delimiter = detail::detect_delimiter(lines.front().second);
  const std::vector<std::string> first_row =
      detail::split_row(lines.front().second, delimiter);

  // Column resolution: explicit index, else header name, else column 0.
  std::size_t column_index = 0;
  bool index_explicit = false;
  if (!options.column.empty() &&
      options.column.find_first_not_of("0123456789") == std::string::npos) {
    column_index = std::stoul(options.column);
    index_explicit = true;
  }

  // Header detection: the target cell of the first row is non-numeric.
  double probe = 0.0;
  const std::size_t probe_index =
      column_index < first_row.size() ? column_index : 0;
  bool has_header = !detail::parse_cell(first_row[probe_index], probe) &&
                    !detail::is_missing_cell(first_row[probe_index]);

  std::string column_name;
  if (!options.column.empty() && !index_explicit) {
    if (!has_header)
      throw parse_error("column '" + options.column +
                        "' requested but file '" + path + "' has no header");
    bool found = false;
    for (std::size_t i = 0; i < first_row.size(); ++i) {
      if (detail::lower_copy(first_row[i]) ==
          detail::lower_copy(options.column)) {
        column_index = i;
        found = true;
        break;
      }
    }
    if (!found)
      throw parse_error("column '" + options.column + "' not found in '" +
                        path + "'");
    column_name = first_row[column_index];
  } else if (has_header && column_index < first_row.size()) {
    column_name = first_row[column_index];
  } else {
    column_name = "column " + std::to_string(column_index);
  }

  LoadedSeries out;
  out.had_header = has_header;
  out.column_name = column_name;
  out.skipped_rows = blank;

  std::vector<double> raw;
  raw.reserve(lines.size());
  for (std::size_t r = has_header ? 1 : 0; r < lines.size(); ++r) {
    const auto& [no, line] = lines[r];
    const std::vector<std::string> cells = detail::split_row(line, delimiter);
    ++out.rows_read;
    if (column_index >= cells.size() ||
        detail::is_missing_cell(cells[column_index])) {
      ++out.skipped_rows;
      continue;
    }
    double value = 0.0;
    if (!detail::parse_cell(cells[column_index], value))
      throw parse_error("line " + std::to_string(no) + " of '" + path +
                        "': cannot parse '" + cells[column_index] +
                        "' as a number");
    if (options.kind == SeriesKind::Prices && !(value > 0.0))
      throw invalid_data("line " + std::to_string(no) + " of '" + path +
                         "': price must be positive, got '" +
                         cells[column_index] + "'");
    raw.push_back(value);
  }

  if (options.kind == SeriesKind::Prices) {
    if (raw.size() < 2)
      throw invalid_data("price series in '" + path +
                         "' has fewer than 2 observations");
    out.values.resize(raw.size() - 1);
    for (std::size_t t = 1; t < raw.size(); ++t)
      out.values[t - 1] = std::log(raw[t] / raw[t - 1]);
  } else {
    out.values = std::move(raw);
  }

  if (out.values.size() < 20)
    throw invalid_data("series in '" + path + "' has " +
                       std::to_string(out.values.size()) +
                       " usable returns; need at least 20");
  return out;
}

/// One-row-per-estimator summary of an experiment, stable across thread
/// counts. Hypothesis columns carry the tested value in the header.
inline std::string render_summary_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "estimator,completed,failed,scale_failures,incomplete";
  const char* coords[3] = {"omega", "alpha", "beta"};
  for (const char* c : coords) out << ",bias_" << c;
  for (const char* c : coords) out << ",rmse_" << c;
  for (const char* c : coords) out << ",sd_" << c;
  for (const char* c : coords) out << ",ks_" << c;
  for (const char* c : coords) out << ",bias_tstat_" << c;
  out << ",coverage_beta";
  for (double b : result.spec.hypotheses) {
    char buf[40];
    std::snprintf(buf, sizeof buf, ",reject_%g", b);
    out << buf;
  }
  out << "\n";
  for (const EstimatorSummary& s : result.summaries) {
    out << s.token << ',' << s.completed << ',' << s.failed << ','
        << s.scale_failures << ',' << (s.incomplete ? 1 : 0);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(s.bias[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(s.rmse[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(s.std_dev[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(s.ks_ratio[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_number(s.bias_tstat[i]);
    out << ',' << format_number(s.coverage_beta);
    for (double r : s.rejection) out << ',' << format_number(r);
    out << "\n";
  }
  return out.str();
}

/// Raw per-replication estimates, for downstream analysis of a run.
/// Hypothesis tests are a summary-level quantity (they scale by the
/// cross-replication variance), so rows carry estimates and analytic
/// standard errors only.
inline std::string render_estimates_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "estimator,replication,fit_ok,omega,alpha,beta,scale_ok,se_omega,"
         "se_alpha,se_beta\n";
  for (std::size_t e = 0; e < result.records.size(); ++e) {
    const std::string token = result.spec.estimators[e].token();
    for (std::size_t rep = 0; rep < result.records[e].size(); ++rep) {
      const ReplicationRecord& r = result.records[e][rep];
      out << token << ',' << rep << ',' << (r.fit_ok ? 1 : 0);
      for (int i = 0; i < 3; ++i) out << ',' << format_number(r.theta[i]);
      out << ',' << (r.scale_ok ? 1 : 0);
      for (int i = 0; i < 3; ++i) out << ',' << format_number(r.se[i]);
      out << "\n";
    }
  }
  return out.str();
}

/// key = value sidecar describing the run; spec_hash is the FNV-1a of the
/// experiment spec text when one was used.
inline std::string render_run_meta(const ExperimentResult& result,
                                   std::string_view spec_text) {
  std::ostringstream out;
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(spec_text)));
  out << "version = " << kVersion << "\n";
  out << "spec_hash = " << hash_buf << "\n";
  out << "n = " << result.spec.n << "\n";
  out << "replications = " << result.spec.replications << "\n";
  out << "dist = " << result.spec.dist.name() << "\n";
  out << "theta0 = " << format_number(result.spec.theta0.omega) << ", "
      << format_number(result.spec.theta0.alpha) << ", "
      << format_number(result.spec.theta0.beta) << "\n";
  out << "seed = " << result.spec.seed << "\n";
  out << "lambda = " << format_number(result.spec.lambda) << "\n";
  out << "burn_multiple = " << result.spec.burn_multiple << "\n";
  out << "estimators = ";
  for (std::size_t e = 0; e < result.spec.estimators.size(); ++e) {
    if (e > 0) out << ", ";
    out << result.spec.estimators[e].token();
  }
  out << "\n";
  out << "hypotheses = ";
  for (std::size_t h = 0; h < result.spec.hypotheses.size(); ++h) {
    if (h > 0) out << ", ";
    out << format_number(result.spec.hypotheses[h]);
  }
  out << "\n";
  return out.str();
}

/// Single-fit report row (the `fit` subcommand output format).
inline std::string render_fit_csv(const std::string& estimator_token,
                                  const FitResult& fit,
                                  const ScaleEstimate* scale) {
  std::ostringstream out;
  out << "estimator,converged,iterations,criterion,omega,alpha,beta,"
         "se_omega,se_alpha,se_beta,trimmed_neg,trimmed_pos,trimmed_y,"
         "dropped\n";
  out << estimator_token << ',' << (fit.converged ? 1 : 0) << ','
      << fit.iterations << ',' << format_number(fit.criterion_value);
  const std::array<double, 3> th = fit.theta_hat.as_array();
  for (int i = 0; i < 3; ++i) out << ',' << format_number(th[i]);
  for (int i = 0; i < 3; ++i)
    out << ',' << format_number(scale ? scale->se[i]
                                      : std::numeric_limits<double>::quiet_NaN());
  out << ',' << fit.trim.trimmed_neg << ',' << fit.trim.trimmed_pos << ','
      << fit.trim.trimmed_y << ',' << fit.dropped_observations << "\n";
  return out.str();
}

/// Simulated series as one value per line (the `simulate` subcommand).
inline std::string render_series_csv(std::span<const double> series) {
  std::ostringstream out;
  out << "y\n";
  for (double v : series) out << format_number(v) << "\n";
  return out.str();
}

} // namespace tailgarch
