#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ordr2/dataset.hpp"
#include "ordr2/errors.hpp"

namespace ordr2 {

/// How the response column of a CSV is interpreted.
enum class ResponseType { Continuous, Binary, Ordinal };

inline ResponseType parse_response_type(std::string_view text) {
  if (text == "linear" || text == "continuous") return ResponseType::Continuous;
  if (text == "binary") return ResponseType::Binary;
  if (text == "ordinal") return ResponseType::Ordinal;
  throw DomainError("unknown response kind '" + std::string(text) + "'");
}

/// Column written by the sensory pipeline; loading drops it and sets
/// `Dataset::preprocessed`.
inline constexpr std::string_view kPreprocessedMarker = "__preprocessed__";

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline bool parse_number(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size() && std::isfinite(value);
}

inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a header-plus-rows numeric CSV. Predictor columns keep file order.
/// Parse errors cite the 1-based data row (header not counted).
inline Dataset read_csv(std::istream& in, const std::string& response_column, ResponseType type) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!detail::trim(line).empty()) {
      header = detail::split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("file is empty");
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
    header[0].erase(0, 3);
  }

  const auto response_it = std::find(header.begin(), header.end(), response_column);
  if (response_it == header.end()) throw ParseError("missing response column '" + response_column + "'", 0, response_column);
  const std::size_t response_pos = static_cast<std::size_t>(response_it - header.begin());
  const auto marker_it = std::find(header.begin(), header.end(), std::string(kPreprocessedMarker));
  const bool preprocessed = marker_it != header.end();
  const std::size_t marker_pos = static_cast<std::size_t>(marker_it - header.begin());

  std::vector<std::string> names;
  std::vector<std::size_t> positions;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == response_pos || (preprocessed && j == marker_pos)) continue;
    names.push_back(header[j]);
    positions.push_back(j);
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> response;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                           " cells, found " + std::to_string(cells.size()),
                       row);
    }
    std::vector<double> values(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!detail::parse_number(cells[j], values[j])) {
        throw ParseError("row " + std::to_string(row) + ", column '" + header[j] + "': non-numeric cell '" +
                             cells[j] + "'",
                         row, header[j]);
      }
    }
    response.push_back(values[response_pos]);
    std::vector<double> predictors;
    for (std::size_t pos : positions) predictors.push_back(values[pos]);
    rows.push_back(std::move(predictors));
  }
  if (rows.empty()) throw ParseError("file has a header but no data rows");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }

  Dataset data;
  if (type == ResponseType::Continuous) {
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(response.data(), static_cast<Eigen::Index>(response.size()));
    data = Dataset::continuous_response(std::move(names), std::move(x), std::move(y), response_column);
  } else {
    std::vector<int> codes(response.size());
    for (std::size_t i = 0; i < response.size(); ++i) {
      const double v = response[i];
      if (v != std::floor(v) || v < 1.0) {
        throw ParseError("row " + std::to_string(i + 1) + ": response must be an integer code >= 1", i + 1,
                         response_column);
      }
      codes[i] = static_cast<int>(v);
    }
    const int max_code = *std::max_element(codes.begin(), codes.end());
    if (type == ResponseType::Binary && max_code > 2) {
      throw ParseError("binary response must be coded 1/2", 0, response_column);
    }
    data = Dataset::ordinal_response(std::move(names), std::move(x), std::move(codes),
                                     type == ResponseType::Binary ? 2 : 0, response_column);
  }
  data.preprocessed = preprocessed;
  return data;
}

inline Dataset load_csv(const std::string& path, const std::string& response_column, ResponseType type) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_csv(in, response_column, type);
}

/// Writes predictors then the response, 17 significant digits.
inline void write_csv(std::ostream& out, const Dataset& data) {
  for (const auto& name : data.names) out << name << ',';
  out << data.response_name;
  if (data.preprocessed) out << ',' << kPreprocessedMarker;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) out << detail::format_full(data.x(i, j)) << ',';
    if (data.kind == ResponseKind::Continuous) {
      out << detail::format_full(data.continuous(i));
    } else {
      out << data.ordinal[static_cast<std::size_t>(i)];
    }
    if (data.preprocessed) out << ",1";
    out << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  write_csv(out, data);
}

// ---------------------------------------------------------------------------
// Boar-taint sensory pipeline

struct RatingBin {
  double lower;
  double upper;
  bool closed_right;

  bool contains(double v) const { return v >= lower && (closed_right ? v <= upper : v < upper); }
};

struct SensoryPipelineSpec {
  std::string androstenone_column = "androstenone";
  std::string skatole_column = "skatole";
  std::string rating_column = "rating";
  double dichotomy_cutpoint = 2.0;
  std::vector<RatingBin> ordinal_bins{{0, 1, false}, {1, 2, false}, {2, 3, false}, {3, 4, false}, {4, 5, true}};

  void validate() const {
    if (ordinal_bins.size() < 2) throw DomainError("need at least two rating bins");
    for (std::size_t k = 0; k < ordinal_bins.size(); ++k) {
      const auto& b = ordinal_bins[k];
      if (!(b.lower < b.upper)) throw DomainError("rating bin has empty range");
      const bool last = k + 1 == ordinal_bins.size();
      if (b.closed_right != last) throw DomainError("only the last rating bin is closed on the right");
      if (!last && ordinal_bins[k + 1].lower != b.upper) throw DomainError("rating bins must be contiguous");
    }
  }
};

struct SensoryData {
  Dataset binary;
  Dataset ordinal;
  Dataset linear;
  long excluded_androstenone_zero = 0;
  long excluded_skatole_zero = 0;  // among rows with positive androstenone
};

namespace detail {

inline Eigen::VectorXd standardize(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
  if (!(sd > 0.0)) throw DegenerateResponseError("cannot standardize a constant column");
  return (v.array() - mean) / sd;
}

}  // namespace detail

/// Drops rows whose androstenone (or skatole) is zero, log-transforms and
/// standardizes both compounds, appends their product, and derives the
/// binary, ordinal and continuous rating responses.
inline SensoryData preprocess_sensory(const Dataset& raw, const SensoryPipelineSpec& spec = {}) {
  spec.validate();
  if (raw.preprocessed) throw SchemaError("dataset is already preprocessed; refusing to standardize twice");
  if (raw.kind != ResponseKind::Continuous) throw SchemaError("raw rating must be a continuous response");
  if (raw.response_name != spec.rating_column) {
    throw SchemaError("response column is '" + raw.response_name + "', expected '" + spec.rating_column + "'");
  }
  const Eigen::Index an_col = raw.column_index(spec.androstenone_column);
  const Eigen::Index sk_col = raw.column_index(spec.skatole_column);

  SensoryData out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < raw.n(); ++i) {
    const double an = raw.x(i, an_col);
    const double sk = raw.x(i, sk_col);
    const double rating = raw.continuous(i);
    if (an < 0.0 || sk < 0.0) throw DomainError("row " + std::to_string(i + 1) + ": negative concentration");
    if (rating < spec.ordinal_bins.front().lower || rating > spec.ordinal_bins.back().upper) {
      throw DomainError("row " + std::to_string(i + 1) + ": rating outside the binned range");
    }
    if (an == 0.0) {
      ++out.excluded_androstenone_zero;
      continue;
    }
    if (sk == 0.0) {
      ++out.excluded_skatole_zero;
      continue;
    }
    keep.push_back(i);
  }
  if (keep.size() < 2) throw EmptyDataError("fewer than two rows remain after exclusions");

  const auto n = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd log_an(n), log_sk(n), rating(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    log_an(k) = std::log(raw.x(keep[static_cast<std::size_t>(k)], an_col));
    log_sk(k) = std::log(raw.x(keep[static_cast<std::size_t>(k)], sk_col));
    rating(k) = raw.continuous(keep[static_cast<std::size_t>(k)]);
  }
  Eigen::MatrixXd x(n, 3);
  x.col(0) = detail::standardize(log_an);
  x.col(1) = detail::standardize(log_sk);
  x.col(2) = x.col(0).cwiseProduct(x.col(1));
  const std::vector<std::string> names{"AN", "SK", "AN:SK"};

  std::vector<int> binary(static_cast<std::size_t>(n)), ordinal(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    binary[idx] = rating(k) >= spec.dichotomy_cutpoint ? 2 : 1;
    for (std::size_t b = 0; b < spec.ordinal_bins.size(); ++b) {
      if (spec.ordinal_bins[b].contains(rating(k))) {
        ordinal[idx] = static_cast<int>(b) + 1;
        break;
      }
    }
  }
  const int bins = static_cast<int>(spec.ordinal_bins.size());
  out.binary = Dataset::ordinal_response(names, x, std::move(binary), 2, spec.rating_column + "_binary");
  out.ordinal = Dataset::ordinal_response(names, x, std::move(ordinal), bins, spec.rating_column + "_ordinal");
  out.linear = Dataset::continuous_response(names, x, rating, spec.rating_column);
  out.binary.preprocessed = out.ordinal.preprocessed = out.linear.preprocessed = true;
  return out;
}

}  // namespace ordr2
