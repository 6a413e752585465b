#ifndef COXFOLD_CSV_HPP
#define COXFOLD_CSV_HPP

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"
#include "survival_data.hpp"
#include "types.hpp"

namespace coxfold {

// ============================ formatting ============================

/**
 * Shortest decimal string that parses back to exactly the same value
 * (std::to_chars with no precision argument).  All CSV output goes through
 * this so written artifacts can be re-read bit-exactly.
 */
template <class T>
std::string format_number(T v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<double>(v));
  return std::string(buf, res.ptr);
}

inline std::string format_number(Eigen::Index v) { return std::to_string(v); }

// ============================ ingestion ============================

/** Column mapping for ingest_csv; empty feature list means "all others". */
struct CsvSchema {
  std::string time_column = "time";
  std::string status_column = "status";
  std::vector<std::string> feature_columns;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = (comma == std::string::npos) ? line.size() : comma;
    cells.emplace_back(trim(std::string_view(line).substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t line_no,
                         const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last || cell.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ", column '" +
                     column + "': cannot parse '" + cell + "' as a number");
  }
  return value;
}

}  // namespace detail

/**
 * Read a right-censored sample from CSV text.
 *
 * Requirements: a header row; a time column and a status column (names set
 * by the schema, defaults "time"/"status"); every other column is a numeric
 * feature unless the schema lists feature columns explicitly.  Values are
 * '.'-decimal numbers; status must be exactly 0 or 1.
 *
 * Errors carry 1-based line numbers (the header is line 1).
 */
template <class T = double>
Dataset<T> ingest_csv(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("empty input: no header row");
  }
  const std::vector<std::string> header = detail::split_csv_line(line);
  const auto find_col = [&](const std::string& name) -> Eigen::Index {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return static_cast<Eigen::Index>(c);
    }
    return -1;
  };

  const Eigen::Index time_col = find_col(schema.time_column);
  if (time_col < 0) {
    throw SchemaError("missing required column '" + schema.time_column + "'");
  }
  const Eigen::Index status_col = find_col(schema.status_column);
  if (status_col < 0) {
    throw SchemaError("missing required column '" + schema.status_column + "'");
  }

  std::vector<Eigen::Index> feat_cols;
  std::vector<std::string> feat_names;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      if (ci == time_col || ci == status_col) continue;
      feat_cols.push_back(ci);
      feat_names.push_back(header[c]);
    }
  } else {
    for (const std::string& name : schema.feature_columns) {
      const Eigen::Index ci = find_col(name);
      if (ci < 0) {
        throw SchemaError("missing required column '" + name + "'");
      }
      feat_cols.push_back(ci);
      feat_names.push_back(name);
    }
  }
  if (feat_cols.empty()) {
    throw SchemaError("no feature columns: need at least one besides '" +
                      schema.time_column + "' and '" + schema.status_column +
                      "'");
  }

  std::vector<T> times;
  std::vector<int> statuses;
  std::vector<T> xflat;  // row-major staging
  const std::size_t pf = feat_cols.size();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " columns, got " +
                        std::to_string(cells.size()));
    }
    const double t = detail::parse_cell(
        cells[static_cast<std::size_t>(time_col)], line_no, schema.time_column);
    if (!std::isfinite(t) || t < 0.0) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": time must be finite and nonnegative");
    }
    const double st = detail::parse_cell(cells[static_cast<std::size_t>(status_col)],
                                         line_no, schema.status_column);
    if (st != 0.0 && st != 1.0) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": status must be 0 or 1, got '" +
                            cells[static_cast<std::size_t>(status_col)] + "'");
    }
    times.push_back(static_cast<T>(t));
    statuses.push_back(static_cast<int>(st));
    for (std::size_t f = 0; f < pf; ++f) {
      const auto c = static_cast<std::size_t>(feat_cols[f]);
      const double v = detail::parse_cell(cells[c], line_no, feat_names[f]);
      if (!std::isfinite(v)) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ", column '" + feat_names[f] +
                              "': non-finite value");
      }
      xflat.push_back(static_cast<T>(v));
    }
  }

  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  const Eigen::Index p = static_cast<Eigen::Index>(pf);
  vec_t<T> tv(n);
  Eigen::Matrix<int, Eigen::Dynamic, 1> sv(n);
  mat_t<T> xv(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    tv[i] = times[static_cast<std::size_t>(i)];
    sv[i] = statuses[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j) {
      xv(i, j) = xflat[static_cast<std::size_t>(i * p + j)];
    }
  }
  return Dataset<T>(std::move(tv), std::move(sv), std::move(xv),
                    std::move(feat_names));
}

/** ingest_csv from a file path. */
template <class T = double>
Dataset<T> ingest_csv_file(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) {
    throw SchemaError("cannot open input file '" + path + "'");
  }
  return ingest_csv<T>(in, schema);
}

// ============================ writers ============================

/** Coefficients as "index,name,value" rows, one per covariate. */
template <class T>
void write_coefficients(std::ostream& out, const Dataset<T>& data,
                        const vec_t<T>& beta) {
  out << "index,name,value\n";
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    out << j << ',' << data.feature_name(j) << ',' << format_number(beta[j])
        << '\n';
  }
}

/** Read back a coefficient file produced by write_coefficients. */
template <class T = double>
vec_t<T> read_coefficients(std::istream& in, Eigen::Index p) {
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("empty coefficient file");
  }
  vec_t<T> beta = vec_t<T>::Zero(p);
  std::vector<bool> seen(static_cast<std::size_t>(p), false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": expected 3 columns (index,name,value)");
    }
    const double ji = detail::parse_cell(cells[0], line_no, "index");
    const auto j = static_cast<Eigen::Index>(ji);
    if (ji != static_cast<double>(j) || j < 0 || j >= p) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": coefficient index out of range");
    }
    beta[j] = static_cast<T>(detail::parse_cell(cells[2], line_no, "value"));
    seen[static_cast<std::size_t>(j)] = true;
  }
  for (std::size_t j = 0; j < seen.size(); ++j) {
    if (!seen[j]) {
      throw ValidationError("coefficient file is missing index " +
                            std::to_string(j));
    }
  }
  return beta;
}

/** Step function as "time,jump,cumulative" rows. */
template <class T>
void write_step_function(std::ostream& out, const StepFunction<T>& sf) {
  out << "time,jump,cumulative\n";
  T acc = T(0);
  for (Eigen::Index j = 0; j < sf.jump_times.size(); ++j) {
    acc += sf.jump_sizes[j];
    out << format_number(sf.jump_times[j]) << ','
        << format_number(sf.jump_sizes[j]) << ',' << format_number(acc)
        << '\n';
  }
}

}  // namespace coxfold

#endif  // COXFOLD_CSV_HPP
