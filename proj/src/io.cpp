#include "stein/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stein {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

Mat parse_matrix_csv(const std::string& text, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string tok = trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                                 : comma - start));
      double v = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(source + ": line " + std::to_string(lineno) + ": bad number '" + tok + "'", lineno);
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(source + ": line " + std::to_string(lineno) + ": expected " +
                           std::to_string(rows.front().size()) + " fields, found " + std::to_string(row.size()),
                       lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source + ": no data", 0);
  Mat M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

Mat load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_matrix_csv(buf.str(), path);
}

Vec load_vector_csv(const std::string& path) {
  const Mat M = load_matrix_csv(path);
  if (M.cols() != 1 && M.rows() != 1) throw std::runtime_error(path + ": expected a single row or column");
  return Eigen::Map<const Vec>(M.data(), M.size());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_matrix_csv(const Mat& M) {
  std::string out;
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out += ',';
      out += format_double(M(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void save_matrix_csv(const std::string& path, const Mat& M) { write_text_file(path, format_matrix_csv(M)); }

std::string format_table_csv(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out += ',';
    out += table.columns[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::invalid_argument("table row width mismatch");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

void emit_table_csv(const std::string& path, const Table& table) { write_text_file(path, format_table_csv(table)); }

}  // namespace stein
