#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stein/core.hpp"

namespace stein {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Headerless comma-separated reals, one matrix row per line. Blank lines are
// skipped. Ragged rows and bad tokens raise ParseError with the 1-based line.
Mat parse_matrix_csv(const std::string& text, const std::string& source = "<string>");
Mat load_matrix_csv(const std::string& path);
// Vector input: a single row or a single column.
Vec load_vector_csv(const std::string& path);

// 17 significant digits, so loading gives back the same doubles.
std::string format_matrix_csv(const Mat& M);
void save_matrix_csv(const std::string& path, const Mat& M);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

std::string format_table_csv(const Table& table);
void emit_table_csv(const std::string& path, const Table& table);

std::string format_double(double v);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace stein
