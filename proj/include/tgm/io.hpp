#pragma once

#include <string>
#include <vector>

namespace tgm {

// Table with a header row, string cells, and optional trailing comment lines;
// the on-disk form is plain CSV, '.' decimals, LF endings, comments prefixed
// '# '.  Numeric content goes through cell()/num() so every writer formats
// doubles the same way.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footer;

  static std::string cell(double v);             // shortest %.12g form
  double num(std::size_t r, std::size_t c) const;  // parse cell, throw when not numeric
  void push_row(const std::vector<double>& values);
};

std::string format_double(double v);

// serialize / parse; the two directions are exact inverses on tables whose
// cells contain no separator characters
std::string csv_to_string(const CsvTable& table);
CsvTable csv_from_string(const std::string& text);

// writes go to a temp file in the same directory and are renamed into place,
// so a failed run never leaves a partial artifact
void write_text_atomic(const std::string& path, const std::string& content);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace tgm
