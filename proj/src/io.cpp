#include "tgm/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tgm/common.hpp"

namespace tgm {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

void check_cell(const std::string& cell, const char* what) {
  require(cell.find(',') == std::string::npos && cell.find('\n') == std::string::npos,
          std::string("csv: ") + what + " contains a separator: '" + cell + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string CsvTable::cell(double v) { return format_double(v); }

double CsvTable::num(std::size_t r, std::size_t c) const {
  require(r < rows.size() && c < rows[r].size(), "csv: cell index out of range");
  const std::string& s = rows[r][c];
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end != s.c_str() && *end == '\0' && errno != ERANGE,
          "csv: cell '" + s + "' is not numeric");
  return v;
}

void CsvTable::push_row(const std::vector<double>& values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(cell(v));
  rows.push_back(std::move(row));
}

std::string csv_to_string(const CsvTable& table) {
  require(!table.columns.empty(), "csv: no columns");
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    check_cell(table.columns[c], "column name");
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    require(row.size() == table.columns.size(), "csv: row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c) {
      check_cell(row[c], "cell");
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  for (const auto& note : table.footer) {
    require(note.find('\n') == std::string::npos, "csv: footer line contains a newline");
    out += "# ";
    out += note;
    out += '\n';
  }
  return out;
}

CsvTable csv_from_string(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t skip = 1;
      if (line.size() > 1 && line[1] == ' ') skip = 2;
      table.footer.push_back(line.substr(skip));
      continue;
    }
    if (!saw_header) {
      table.columns = split_line(line);
      saw_header = true;
      continue;
    }
    auto cells = split_line(line);
    require(cells.size() == table.columns.size(), "csv: row width mismatch");
    table.rows.push_back(std::move(cells));
  }
  require(saw_header, "csv: missing header row");
  return table;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open '" + tmp + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) {
      out.close();
      std::remove(tmp.c_str());
      require(false, "write to '" + tmp + "' failed");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    const std::string why = std::strerror(errno);
    std::remove(tmp.c_str());
    require(false, "rename to '" + path + "' failed: " + why);
  }
}

void write_csv(const std::string& path, const CsvTable& table) {
  write_text_atomic(path, csv_to_string(table));
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return csv_from_string(buf.str());
}

}  // namespace tgm
