#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "ccpstress/common.hpp"

namespace ccps::csv {

struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw SchemaError(path + ": missing column '" + name + "'");
  }

  const std::string& cell(size_t row, int col) const { return rows[row][col]; }

  double number(size_t row, int col) const {
    const std::string& s = rows[row][col];
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw SchemaError(path + ": non-numeric value '" + s + "' in column '" +
                        header[col] + "', row " + std::to_string(row + 2));
    return v;
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  Table t;
  t.path = path;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw SchemaError(path + ": row " + std::to_string(t.rows.size() + 2) +
                          " has " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw SchemaError(path + ": empty file");
  return t;
}

/// Row-at-a-time writer with full-precision decimal floats and '\n' endings,
/// so identical data always produces identical bytes.
class Writer {
 public:
  Writer(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path);
    write_row_strings(header);
  }

  Writer& field(const std::string& s) {
    if (!row_.empty()) row_ += ',';
    row_ += s;
    return *this;
  }
  Writer& field(double v) { return field(format_double(v)); }
  Writer& field(int v) { return field(std::to_string(v)); }
  Writer& field(size_t v) { return field(std::to_string(v)); }

  void end_row() {
    row_ += '\n';
    out_ << row_;
    row_.clear();
  }

 private:
  void write_row_strings(const std::vector<std::string>& fields) {
    for (const auto& f : fields) field(f);
    end_row();
  }
  std::ofstream out_;
  std::string row_;
};

}  // namespace ccps::csv
