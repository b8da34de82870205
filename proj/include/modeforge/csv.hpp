#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "modeforge/error.hpp"

namespace modeforge::csv {

/// Splits one CSV record; handles RFC 4180 quoting within a single line.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
    --e;
  return std::string(s.substr(b, e - b));
}

inline std::optional<double> to_double(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// A whole CSV file held in memory, header-indexed.
class Table {
 public:
  static Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  static Table parse(const std::string& text, const std::string& source = "<memory>") {
    Table t;
    t.source_ = source;
    std::size_t pos = 0;
    bool first = true;
    std::size_t line_no = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      std::string_view line(text.data() + pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (first) {
        if (line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
        for (auto& h : split_record(line)) t.header_.push_back(trim(h));
        for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_[t.header_[i]] = i;
        first = false;
        continue;
      }
      if (trim(line).empty()) continue;
      auto fields = split_record(line);
      if (fields.size() > t.header_.size()) {
        throw Error(ErrorKind::Parse, source + ": record " + std::to_string(t.rows_.size()) +
                                          " (line " + std::to_string(line_no) + ") has " +
                                          std::to_string(fields.size()) + " fields, header has " +
                                          std::to_string(t.header_.size()));
      }
      fields.resize(t.header_.size());
      t.rows_.push_back(std::move(fields));
    }
    if (first) throw Error(ErrorKind::Parse, source + ": missing header");
    return t;
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  const std::string& source() const { return source_; }

  bool has(const std::string& column) const { return index_.count(column) != 0; }

  std::optional<std::size_t> find_column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw Error(ErrorKind::Parse, source_ + ": missing column '" + name + "'");
    }
    return it->second;
  }

  const std::string& at(std::size_t row, std::size_t col) const { return rows_[row][col]; }

  double number(std::size_t row, std::size_t col) const {
    auto v = to_double(rows_[row][col]);
    if (!v) {
      throw Error(ErrorKind::Parse, source_ + ": record " + std::to_string(row) + " column '" +
                                        header_[col] + "': not a number '" + rows_[row][col] +
                                        "'");
    }
    return *v;
  }

  std::optional<double> optional_number(std::size_t row, std::size_t col) const {
    if (trim(rows_[row][col]).empty()) return std::nullopt;
    return number(row, col);
  }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

/// Accumulates rows and writes them atomically (temp file + rename), so a
/// failed stage never leaves a half-written output behind.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) buf_.push_back(',');
      buf_ += quote_if_needed(fields[i]);
    }
    buf_.push_back('\n');
  }

  const std::string& str() const { return buf_; }

  void save(const std::filesystem::path& path) const { write_atomically(path, buf_); }

  static void write_atomically(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".incomplete");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
      out << text;
      if (!out) throw Error(ErrorKind::Io, "write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::string buf_;
};

}  // namespace modeforge::csv
