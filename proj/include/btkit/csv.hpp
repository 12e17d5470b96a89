#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "btkit/error.hpp"

namespace btkit {

class CsvError : public Error {
public:
  using Error::Error;
};

class MissingFile : public Error {
public:
  explicit MissingFile(const std::string& path)
      : Error("missing file: " + path) {}
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

// RFC-4180-ish field splitting: quoted fields may contain commas, doubled
// quotes and newlines. Input is the full file content.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                       const std::string& where) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (record.size() > 1 || !record[0].empty()) {
      records.push_back(std::move(record));
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
    } else if (c == '"') {
      if (field_started && !field.empty()) {
        throw CsvError(where + ":" + std::to_string(line) +
                       ": quote inside unquoted field");
      }
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // tolerated; consumed with the following '\n' if any
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) {
    throw CsvError(where + ": unterminated quoted field");
  }
  if (field_started || !field.empty() || !record.empty()) {
    end_record();
  }
  return records;
}

}  // namespace detail

/// Reads a headered CSV file. Every row must have exactly as many fields as
/// the header.
inline CsvTable read_csv_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFile(path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MissingFile(path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  auto records = detail::parse_csv(buf.str(), path.string());
  if (records.empty()) {
    throw CsvError(path.string() + ": missing header row");
  }
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw CsvError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                     std::to_string(records[r].size()) + " fields, expected " +
                     std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

/// Reads a file made of blank-line-separated CSV sections, each with its own
/// header (the geo.csv layout).
inline std::vector<CsvTable> read_csv_sections(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFile(path.string());
  }
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<std::string> chunks;
  std::string current;
  std::istringstream lines(text);
  std::string linebuf;
  while (std::getline(lines, linebuf)) {
    if (!linebuf.empty() && linebuf.back() == '\r') linebuf.pop_back();
    if (linebuf.empty()) {
      if (!current.empty()) chunks.push_back(std::move(current));
      current.clear();
    } else {
      current += linebuf;
      current += '\n';
    }
  }
  if (!current.empty()) chunks.push_back(std::move(current));

  std::vector<CsvTable> tables;
  for (const auto& chunk : chunks) {
    auto records = detail::parse_csv(chunk, path.string());
    if (records.empty()) continue;
    CsvTable table;
    table.header = records.front();
    for (std::size_t r = 1; r < records.size(); ++r) {
      if (records[r].size() != table.header.size()) {
        throw CsvError(path.string() + ": section row has " +
                       std::to_string(records[r].size()) + " fields, expected " +
                       std::to_string(table.header.size()));
      }
      table.rows.push_back(records[r]);
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_quote(row[i]);
  }
  out << '\n';
}

inline void write_csv_file(const std::filesystem::path& path,
                           const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CsvError("cannot open for writing: " + path.string());
  }
  write_csv_row(out, header);
  for (const auto& row : rows) write_csv_row(out, row);
}

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace btkit
