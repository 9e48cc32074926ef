#pragma once

// Shared helpers for the tab-separated text formats used by every file this
// library reads or writes.
//
// All formats share one layout:
//
//   #key<TAB>value          header fields, one per line
//   col_a<TAB>col_b...      column header row
//   v_a<TAB>v_b...          data rows
//
// String values escape '\\', '\t', '\n' and '\r'. Reals are written in the
// shortest form that parses back to the identical double.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace keyframe::text_io {

std::string format_real(double value);
std::string escape(std::string_view raw);
std::string unescape(std::string_view escaped);

std::vector<std::string_view> split_tabs(std::string_view line);

/// Strict parsers: the whole field must be consumed. They throw ParseError
/// naming `source`, `line` and `field`.
double parse_real(std::string_view text, const std::string& source,
                  std::size_t line, const std::string& field);
std::int64_t parse_int(std::string_view text, const std::string& source,
                       std::size_t line, const std::string& field);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// A parsed "#key<TAB>value" header plus the data rows that follow the
/// column header row.
struct Table {
  struct Field {
    std::string key;
    std::string value;  // unescaped
    std::size_t line = 0;
  };
  struct Row {
    std::vector<std::string> cells;
    std::size_t line = 0;
  };

  std::vector<Field> header;
  std::vector<std::string> columns;
  std::size_t columns_line = 0;
  std::vector<Row> rows;

  const Field* find(std::string_view key) const;
};

/// Parses the shared layout. Blank lines are skipped. `source` names the
/// input in error messages.
Table parse_table(std::string_view text, const std::string& source);

}  // namespace keyframe::text_io
