#include "keyframe/text_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "keyframe/errors.hpp"

namespace keyframe::text_io {

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("cannot format real value");
  return std::string(buf, end);
}

std::string escape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    char c = escaped[i];
    if (c != '\\' || i + 1 == escaped.size()) {
      out += c;
      continue;
    }
    char next = escaped[++i];
    switch (next) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: out += next;
    }
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_real(std::string_view text, const std::string& source,
                  std::size_t line, const std::string& field) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(source, line, field,
                     "expected a real number, got '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text, const std::string& source,
                       std::size_t line, const std::string& field) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(source, line, field,
                     "expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Table::Field* Table::find(std::string_view key) const {
  for (const auto& f : header) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

Table parse_table(std::string_view text, const std::string& source) {
  Table table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (line.front() == '#') {
      if (!table.columns.empty()) {
        throw ParseError(source, line_no, "header",
                         "header field after the column row");
      }
      auto tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw ParseError(source, line_no, std::string(line.substr(1)),
                         "header field has no value");
      }
      std::string key(line.substr(1, tab - 1));
      for (const auto& f : table.header) {
        if (f.key == key) {
          throw ParseError(source, line_no, key, "duplicate header field");
        }
      }
      table.header.push_back(
          {std::move(key), unescape(line.substr(tab + 1)), line_no});
    } else if (table.columns.empty()) {
      for (auto col : split_tabs(line)) table.columns.emplace_back(col);
      table.columns_line = line_no;
    } else {
      Table::Row row;
      row.line = line_no;
      for (auto cell : split_tabs(line)) row.cells.emplace_back(cell);
      table.rows.push_back(std::move(row));
    }
    if (end == text.size()) break;
  }
  return table;
}

}  // namespace keyframe::text_io
