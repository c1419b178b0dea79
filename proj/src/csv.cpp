#include "bkf/csv.hpp"

#include "bkf/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace bkf::csv {

long Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<long>(i);
  }
  return -1;
}

namespace {

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string> split_record(std::string_view line, std::string_view source,
                                      std::size_t line_no) {
  std::vector<std::string> out;
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
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw Error(ErrorCode::ParseError,
                std::string(source) + ":" + std::to_string(line_no) + ": unterminated quote");
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

Table parse(std::string_view text, std::string_view source) {
  Table table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = trim_cr(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) {
      if (nl == std::string_view::npos) break;
      continue;
    }
    if (!have_header) {
      if (line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
      table.header = split_record(line, source, line_no);
      have_header = true;
    } else {
      auto rec = split_record(line, source, line_no);
      if (rec.size() != table.header.size()) {
        throw Error(ErrorCode::ParseError,
                    std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, found " +
                        std::to_string(rec.size()));
      }
      table.rows.push_back(std::move(rec));
    }
    if (nl == std::string_view::npos) break;
  }
  if (!have_header) {
    throw Error(ErrorCode::ParseError, std::string(source) + ": missing header row");
  }
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string format(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format(long value) { return std::to_string(value); }

double parse_double(std::string_view field, std::string_view source, std::size_t line,
                    std::string_view column) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error(ErrorCode::ParseError, std::string(source) + ":" + std::to_string(line) +
                                           ": column '" + std::string(column) +
                                           "': not a number: '" + std::string(field) + "'");
  }
  return value;
}

Writer& Writer::field(std::string_view text) {
  if (!first_) os_ << ',';
  first_ = false;
  if (text.find_first_of(",\"\n") != std::string_view::npos) {
    os_ << '"';
    for (const char c : text) {
      if (c == '"') os_ << '"';
      os_ << c;
    }
    os_ << '"';
  } else {
    os_ << text;
  }
  return *this;
}

void Writer::end_row() {
  os_ << '\n';
  first_ = true;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::FileNotFound, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Dataset read_dataset(const std::filesystem::path& path, std::string_view response_column,
                     ResponseKind kind) {
  const Table table = read(path);
  const std::string source = path.string();
  const long ycol = table.column(response_column);
  if (ycol < 0) {
    throw Error(ErrorCode::ParseError, source + ": response column '" +
                                           std::string(response_column) + "' not found in header");
  }
  const auto n = static_cast<Index>(table.rows.size());
  const auto p = static_cast<Index>(table.header.size()) - 1;
  Dataset data;
  data.response = kind;
  data.x.resize(n, p);
  data.y.resize(n);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<long>(c) != ycol) data.feature_names.push_back(table.header[c]);
  }
  for (Index i = 0; i < n; ++i) {
    const auto& rec = table.rows[static_cast<std::size_t>(i)];
    const std::size_t line = static_cast<std::size_t>(i) + 2;
    Index j = 0;
    for (std::size_t c = 0; c < rec.size(); ++c) {
      const double v = parse_double(rec[c], source, line, table.header[c]);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": column '" +
                                               table.header[c] + "': non-finite value");
      }
      if (static_cast<long>(c) == ycol) {
        if (kind == ResponseKind::Probit && v != 0.0 && v != 1.0) {
          throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) +
                                                 ": probit response '" + table.header[c] +
                                                 "' must be 0 or 1");
        }
        data.y(i) = v;
      } else {
        data.x(i, j++) = v;
      }
    }
  }
  return data;
}

}  // namespace bkf::csv
