#pragma once

#include "bkf/types.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bkf::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // -1 when absent
  long column(std::string_view name) const;
};

/// Reads a comma-separated file whose first record is a header. Double-quoted
/// fields are supported. Throws FileNotFound / ParseError (with line number).
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view source = "<memory>");

/// Shortest representation that round-trips exactly.
std::string format(double value);
std::string format(long value);

/// Throws ParseError naming the source, line and column.
double parse_double(std::string_view field, std::string_view source, std::size_t line,
                    std::string_view column);

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  Writer& field(std::string_view text);
  Writer& field(double value) { return field(format(value)); }
  Writer& field(long value) { return field(format(value)); }
  Writer& field(int value) { return field(format(static_cast<long>(value))); }
  Writer& field(std::size_t value) { return field(format(static_cast<long>(value))); }
  void end_row();

 private:
  std::ostream& os_;
  bool first_ = true;
};

/// Writes to a sibling temporary file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Dataset CSV: header row, one named response column and numeric feature columns.
Dataset read_dataset(const std::filesystem::path& path, std::string_view response_column,
                     ResponseKind kind);

}  // namespace bkf::csv
