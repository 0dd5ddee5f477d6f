#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace nhqb {

enum class Format { Csv, Json };

Format parse_format(const std::string& text);
std::string extension(Format f);

// Scientific notation with 17 significant digits.
std::string format_double(double x);

using Cell = std::variant<double, long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::map<std::string, std::string> metadata;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

struct WrittenFile {
  std::string name;
  std::size_t rows = 0;
};

// CSV: metadata as leading "# key=value" lines, then a header row.
// JSON: {"metadata": {...}, "columns": [...], "rows": [[...], ...]}.
WrittenFile write_table(const std::filesystem::path& dir, const std::string& stem, const Table& table,
                        Format format);

}  // namespace nhqb
