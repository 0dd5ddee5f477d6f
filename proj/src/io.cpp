#include "nhqb/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "nhqb/errors.hpp"

namespace nhqb {

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::Csv;
  if (text == "json") return Format::Json;
  throw DomainError("unknown format '" + text + "' (expected csv or json)");
}

std::string extension(Format f) { return f == Format::Csv ? ".csv" : ".json"; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", x);
  return buf;
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* l = std::get_if<long>(&c)) return std::to_string(*l);
  return std::get<std::string>(c);
}

nlohmann::json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return format_double(*d);
  }
  if (const auto* l = std::get_if<long>(&c)) return *l;
  return std::get<std::string>(c);
}

}  // namespace

WrittenFile write_table(const std::filesystem::path& dir, const std::string& stem, const Table& table,
                        Format format) {
  const std::string name = stem + extension(format);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw DomainError("cannot write " + (dir / name).string());
  if (format == Format::Csv) {
    for (const auto& [k, v] : table.metadata) out << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
      out << "\n";
    }
  } else {
    nlohmann::ordered_json j;
    j["metadata"] = table.metadata;
    j["columns"] = table.columns;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& c : row) r.push_back(cell_json(c));
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    out << j.dump(1) << "\n";
  }
  if (!out) throw DomainError("failed while writing " + (dir / name).string());
  return {name, table.rows.size()};
}

}  // namespace nhqb
