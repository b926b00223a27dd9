#include "rangewalk/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rangewalk/errors.hpp"

namespace rangewalk {

void CsvTable::add_row(std::vector<CsvValue> row) {
  if (row.size() != columns.size()) {
    throw Error("csv row width does not match header");
  }
  rows.push_back(std::move(row));
}

std::string format_float17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string render_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (const auto* iv = std::get_if<std::int64_t>(&row[i])) {
        out += std::to_string(*iv);
      } else if (const auto* dv = std::get_if<double>(&row[i])) {
        out += format_float17(*dv);
      } else {
        out += std::get<std::string>(row[i]);
      }
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);  // binary: LF endings everywhere
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create output directory '" + path + "': " + ec.message());
}

std::string render_json(const nlohmann::ordered_json& j) {
  return j.dump(2) + "\n";
}

}  // namespace rangewalk
