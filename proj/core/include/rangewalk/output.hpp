#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rangewalk {

using CsvValue = std::variant<std::int64_t, double, std::string>;

// A series destined for a CSV file: header line, fixed column order, floats
// with 17 significant digits, LF line endings.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<CsvValue>> rows;

  void add_row(std::vector<CsvValue> row);
};

std::string format_float17(double v);
std::string render_csv(const CsvTable& table);

void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

// Deterministic JSON rendering (insertion-ordered keys, trailing newline).
std::string render_json(const nlohmann::ordered_json& j);

}  // namespace rangewalk
