// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace piann {

/// Headered numeric table. Values are written in shortest round-trip form,
/// so parse_csv(to_csv(t)) reproduces every double exactly.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string &name) const;
  friend bool operator==(const CsvTable &, const CsvTable &) = default;
};

std::string format_double(double v);

void write_csv(std::ostream &out, const CsvTable &table);
std::string to_csv(const CsvTable &table);
CsvTable parse_csv(const std::string &text);

/// Throws std::runtime_error when the file cannot be written or read.
void save_csv(const std::filesystem::path &path, const CsvTable &table);
CsvTable load_csv(const std::filesystem::path &path);

} // namespace piann
